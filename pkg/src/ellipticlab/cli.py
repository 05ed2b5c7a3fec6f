"""Command-line driver: read a problem config, run one check, write JSON and CSV reports.

Exit codes: 0 when the outcome matches ``--expect`` (default ``pass``),
1 when a mathematical check gives the other verdict, 2 on usage, config or
numerical errors.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from . import barrier as B
from . import estimates as E
from . import geometry as Geo
from . import growth as G
from . import spectral as S
from .errors import ConstructionError, EllipticLabError
from .problem import PleFunction, ProblemSpec, exponents, parse_ple

COMMANDS = ("geom", "hp-check", "estimates", "eigen", "barrier", "counterexample", "report")

# Every accepted key with its default; ``None`` marks a required key.
SCHEMA: Dict[str, Dict[str, Optional[str]]] = {
    "problem": {"manifold": "euclidean", "m": "2", "series": "", "p": "2", "sigma": "3",
                "a": "1", "V": None},
    "geom": {"radii": "0.25, 0.5, 0.75, 1"},
    "hp": {"variant": "hp1", "k_hp1": "", "k_hp3": "0", "C0": "", "theta": "1", "tau": "2"},
    "estimates": {"part": "a", "C0": "1", "k": "0", "tau": "", "delta": "4.5399929762484854e-05",
                  "ns": "100, 1000, 10000", "ts": "0.05, 0.1, 0.2"},
    "eigen": {"rhos": "0.5, 0.7, 0.9, 0.99", "tol": "1e-9", "samples": "false"},
    "barrier": {"lambda_bar": "", "eps": "", "kappas": "1, 0.5, 0.25, 0.125, 0.0625, 0.03125"},
    "output": {"dir": "out"},
}


class ConfigError(ValueError):
    """Malformed or unknown configuration; the message carries ``line:column``."""


# ---------------------------------------------------------------------------
# Configuration


def _locate(text: str, section: str, key: Optional[str] = None) -> Tuple[int, int]:
    """1-based ``(line, column)`` of a section header or of a key inside it."""
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
            if key is None and current == section:
                return i, line.index("[") + 1
        elif key is not None and current == section:
            name = stripped.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return i, line.index(key) + 1
    return 0, 0


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration: every schema key with its (possibly default) text value."""

    sections: Tuple[Tuple[str, Tuple[Tuple[str, str], ...]], ...]

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
        parser.optionxform = str
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            errors = getattr(exc, "errors", None)
            if isinstance(exc, configparser.MissingSectionHeaderError):
                detail = f"expected a [section] header before {exc.line.strip()!r}"
            elif errors:
                line = errors[0][0]
                detail = f"cannot parse {errors[0][1].strip()!r}"
            else:
                detail = exc.message if hasattr(exc, "message") else str(exc)
            where = f"{source}:{line}:1" if line else source
            raise ConfigError(f"{where}: {detail}")
        resolved = []
        for name in parser.sections():
            if name not in SCHEMA:
                line, col = _locate(text, name)
                raise ConfigError(f"{source}:{line}:{col}: unknown section [{name}]")
            for key in parser[name]:
                if key not in SCHEMA[name]:
                    line, col = _locate(text, name, key)
                    raise ConfigError(f"{source}:{line}:{col}: unknown key {key!r} in [{name}]")
        for name, keys in SCHEMA.items():
            values = []
            for key, default in keys.items():
                if parser.has_option(name, key):
                    value = parser.get(name, key).strip()
                elif default is None:
                    raise ConfigError(f"{source}: missing required key {key!r} in [{name}]")
                else:
                    value = default
                values.append((key, value))
            resolved.append((name, tuple(values)))
        return cls(tuple(resolved))

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})")
        return cls.from_text(text, source=str(path))

    def to_text(self) -> str:
        blocks = []
        for name, values in self.sections:
            lines = [f"[{name}]"] + [f"{k} = {v}" for k, v in values]
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"

    def to_dict(self) -> Dict[str, Dict[str, str]]:
        return {name: dict(values) for name, values in self.sections}

    def get(self, section: str, key: str) -> str:
        return self.to_dict()[section][key]

    def number(self, section: str, key: str) -> Optional[float]:
        raw = self.get(section, key)
        if raw == "":
            return None
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}")

    def numbers(self, section: str, key: str) -> List[float]:
        raw = self.get(section, key)
        try:
            return [float(x) for x in raw.replace(",", " ").split()]
        except ValueError:
            raise ConfigError(f"[{section}] {key}: expected a list of numbers, got {raw!r}")

    def flag(self, section: str, key: str) -> bool:
        raw = self.get(section, key).lower()
        if raw not in ("true", "false", "yes", "no", "1", "0"):
            raise ConfigError(f"[{section}] {key}: expected true or false, got {raw!r}")
        return raw in ("true", "yes", "1")


def _ple(text: str, what: str) -> PleFunction:
    try:
        return PleFunction.constant(float(text))
    except ValueError:
        pass
    try:
        return parse_ple(text)
    except EllipticLabError as exc:
        raise ConfigError(f"[problem] {what}: {exc}")


def build_spec(cfg: RunConfig) -> ProblemSpec:
    kind = cfg.get("problem", "manifold").lower()
    m = cfg.number("problem", "m")
    if m is None or m != int(m):
        raise ConfigError("[problem] m: expected an integer dimension")
    if kind == "euclidean":
        warp = Geo.WarpingFunction.euclidean()
    elif kind == "hyperbolic":
        warp = Geo.WarpingFunction.hyperbolic()
    elif kind == "series":
        warp = Geo.WarpingFunction.series(cfg.numbers("problem", "series"))
    else:
        raise ConfigError(f"[problem] manifold: expected euclidean, hyperbolic or series, got {kind!r}")
    p, sigma = cfg.number("problem", "p"), cfg.number("problem", "sigma")
    return ProblemSpec(Geo.ModelManifold(int(m), warp), exponents(p, sigma),
                       _ple(cfg.get("problem", "V"), "V"), _ple(cfg.get("problem", "a"), "a"))


# ---------------------------------------------------------------------------
# Serialisation


def _fmt(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return "%.17g" % x


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj, indent: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    obj = _plain(obj)
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    return _fmt(obj)


def write_json(path: Path, obj) -> None:
    path.write_text(dumps(obj) + "\n")


def write_csv(path: Path, rows: Sequence[dict]) -> None:
    with path.open("w", newline="") as fh:
        if not rows:
            return
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(rows[0]))
        for row in rows:
            writer.writerow([_fmt(float(v)).strip('"') if isinstance(v, (float, np.floating))
                             else v for v in row.values()])


# ---------------------------------------------------------------------------
# Commands; each returns (passed, report, {filename: rows or report})


def _hp_params(cfg: RunConfig, variant: str) -> G.HpParams:
    """HP1 and HP3 take their own log power; HP2 fixes it at beta."""
    k = {"hp1": cfg.number("hp", "k_hp1"), "hp3": cfg.number("hp", "k_hp3")}.get(variant)
    return G.HpParams(k=k, C0=cfg.number("hp", "C0"),
                      theta=cfg.number("hp", "theta"), tau=cfg.number("hp", "tau"))


def cmd_geom(cfg: RunConfig, args) -> tuple:
    spec = build_spec(cfg)
    M = spec.manifold
    rows = []
    for r in cfg.numbers("geom", "radii"):
        psi, dpsi = Geo.warp_eval(M.psi, r)
        rows.append({"r": r, "psi": psi, "dpsi": dpsi, "S": Geo.surface_area(M, r),
                     "volume": Geo.ball_volume(M, r), "mean_curvature": float(M.mean_curvature(r))})
    vols = [row["volume"] for row in rows]
    passed = all(row["psi"] > 0 for row in rows) and all(b > a for a, b in zip(vols, vols[1:]))
    return passed, {"manifold": M.to_dict(), "omega_m": M.omega_m, "rows": rows}, {"geom.csv": rows}


def cmd_hp(cfg: RunConfig, args) -> tuple:
    spec = build_spec(cfg)
    variant = args.variant or cfg.get("hp", "variant")
    rep = G.check_hp(spec, variant, _hp_params(cfg, variant))
    return rep.passed, rep.to_dict(), {"hp_table.csv": G.cells_to_rows(rep)}


def cmd_estimates(cfg: RunConfig, args) -> tuple:
    spec = build_spec(cfg)
    part = cfg.get("estimates", "part")
    C0, k, tau = (cfg.number("estimates", key) for key in ("C0", "k", "tau"))
    delta = cfg.number("estimates", "delta")
    ns = [int(n) for n in cfg.numbers("estimates", "ns")]
    i2 = E.i2_sweep(spec, C0, k, delta, ns, part=part)
    i1 = E.i1_sweep(spec, C0, k, cfg.numbers("estimates", "ts"), part=part, tau=tau)
    ledger = E.exponent_ledger(spec.p, spec.sigma, k, tau, part)
    cfg0 = E.CutoffConfig.minimal(spec.p, spec.sigma, C0, delta, ns[0], part)
    a_factor = cfg0.C1 * cfg0.t
    exact, closed = E.cancellation_factor(cfg0.C1, spec.V.leading.q, delta)
    cancel = {"lhs": exact, "rhs": closed, "relative_error": abs(exact - closed) / abs(closed)}
    report = {"part": part, "cutoff_exponent": a_factor, "I2_sweep": i2.to_dict(),
              "I1_sweep": i1.to_dict(), "exponent_ledger": ledger.to_dict(), "cancellation": cancel}
    passed = i2.passed and i1.passed and ledger.passed and cancel["relative_error"] <= 1e-12
    return passed, report, {}


def cmd_eigen(cfg: RunConfig, args) -> tuple:
    spec = build_spec(cfg)
    scan = S.eigen_scan(spec, cfg.numbers("eigen", "rhos"), tol=cfg.number("eigen", "tol"))
    rows = [e.to_row() for e in scan.rows]
    tables = {"eigen_scan.csv": rows}
    if cfg.flag("eigen", "samples"):
        for i, e in enumerate(scan.rows):
            tables[f"eigenfunction_{i}.csv"] = [{"r": r, "w": w, "dw": dw}
                                                for r, w, dw in zip(e.r, e.w, e.dw)]
    return scan.monotone, scan.to_dict(), tables


def _barrier_eps(cfg: RunConfig, spec: ProblemSpec) -> Optional[float]:
    eps = cfg.number("barrier", "eps")
    if eps is None:
        # V = C d^-(sigma+1) L^(-1 - eps (sigma-1)) fixes eps through the log power.
        eps = (-1.0 - spec.V.leading.s) / (spec.sigma - 1.0)
    return eps


def _run_barrier(cfg: RunConfig, spec: ProblemSpec) -> tuple:
    lam = cfg.number("barrier", "lambda_bar")
    eps = _barrier_eps(cfg, spec)
    try:
        glued, log = B.build_supersolution(spec, lam, eps, cfg.numbers("barrier", "kappas"))
    except ConstructionError as exc:
        return False, {"verdict": "construction failed", "reason": str(exc),
                       "actionable": exc.actionable}, {}
    rep = B.verify_supersolution(spec, glued)
    res, scale = B.pointwise_residual(glued, glued.r)
    profile = [{"r": r, "u": u, "residual": x, "scale": s}
               for r, u, x, s in zip(glued.r, glued.u, res, scale)]
    report = {"eps": eps, **glued.to_dict(), "max_scaled_residual": rep.max_scaled_residual,
              "verification": rep.to_dict(), "search": log}
    return rep.passed, report, {"u_profile.csv": profile}


def cmd_barrier(cfg: RunConfig, args) -> tuple:
    passed, report, tables = _run_barrier(cfg, build_spec(cfg))
    tables["counterexample.json"] = report
    return passed, report, tables


def cmd_counterexample(cfg: RunConfig, args) -> tuple:
    spec = build_spec(cfg)
    hp = {}
    for variant in ("hp1", "hp2", "hp3"):
        rep = G.check_hp(spec, variant, _hp_params(cfg, variant))
        hp[variant] = {"verdict": rep.verdict, "expected": "FAIL", "reason": rep.reason,
                       "fitted_log_exponent": rep.fitted_log_exponent}
    scan = S.eigen_scan(spec, cfg.numbers("eigen", "rhos"), tol=cfg.number("eigen", "tol"))
    built, bar, tables = _run_barrier(cfg, spec)
    tables["counterexample.json"] = bar
    tables["eigen_scan.csv"] = [e.to_row() for e in scan.rows]
    passed = all(h["verdict"] == "FAIL" for h in hp.values()) and scan.monotone and built
    report = {"hp": hp, "eigen_scan": scan.to_dict(), "supersolution": bar}
    return passed, report, tables


def cmd_report(cfg: RunConfig, args) -> tuple:
    out = Path(cfg.get("output", "dir"))
    rows = []
    for path in sorted(out.glob("*_report.json")):
        if path.name == "summary_report.json":
            continue
        data = json.loads(path.read_text())
        rows.append({"file": path.name, "command": data.get("command", ""),
                     "verdict": data.get("verdict", ""), "expect": data.get("expect", ""),
                     "ok": bool(data.get("ok", False))})
    passed = bool(rows) and all(r["ok"] for r in rows)
    return passed, {"reports": rows}, {"summary.csv": rows}


HANDLERS = {"geom": cmd_geom, "hp-check": cmd_hp, "estimates": cmd_estimates,
            "eigen": cmd_eigen, "barrier": cmd_barrier, "counterexample": cmd_counterexample,
            "report": cmd_report}

REPORT_NAMES = {"geom": "geom_report.json", "hp-check": "hp_report.json",
                "estimates": "estimates_report.json", "eigen": "eigen_report.json",
                "barrier": "barrier_report.json", "counterexample": "counterexample_report.json",
                "report": "summary_report.json"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ellipticlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ellipticlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI problem configuration")
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        p.add_argument("--expect", choices=("pass", "fail"), default="pass",
                       help="expected verdict; a match exits 0")
        if name == "hp-check":
            p.add_argument("--variant", choices=("hp1", "hp2", "hp3"))
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = RunConfig.from_file(args.config)
        if args.out:
            cfg = _override(cfg, "output", "dir", args.out)
        passed, report, tables = HANDLERS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (EllipticLabError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    verdict = "PASS" if passed else "FAIL"
    ok = verdict.lower() == args.expect
    out = Path(cfg.get("output", "dir"))
    out.mkdir(parents=True, exist_ok=True)
    envelope = {"tool": "ellipticlab", "version": __version__, "command": args.command,
                "verdict": verdict, "expect": args.expect.upper(), "ok": ok,
                "config": cfg.to_dict(), "result": report}
    write_json(out / REPORT_NAMES[args.command], envelope)
    for name, content in tables.items():
        if name.endswith(".csv"):
            write_csv(out / name, content)
        else:
            write_json(out / name, {"tool": "ellipticlab", "version": __version__,
                                    "config": cfg.to_dict(), **content})
    print(f"{args.command}: {verdict} (expected {args.expect.upper()}) -> {out}")
    return 0 if ok else 1


def _override(cfg: RunConfig, section: str, key: str, value: str) -> RunConfig:
    sections = tuple((name, tuple((k, value if (name, k) == (section, key) else v)
                                  for k, v in values)) for name, values in cfg.sections)
    return RunConfig(sections)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
