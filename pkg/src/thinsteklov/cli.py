"""Command-line front end.

Usage::

    thinsteklov {curve-info,limit,thin,sweep,selftest} [--config PATH]
                [--out DIR] [--threads N] [--format csv|json]

Exit codes: 0 ok, 1 acceptance failure, 2 configuration error,
3 numeric or geometry error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields

from .convergence import default_epsilons, run_sweep, thin_spectrum
from .curve import (
    CurveSpec,
    ThicknessProfile,
    build_arclength_curve,
    gauss_bonnet_residual,
    max_epsilon,
)
from .errors import ConfigError, NumericError
from .fermiform import ThinProblemSpec, build_basis
from .limit1d import assemble_limit, limit_spectrum

EXIT_OK, EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
CONFIG_VERSION = 1


@dataclass
class RunConfig:
    """Parsed JSON run configuration; every key is optional except ``version``.

    ``b`` is the shift of the thin problem; ``limit_shift`` shifts the limit
    problem reported by ``limit`` (0 gives the unshifted eigenvalues).
    ``epsilons`` defaults to the admissible grid of the curve.
    """

    version: int = CONFIG_VERSION
    curve: dict = field(default_factory=lambda: {"kind": "circle", "radius": 1.0})
    resolution: int = 512
    epsilon: float = 0.05
    epsilons: list | None = None
    mu: float = 1.0
    b: float = 1.0
    limit_shift: float = 0.0
    M_s: int = 24
    N_t: int = 8
    M: int = 48
    k_max: int = 4
    mass_factor: float | None = None
    thickness: dict | None = None
    seed: int = 0

    @classmethod
    def from_dict(cls, data) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        if data.get("version") != CONFIG_VERSION:
            raise ConfigError(f"configuration 'version' must be {CONFIG_VERSION}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read configuration: {exc}") from exc
        return cls.from_dict(data)

    def validate(self):
        def integer(name, low):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < low:
                raise ConfigError(f"{name} must be an integer >= {low}, got {v!r}")

        def real(name, positive=False, optional=False):
            v = getattr(self, name)
            if v is None and optional:
                return
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{name} must be a finite number, got {v!r}")
            if v < 0 or (positive and v == 0):
                raise ConfigError(f"{name} must be {'positive' if positive else 'nonnegative'}, got {v}")

        integer("resolution", 16)
        integer("M_s", 1)
        integer("N_t", 1)
        integer("M", 4)
        integer("k_max", 1)
        integer("seed", 0)
        real("epsilon", positive=True)
        real("mu")
        real("b", positive=True)
        real("limit_shift")
        real("mass_factor", positive=True, optional=True)
        if self.epsilons is not None:
            if not isinstance(self.epsilons, list) or not all(
                isinstance(e, (int, float)) and not isinstance(e, bool) for e in self.epsilons
            ):
                raise ConfigError("epsilons must be a list of numbers")
        if self.thickness is not None:
            if not isinstance(self.thickness, dict) or not set(self.thickness) <= {"cos", "sin"}:
                raise ConfigError("thickness must be an object with 'cos' and optional 'sin' lists")
        CurveSpec.from_dict(self.curve)

    def curve_spec(self) -> CurveSpec:
        return CurveSpec.from_dict(self.curve)

    def profile(self) -> ThicknessProfile | None:
        if self.thickness is None:
            return None
        try:
            return ThicknessProfile(self.thickness.get("cos", [1.0]), self.thickness.get("sin", []))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"thickness: {exc}") from exc

    def to_dict(self) -> dict:
        return asdict(self)


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to a temporary file beside ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, name: str, text: str) -> None:
    if args.out:
        write_atomic(os.path.join(args.out, name), text)
    else:
        sys.stdout.write(text)


def _fmt(x) -> str:
    x = float(x)
    return repr(x) if math.isfinite(x) else ""


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _curve(cfg: RunConfig):
    return build_arclength_curve(cfg.curve_spec(), cfg.resolution)


def cmd_curve_info(cfg: RunConfig, args) -> int:
    curve = _curve(cfg)
    info = {
        "perimeter": curve.perimeter,
        "kappa_min": float(curve.kappa.min()),
        "kappa_max": float(curve.kappa.max()),
        "gauss_bonnet_residual": gauss_bonnet_residual(curve),
        "max_epsilon": max_epsilon(curve),
        "curve": cfg.curve,
        "resolution": cfg.resolution,
    }
    if args.format == "json":
        text = _json(info)
    else:
        text = _table(
            ("quantity", "value"),
            [(k, _fmt(info[k])) for k in ("perimeter", "kappa_min", "kappa_max", "gauss_bonnet_residual", "max_epsilon")],
        )
    _emit(args, f"curve_info.{args.format}", text)
    return EXIT_OK


def cmd_limit(cfg: RunConfig, args) -> int:
    curve = _curve(cfg)
    op = assemble_limit(curve, cfg.M, g=cfg.profile(), mass_factor=cfg.mass_factor)
    sp = limit_spectrum(op, cfg.k_max + 1, cfg.limit_shift)
    group_of = {i: gi for gi, grp in enumerate(sp.groups) for i in grp}
    if args.format == "json":
        text = _json(
            {
                "lambda": sp.eigenvalues.tolist(),
                "groups": [list(g) for g in sp.groups],
                "mass_factor": op.mass_factor,
                "config": cfg.to_dict(),
            }
        )
    else:
        rows = [(_fmt(v), k, group_of[k]) for k, v in enumerate(sp.eigenvalues)]
        text = _table(("lambda", "k", "cluster"), rows)
    _emit(args, f"limit.{args.format}", text)
    return EXIT_OK


def cmd_thin(cfg: RunConfig, args) -> int:
    curve = _curve(cfg)
    spec = ThinProblemSpec(curve, float(cfg.epsilon), cfg.mu, cfg.b, cfg.profile())
    res = thin_spectrum(spec, build_basis(cfg.M_s, cfg.N_t), cfg.k_max)
    if args.format == "json":
        text = _json({"epsilon": spec.epsilon, "theta": res.theta.tolist(), "config": cfg.to_dict()})
    else:
        rows = [(_fmt(v), k, _fmt(spec.epsilon)) for k, v in enumerate(res.theta)]
        text = _table(("theta", "k", "epsilon"), rows)
    _emit(args, f"thin.{args.format}", text)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    curve = _curve(cfg)
    eps = cfg.epsilons if cfg.epsilons is not None else default_epsilons(curve)
    for e in eps:
        ThinProblemSpec(curve, float(e), cfg.mu, cfg.b, cfg.profile())
    rep = run_sweep(
        curve,
        eps,
        mu=cfg.mu,
        b=cfg.b,
        M_s=cfg.M_s,
        N_t=cfg.N_t,
        k_max=cfg.k_max,
        M=cfg.M,
        g=cfg.profile(),
        mass_factor=cfg.mass_factor,
        threads=args.threads,
    )
    rep.config["seed"] = cfg.seed
    text = rep.to_json() if args.format == "json" else rep.to_csv()
    _emit(args, f"sweep.{args.format}", text)
    return EXIT_OK


def cmd_selftest(cfg: RunConfig, args) -> int:
    from .acceptance import run_all

    results = run_all(echo=lambda line: print(line, flush=True))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} acceptance criteria passed")
    if args.out:
        payload = [
            {"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
            for r in results
        ]
        write_atomic(os.path.join(args.out, "selftest.json"), _json(payload))
    return EXIT_OK if passed == len(results) else EXIT_ACCEPTANCE


COMMANDS = {
    "curve-info": cmd_curve_info,
    "limit": cmd_limit,
    "thin": cmd_thin,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thinsteklov",
        description="Thin-strip biharmonic Steklov eigenvalues and their one-dimensional limit.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON run configuration (default: unit circle)")
    parser.add_argument("--out", help="directory for report files (default: stdout)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        cfg.validate()
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
