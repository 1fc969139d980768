"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 invalid input or failed
precondition, 3 solver non-convergence. ``WULFFKIT_THREADS`` caps the number
of BLAS/LAPACK threads.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .anisotropy import convexity_check, wulff_map
from .errors import ConfigurationError, DomainError, WulffkitError
from .io import (
    export_surface,
    load_density,
    load_json_arg,
    load_surface,
    make_report,
    write_grid_values,
    write_report,
)
from .solver import SolverConfig, constrained_flow, newton_solve, wulff_fit
from .sphere import build_grid
from .surface import camc_lambda, discriminant_field, energy, from_support, volume
from .umbilic import detect_umbilics, poincare_hopf_sum, pointwise_w_field, w_field
from .verify import FAULTS, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2, 3
THREADS_ENV = "WULFFKIT_THREADS"
CAMC_TOL = 1e-6

log = logging.getLogger("wulffkit")


@dataclass
class RunConfig:
    command: str
    gamma_spec: str | None = None
    surface_spec: str | None = None
    grid_n: int = 48
    output_dir: Path = Path(".")
    options: dict = field(default_factory=dict)

    def echo(self):
        return {
            "gamma": self.gamma_spec,
            "surface": self.surface_spec,
            "grid_n": self.grid_n,
            **{k: v for k, v in sorted(self.options.items())},
        }


def _vec(v):
    return [float(x) for x in np.asarray(v).ravel()]


def _finish(cfg, payload, t0, name="report.json"):
    doc = make_report(cfg.command, cfg.echo(), payload, time.perf_counter() - t0)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_report(cfg.output_dir / name, doc)
    return doc


# ---------------------------------------------------------------------------
# commands


def cmd_wulff(cfg):
    t0 = time.perf_counter()
    grid = build_grid(cfg.grid_n)
    gamma = load_density(cfg.gamma_spec)
    W = wulff_map(gamma, grid)
    report = convexity_check(gamma, grid)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    obj = cfg.output_dir / "wulff.obj"
    nv, nt = export_surface(obj, gamma, grid, "Wulff shape")
    q = gamma.field(grid)
    payload = {
        "min_eigenvalue": report.min_eigenvalue,
        "worst_direction": _vec(report.worst_direction),
        "K_W": {"min": float(W.gauss_curvature.min()), "max": float(W.gauss_curvature.max())},
        "energy": energy(q, gamma),
        "volume": volume(q),
        "mesh": {"path": obj.name, "vertices": nv, "triangles": nt},
    }
    _finish(cfg, payload, t0)
    return EXIT_OK


def _umbilic_payload(wf, mode):
    scan = detect_umbilics(wf)
    if scan.totally_umbilic:
        return {"status": "totally A-umbilic", "mode": mode, "tolerance": scan.tol, "points": []}, None
    ph = poincare_hopf_sum(wf)
    umb = {
        "status": "isolated" if len(scan) else "none",
        "mode": mode,
        "tolerance": scan.tol,
        "points": [p.to_dict() for p in scan],
    }
    ph_payload = {
        "total": ph.total,
        "partial": ph.partial,
        "contradiction": ph.contradiction,
        "singularities": len(ph.singularities),
    }
    return umb, ph_payload


def cmd_analyze(cfg):
    t0 = time.perf_counter()
    grid = build_grid(cfg.grid_n)
    gamma = load_density(cfg.gamma_spec)
    q = load_surface(cfg.surface_spec, gamma, grid)
    # grid-borne surfaces get differenced gamma too, matching the solver's discretization
    exact = q.analytic is not None
    S = from_support(q, exact=exact)
    lam = camc_lambda(S, gamma, exact).values
    mean = float(lam.mean())
    spread = float(np.max(np.abs(lam - mean)))
    camc = spread <= CAMC_TOL * max(1.0, abs(mean))
    if camc:
        umb, ph = _umbilic_payload(w_field(S, gamma, camc_tol=CAMC_TOL, exact=exact), "camc")
    elif cfg.options.get("pointwise"):
        umb, ph = _umbilic_payload(pointwise_w_field(S, gamma, exact), "pointwise")
    else:
        log.warning("Lambda spread %.3e exceeds the CAMC tolerance; umbilic analysis skipped", spread)
        umb, ph = {"status": "skipped: not CAMC", "mode": "none", "points": []}, None
    payload = {
        "lambda": {"min": float(lam.min()), "max": float(lam.max()), "mean": mean, "spread": spread},
        "camc": bool(camc),
        "discriminant_min": float(discriminant_field(S, gamma, exact).values.min()),
        "umbilics": umb,
        "poincare_hopf": ph,
        "wulff_fit": wulff_fit(S.q, gamma).to_dict(),
    }
    _finish(cfg, payload, t0)
    return EXIT_OK


def _solver_config(cfg, mode):
    data = load_json_arg(cfg.options["config"]) if cfg.options.get("config") else {}
    data["mode"] = mode
    if mode == "flow-fixed-volume":
        data.setdefault("max_iterations", 500)
    return SolverConfig.from_dict(data)


def _solver_output(cfg, result, t0, extra):
    nv, nt = export_surface(cfg.output_dir / "surface.obj", result.q_final, result.q_final.grid, cfg.command)
    write_grid_values(cfg.output_dir / "surface.grid", result.q_final)
    payload = {**result.to_dict(), **extra, "mesh": {"path": "surface.obj", "vertices": nv, "triangles": nt}}
    _finish(cfg, payload, t0)
    if not result.converged:
        print(f"no convergence: {result.message}; residual history {result.residual_history}", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_solve(cfg):
    t0 = time.perf_counter()
    lam = float(cfg.options["lambda"])
    if lam >= 0:
        raise DomainError(
            f"Lambda = {lam} excluded: a closed surface cannot have Lambda = 0, and closed convex "
            "CAMC surfaces have Lambda < 0 in this sign convention"
        )
    grid = build_grid(cfg.grid_n)
    gamma = load_density(cfg.gamma_spec)
    q0 = load_surface(cfg.surface_spec or "wulff:1", gamma, grid)
    config = _solver_config(cfg, "newton-fixed-lambda")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    result = newton_solve(gamma, lam, q0, config)
    return _solver_output(cfg, result, t0, {"config": config.to_dict()})


def cmd_flow(cfg):
    t0 = time.perf_counter()
    grid = build_grid(cfg.grid_n)
    gamma = load_density(cfg.gamma_spec)
    target = cfg.options["volume"]
    V0 = volume(gamma.field(grid)) if target == "wulff" else float(target)
    q0 = load_surface(cfg.surface_spec or '{"support": {"kind": "constant", "value": 1.0}}', gamma, grid)
    config = _solver_config(cfg, "flow-fixed-volume")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    result = constrained_flow(gamma, V0, q0, config)
    return _solver_output(cfg, result, t0, {"config": config.to_dict(), "volume": V0})


def cmd_verify(cfg):
    t0 = time.perf_counter()
    rows = run_suite(quick=cfg.options.get("quick", False), fault=cfg.options.get("inject_fault"))
    width = max(len(r.name) for r in rows)
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  value={r.value:.3e}  tol={r.tolerance:.1e}")
    passed = all(r.passed for r in rows)
    _finish(cfg, {"passed": passed, "rows": [r.to_dict() for r in rows]}, t0)
    return EXIT_OK if passed else EXIT_VERIFY


COMMANDS = {
    "wulff": cmd_wulff,
    "analyze": cmd_analyze,
    "solve": cmd_solve,
    "flow": cmd_flow,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    parser = argparse.ArgumentParser(prog="wulffkit", description="Anisotropic surface energies on convex surfaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, surface=True):
        p.add_argument("--gamma", required=True, help="density spec: JSON file or inline JSON")
        if surface:
            p.add_argument("--surface", help="JSON spec, grid-values file or wulff:R")
        p.add_argument("--grid-n", type=int, default=48, help="nodes per chart edge (default 48)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")

    common(sub.add_parser("wulff", help="build the Wulff shape"), surface=False)
    p = sub.add_parser("analyze", help="curvature, umbilic and Wulff-fit analysis of a surface")
    common(p)
    p.add_argument("--pointwise", action="store_true",
                   help="for non-CAMC surfaces, locate umbilics using the local Lambda")
    p = sub.add_parser("solve", help="Newton solve at fixed Lambda")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--config", help="solver config: JSON file or inline JSON")
    p = sub.add_parser("flow", help="volume-constrained energy descent")
    common(p)
    p.add_argument("--volume", required=True, help="target volume, or 'wulff' for the Wulff volume")
    p.add_argument("--config", help="solver config: JSON file or inline JSON")
    p = sub.add_parser("verify", help="run the built-in identity suite")
    p.add_argument("--quick", action="store_true", help="fewer samples and a coarser grid")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--inject-fault", choices=FAULTS, help=argparse.SUPPRESS)
    return parser


def config_from_args(args):
    options = {}
    if args.command == "analyze":
        options["pointwise"] = args.pointwise
    elif args.command == "solve":
        options.update({"lambda": args.lam, "config": args.config})
    elif args.command == "flow":
        options.update({"volume": args.volume, "config": args.config})
    elif args.command == "verify":
        options.update({"quick": args.quick, "inject_fault": args.inject_fault})
    return RunConfig(
        command=args.command,
        gamma_spec=getattr(args, "gamma", None),
        surface_spec=getattr(args, "surface", None),
        grid_n=getattr(args, "grid_n", 48),
        output_dir=args.out,
        options=options,
    )


def _threads():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return None
    try:
        n = int(value)
    except ValueError as exc:
        raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got {value!r}") from exc
    if n < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    return n


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        with threadpool_limits(limits=_threads()):
            return COMMANDS[cfg.command](cfg)
    except WulffkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
