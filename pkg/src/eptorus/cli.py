"""Command-line entry point.

Exit codes: 0 run completed, 3 blow-up detected, 1 usage error, 2 config
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import besov, runio
from .diagnostics import BlowupCertificate, CharacteristicTracer, DirectionSpec
from .dynamics import Outcome, SimState, SnapshotCollector, integrate
from .errors import ConfigError, EPError, FormatError, MarginUnreachable
from .peakon import check_weak_form, make_test_field
from .scenarios import (
    InflationSpec,
    PeakonParams,
    build_blowup,
    build_inflation,
    build_peakon,
    hypothesis_text,
)
from .spectral import Grid

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_NUMERICAL = 4

WEAK_TOL = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _reals(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _exit_for(outcome: Outcome) -> int:
    return {Outcome.COMPLETED: EXIT_OK, Outcome.BLOWUP_DETECTED: EXIT_BLOWUP,
            Outcome.NUMERICAL_FAILURE: EXIT_NUMERICAL}[outcome]


# --- simulate / trace -----------------------------------------------------


def _load_run(config_path: str):
    doc = runio.read_config(config_path)
    doc.require("scenario.initial", "sim.t_end", "grid.n")
    grid = runio.grid_from_config(doc)
    cfg = runio.sim_config_from(doc, grid)
    snap = Path(doc["scenario.initial"])
    if not snap.is_absolute():
        snap = Path(config_path).parent / snap
    try:
        state = runio.read_snapshot(snap)
    except OSError as exc:
        raise ConfigError(f"cannot read initial snapshot {snap}: {exc.strerror}",
                          doc.lines.get("scenario.initial")) from None
    if state.grid != grid:
        raise ConfigError("initial snapshot grid does not match grid.*")
    direction = doc.get("scenario.direction")
    if direction is not None:
        if len(direction) != grid.d:
            raise ConfigError("scenario.direction has the wrong length",
                              doc.lines.get("scenario.direction"))
        direction = DirectionSpec(direction)
    x0 = doc.get("scenario.x0")
    return doc, cfg, state, direction, x0


def _report_doc(rep) -> dict:
    return {
        "outcome": rep.outcome.value,
        "reason": rep.reason.value if rep.reason else None,
        "t_final": rep.t_final,
        "steps": rep.steps,
        "cumulative_grad_integral": rep.cumulative_grad_integral,
        "message": rep.message,
    }


def cmd_simulate(args) -> int:
    doc, cfg, state, direction, x0 = _load_run(args.config)
    out = Path(args.out or doc.get("output.dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    every = args.snapshot_every or doc.get("output.snapshot_every", 0)
    observers = []
    collector = None
    if every:
        collector = SnapshotCollector(every)
        observers.append(collector)
    rep = integrate(state, cfg, observers, direction=direction,
                    x0=x0 if direction is not None else None)
    runio.write_series(rep.series, out / "series.csv")
    runio.write_json(_report_doc(rep), out / "report.json")
    runio.write_snapshot(rep.final_state, out / "final.snap")
    if collector is not None:
        for k, st in enumerate(collector.states):
            runio.write_snapshot(st, out / f"snap_{k:06d}.snap")
    print(f"{rep.outcome.value} at t={rep.t_final:.10g} after {rep.steps} steps"
          + (f" ({rep.reason.value}: {rep.message})" if rep.reason else ""))
    return _exit_for(rep.outcome)


def cmd_trace(args) -> int:
    doc, cfg, state, direction, x0 = _load_run(args.config)
    if args.x0 is not None:
        x0 = args.x0
    if x0 is None:
        x0 = (0.0,) * cfg.grid.d
    if len(x0) != cfg.grid.d:
        raise ConfigError("x0 has the wrong length")
    tracer = CharacteristicTracer(cfg.grid, x0, direction)
    rep = integrate(state, cfg, [tracer], direction=direction)
    tr = tracer.trace
    out = Path(args.out or doc.get("output.dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    cols = ["t"] + [f"x{i + 1}" for i in range(cfg.grid.d)] + ["g"]
    with open(out / "trace.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for t, x, g in zip(tr.times, tr.positions, tr.g_values):
            fh.write(",".join("%.17g" % v for v in (t, *x, g)) + "\n")
    print(f"traced {len(tr.times)} points; g: {tr.g_values[0]:.6g} -> {tr.g_values[-1]:.6g}; "
          f"{rep.outcome.value} at t={rep.t_final:.10g}")
    return _exit_for(rep.outcome)


# --- scenario -------------------------------------------------------------


def _write_scenario(out: Path, state: SimState, doc: runio.ConfigDoc) -> None:
    out.mkdir(parents=True, exist_ok=True)
    runio.write_snapshot(state, out / "initial.snap")
    doc.set("scenario.initial", "initial.snap")
    (out / "config.cfg").write_text(runio.emit_config(doc), encoding="utf-8")


def _base_doc(grid: Grid, kind: str, t_end: float) -> runio.ConfigDoc:
    doc = runio.ConfigDoc()
    doc.set("grid.n", grid.n)
    doc.set("grid.L", grid.L)
    doc.set("scenario.kind", kind)
    doc.set("sim.t_end", t_end)
    return doc


def cmd_scenario(args) -> int:
    out = Path(args.out)
    kind = args.kind
    if kind in ("blowup2d", "blowup3d"):
        d = 2 if kind == "blowup2d" else 3
        n = args.grid or (128 if d == 2 else 64)
        grid = Grid((n,) * d, 1.0)
        z = args.direction or (1,) + (0,) * (d - 1)
        if len(z) != d:
            raise ConfigError(f"--direction needs {d} entries")
        direction = DirectionSpec(z)
        u0, cert = build_blowup(grid, direction, args.margin, args.K_max, args.amplitude)
        doc = _base_doc(grid, kind, args.t_end or cert.T_bound)
        doc.set("scenario.direction", direction.z)
        doc.set("scenario.x0", cert.x0)
        doc.set("scenario.margin", args.margin)
        doc.set("scenario.K_max", args.K_max)
        doc.set("scenario.amplitude", args.amplitude)
        _write_scenario(out, SimState.from_velocity(u0, grid), doc)
        runio.write_certificate(cert, out / "certificate.json")
        print(hypothesis_text(cert))
        print(f"T_bound = {cert.T_bound:.10g}, margin = {cert.margin:.6g}")
    elif kind == "inflation":
        d = 2
        N = args.N
        n = args.grid or 8
        while n // 3 < min(besov.ETA_SUPPORT * 2.0**N, 2**14):
            n *= 2
        grid = Grid((n,) + (8,) * (d - 1), 2 * np.pi)
        spec = InflationSpec(args.eps, N, d=d)
        u0, rep = build_inflation(grid, spec)
        cert = rep.certificate
        t_end = args.t_end or (cert.T_bound if cert.holds else 1.0)
        doc = _base_doc(grid, kind, t_end)
        doc.set("scenario.direction", cert.direction.z)
        doc.set("scenario.x0", cert.x0)
        doc.set("scenario.eps", args.eps)
        doc.set("scenario.N", N)
        _write_scenario(out, SimState.from_velocity(u0, grid), doc)
        runio.write_certificate(cert, out / "certificate.json")
        print(f"d1 u1_0(0) = {rep.slope0:.10g}, ||u0||_H1 = {rep.h1_norm:.10g}, "
              f"||u0||_B = {rep.besov_norm:.10g}")
        print(hypothesis_text(cert) + (" (hypothesis unmet)" if rep.hypothesis_unmet else ""))
    elif kind == "peakon":
        n = args.grid or 256
        z = args.direction or (1, 0)
        grid = Grid((n,) * len(z), 1.0)
        u0, params = build_peakon(grid, args.M, z, args.sigma)
        doc = _base_doc(grid, kind, args.t_end or 0.2)
        doc.set("scenario.M", args.M)
        doc.set("scenario.sigma", args.sigma)
        doc.set("scenario.direction", params.z)
        _write_scenario(out, SimState.from_velocity(u0, grid), doc)
        runio.write_json({"M": params.M, "z": list(params.z), "a": params.a.tolist(),
                          "C": params.C, "sigma": params.sigma}, out / "peakon.json")
        print(f"C = {params.C:.12g}")
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown scenario {kind}")
    return EXIT_OK


# --- besov / peakon-check -------------------------------------------------


def cmd_besov(args) -> int:
    state = runio.read_snapshot(args.snapshot)
    grid = state.grid
    norms = besov.block_norms(state.u, grid, args.p)
    for j, v in zip(range(-1, len(norms) - 1), norms):
        print(f"j={j:3d}  {v:.17g}")
    params = besov.BesovParams(args.s, args.p, args.r)
    print(f"besov(s={args.s:g}, p={args.p:g}, r={args.r:g}) = "
          f"{besov.besov_norm(state.u, grid, params):.17g}")
    return EXIT_OK


def _weak_job(job):
    M, z, factor, seed, T, cells, variant = job
    params = PeakonParams(M, z)
    if factor != 1.0:
        params = params.with_speed(params.C * factor)
    field = make_test_field(seed, T, d=len(z))
    chk = check_weak_form(params, field, T, cells, variant)
    return seed, chk


def cmd_peakon_check(args) -> int:
    z = args.direction or (1, 0)
    jobs = [(args.M, z, args.speed_factor, s, args.T, args.cells, args.variant)
            for s in range(args.seed, args.seed + args.fields)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_weak_job, jobs))
    else:
        results = [_weak_job(j) for j in jobs]
    print(f"{'seed':>4}  {'extrapolated':>14}  {'scale':>12}  {'relative':>10}  {'order':>6}  verdict")
    for seed, chk in results:
        verdict = "pass" if chk.relative <= WEAK_TOL else "fail"
        print(f"{seed:4d}  {chk.extrapolated:14.6e}  {chk.scale:12.6e}  "
              f"{chk.relative:10.3e}  {chk.order:6.2f}  {verdict}")
    return EXIT_OK


# --- dispatch -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eptorus", description="Euler-Poincare experiments on the torus.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="integrate a configured run")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--snapshot-every", type=int, default=0)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("scenario", help="write initial data, config and certificate")
    s.add_argument("kind", choices=["blowup2d", "blowup3d", "inflation", "peakon"])
    s.add_argument("--out", required=True)
    s.add_argument("--grid", type=int, help="points per axis (x1 for inflation)")
    s.add_argument("--margin", type=float, default=1.5)
    s.add_argument("--K-max", dest="K_max", type=int, default=64)
    s.add_argument("--amplitude", type=float, default=1.0)
    s.add_argument("--direction", type=_ints)
    s.add_argument("--t-end", type=float)
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--N", type=int, default=8)
    s.add_argument("--M", type=float, default=1.0)
    s.add_argument("--sigma", type=float, default=0.0)
    s.set_defaults(func=cmd_scenario)

    s = sub.add_parser("besov", help="block norms and Besov norm of a snapshot's velocity")
    s.add_argument("--snapshot", required=True)
    s.add_argument("--s", type=float, default=1.0)
    s.add_argument("--p", type=float, default=math.inf)
    s.add_argument("--r", type=float, default=math.inf)
    s.set_defaults(func=cmd_besov)

    s = sub.add_parser("peakon-check", help="weak-form residuals of the exact peakon")
    s.add_argument("--M", type=float, default=1.0)
    s.add_argument("--direction", type=_ints)
    s.add_argument("--speed-factor", type=float, default=1.0)
    s.add_argument("--fields", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--T", type=float, default=0.2)
    s.add_argument("--cells", type=_ints, default=(8, 16, 32))
    s.add_argument("--variant", choices=["hessian", "literal"], default="hessian")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_peakon_check)

    s = sub.add_parser("trace", help="follow a characteristic through a configured run")
    s.add_argument("--config", required=True)
    s.add_argument("--x0", type=_reals)
    s.add_argument("--out")
    s.set_defaults(func=cmd_trace)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, FormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MarginUnreachable as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EPError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
