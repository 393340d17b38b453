"""Command-line front end: ``vacuumlab {decide,simulate,sweep,reduce,nogo-audit}``.

Exit codes: 0 success (feasible for ``decide``), 1 validation error, 2
reference channel not isometric on the subspace, 3 infeasible pair, 4
feasible pair handed to ``nogo-audit``.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import serialization as ser
from .channels import (
    ChannelWithVacuum,
    QuantumChannel,
    decide_discriminability,
    half_pi_y,
    identity_channel,
    maximal_vacuum_subspace,
)
from .kwiat import (
    KwiatConfig,
    auto_bound_parameters,
    decay_rate_fit,
    simulate_kwiat,
    spectral_diagnostics,
    theorem44_constant,
)
from .linops import Subspace
from .nogo import nogo_inequality_audit, rate_limit_audit, rate_limit_decomposition
from .reduction import apply_superchannel, build_reduction, unique_fixed_state
from .samplers import random_povm, random_strategy

log = logging.getLogger("vacuumlab")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_ISOMETRIC = 2
EXIT_INFEASIBLE = 3
EXIT_FEASIBLE_PAIR = 4

SWEEP_COLUMNS = ["N", "p_error", "p_interaction", "transmission", "bound_C_over_N2", "bound_C_over_N"]
AUDIT_COLUMNS = ["trial_id", "lhs", "rhs", "constant_used", "holds"]


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    steps: Optional[int] = None
    repeats: int = 1
    n_grid: Optional[list] = None
    trials: int = 0
    seed: Optional[int] = None
    tol: float = 1e-8
    out: Optional[str] = None
    fmt: str = "json"

    def __post_init__(self):
        if self.command == "nogo-audit" and self.seed is None:
            raise CliError("seed: randomized commands need a seed")


def thread_count() -> int:
    raw = os.environ.get("VACUUMLAB_THREADS")
    if raw is None:
        return max(1, min(8, os.cpu_count() or 1))
    try:
        return max(1, int(raw))
    except ValueError:
        raise CliError("VACUUMLAB_THREADS: must be an integer")


def parallel_map(fn, items: Sequence) -> list:
    """``[fn(x) for x in items]`` evaluated on a thread pool; order is preserved."""
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def fmt_float(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def parse_n_grid(spec: str) -> list[int]:
    """``"a:b:points:log"``, ``"a:b:points:lin"`` or a comma-separated list."""
    try:
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 4 or parts[3] not in ("log", "lin"):
                raise ValueError
            a, b, pts = int(parts[0]), int(parts[1]), int(parts[2])
            if pts < 1 or a < 1 or b < a:
                raise ValueError
            grid = np.geomspace(a, b, pts) if parts[3] == "log" else np.linspace(a, b, pts)
            values = sorted({int(round(x)) for x in grid})
        else:
            values = sorted({int(x) for x in spec.split(",") if x.strip()})
    except ValueError:
        raise CliError(f"n-grid: cannot parse {spec!r}; use a:b:points:log or a comma list")
    if not values:
        raise CliError("n-grid: empty grid")
    if values[0] < 2:
        raise CliError("n-grid: every N must be at least 2")
    return values


def load_channel(path: str) -> ChannelWithVacuum:
    ch, v = ser.channel_from_json(ser.load_json(path))
    if ch.operation:
        raise CliError("trace preservation: channel file describes an operation")
    if v is None:
        v = np.eye(ch.dim_in, dtype=complex)[0]
    return ChannelWithVacuum(ch, v)


def load_hamiltonian(spec: str, vacuum) -> np.ndarray:
    if spec == "half-pi-y":
        return half_pi_y(vacuum)
    return ser.hamiltonian_from_json(ser.load_json(spec))


def emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def write_table(columns: list, rows: list, fmt: str) -> str:
    if fmt == "json":
        return ser.dumps([dict(zip(columns, r)) for r in rows]) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt_float(x) if not isinstance(x, str) else x for x in r])
    return buf.getvalue()


# --- commands -------------------------------------------------------------------------


def cmd_decide(cfg: RunConfig) -> int:
    a, b = (load_channel(p) for p in cfg.inputs)
    dec = decide_discriminability(a, b, tol=cfg.tol)
    verdict = {
        "feasible": dec.feasible,
        "witness_basis": None if dec.witness is None else ser.subspace_to_json(dec.witness),
        "which_isometric": dec.which_isometric,
    }
    emit(ser.dumps(verdict) + "\n", cfg.out)
    return EXIT_OK if dec.feasible else EXIT_INFEASIBLE


def _warn_if_not_mixing(ch: QuantumChannel) -> bool:
    mixing = spectral_diagnostics(ch).mixing
    if not mixing:
        print("warning: channel is not mixing; the rate guarantees do not apply", file=sys.stderr)
    return mixing


def cmd_simulate(cfg: RunConfig, h_spec: str) -> int:
    (cw,) = (load_channel(p) for p in cfg.inputs)
    h = load_hamiltonian(h_spec, cw.vacuum)
    mixing = _warn_if_not_mixing(cw.channel)
    kc = KwiatConfig(h, cfg.steps, cfg.repeats, cw.vacuum)
    rep = simulate_kwiat(kc, cw)
    out = {
        "N": cfg.steps,
        "K": cfg.repeats,
        "contrast": kc.contrast,
        "mixing": mixing,
        "p_error": rep.p_error,
        "p_error_reference": rep.p_error_reference,
        "p_error_probe": rep.p_error_probe,
        "estimate": rep.estimate,
        "leak": rep.leak,
        "p_interaction": rep.p_interaction,
        "transmission": rep.transmission,
    }
    emit(ser.dumps(out) + "\n", cfg.out)
    return EXIT_OK


def _bound_constant(ch: QuantumChannel, h: np.ndarray) -> Optional[float]:
    params = auto_bound_parameters(ch, h)
    if params is None:
        return None
    tau, delta = params
    try:
        return theorem44_constant(ch, h, tau, delta)
    except ValueError as exc:
        log.info("no rate constant: %s", exc)
        return None


FIT_FLOOR = 1e-14


def _slope(ns, ys) -> Optional[float]:
    """Log-log slope, or ``None`` when a value is missing or at roundoff level."""
    pts = [(n, y) for n, y in zip(ns, ys) if y is not None]
    if len(pts) < 3 or any(y <= FIT_FLOOR for _, y in pts):
        return None
    return decay_rate_fit(pts).slope


def cmd_sweep(cfg: RunConfig, h_spec: str) -> int:
    (cw,) = (load_channel(p) for p in cfg.inputs)
    h = load_hamiltonian(h_spec, cw.vacuum)
    _warn_if_not_mixing(cw.channel)
    const = _bound_constant(cw.channel, h)

    def run(n: int):
        rep = simulate_kwiat(KwiatConfig(h, n, cfg.repeats, cw.vacuum), cw)
        return [n, rep.p_error, rep.p_interaction, rep.transmission,
                None if const is None else const / n ** 2,
                None if const is None else const / n]

    rows = parallel_map(run, cfg.n_grid)
    ns = [r[0] for r in rows]
    fit = ["fit"] + [_slope(ns, [r[i] for r in rows]) for i in (1, 2, 3)] + [None, None]
    emit(write_table(SWEEP_COLUMNS, rows + [fit], cfg.fmt), cfg.out)
    return EXIT_OK


def _subspace_arg(spec: str, cw: ChannelWithVacuum) -> Subspace:
    if spec == "full":
        return Subspace.full(cw.dim)
    if spec == "max-vacuum":
        return maximal_vacuum_subspace(cw)
    return ser.subspace_from_json(ser.load_json(spec), cw.dim)


def cmd_reduce(cfg: RunConfig, subspace_spec: str, superchannel_out: Optional[str]) -> int:
    ref, probe = (load_channel(p) for p in cfg.inputs)
    if ref.dim != probe.dim:
        raise CliError("dimension mismatch: reference and probe act on different spaces")
    sub = _subspace_arg(subspace_spec, ref)
    try:
        r = build_reduction(ref.channel, sub, ref.vacuum)
    except ValueError as exc:
        if "isometric" in str(exc):
            raise CliError(str(exc), EXIT_NOT_ISOMETRIC)
        raise
    out_ch = apply_superchannel(r, probe.channel)
    q0 = np.array([1.0, 0.0], dtype=complex)
    doc = ser.channel_to_json(out_ch, q0)
    fixed = unique_fixed_state(out_ch)
    doc["identity_deviation"] = float(np.abs(out_ch.superop - identity_channel(2).superop).max())
    doc["unique_fixed_state_q0"] = bool(fixed is not None and np.abs(fixed - np.diag([1, 0])).max() < 1e-8)
    if superchannel_out:
        with open(superchannel_out, "w") as fh:
            fh.write(ser.dumps(ser.superchannel_to_json(r)) + "\n")
    emit(ser.dumps(doc) + "\n", cfg.out)
    return EXIT_OK


def cmd_nogo_audit(cfg: RunConfig, which: str) -> int:
    a, b = (load_channel(p) for p in cfg.inputs)
    if decide_discriminability(a, b, tol=cfg.tol).feasible:
        raise CliError("feasible pair: the no-go audits do not apply", EXIT_FEASIBLE_PAIR)
    if which == "rate":
        rate_limit_decomposition(a, b)
    audit = nogo_inequality_audit if which == "nogo" else rate_limit_audit

    def trial(i: int):
        rng = np.random.default_rng([cfg.seed, i])
        steps = int(rng.integers(1, 5))
        anc = int(rng.integers(1, 3))
        strat = random_strategy(a.dim, anc, steps, rng=rng)
        povm = random_povm(a.dim * anc, rng=rng)
        res = audit(a, b, strat, povm)
        return [i, res.lhs, res.rhs, res.constant_used, res.holds]

    rows = parallel_map(trial, list(range(cfg.trials)))
    emit(write_table(AUDIT_COLUMNS, rows, cfg.fmt), cfg.out)
    return EXIT_OK


# --- entry point ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for randomized commands")
    common.add_argument("--tol", type=float, default=1e-8, help="restriction comparison tolerance")
    common.add_argument("--format", choices=["csv", "json"], default=None, dest="fmt")
    common.add_argument("--out", default=None, metavar="PATH", help="write output here instead of stdout")

    p = argparse.ArgumentParser(prog="vacuumlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decide", parents=[common], help="decide interaction-free discriminability")
    d.add_argument("channel_a")
    d.add_argument("channel_b")

    s = sub.add_parser("simulate", parents=[common], help="run the repeated Kwiat protocol")
    s.add_argument("channel")
    s.add_argument("--hamiltonian", default="half-pi-y", help='JSON file or preset "half-pi-y"')
    s.add_argument("-N", "--steps", type=int, required=True)
    s.add_argument("-K", "--repeats", type=int, default=1)

    w = sub.add_parser("sweep", parents=[common], help="tabulate the protocol over a grid of N")
    w.add_argument("channel")
    w.add_argument("--hamiltonian", default="half-pi-y")
    w.add_argument("--n-grid", default="8:512:7:log")
    w.add_argument("-K", "--repeats", type=int, default=1)

    r = sub.add_parser("reduce", parents=[common], help="apply the reduction superchannel")
    r.add_argument("reference")
    r.add_argument("probe")
    r.add_argument("--subspace", default="max-vacuum",
                   help='"full", "max-vacuum" or a JSON file with {"basis": [...]}')
    r.add_argument("--superchannel-out", default=None, metavar="PATH")

    a = sub.add_parser("nogo-audit", parents=[common], help="audit the no-go inequalities")
    a.add_argument("channel_a")
    a.add_argument("channel_b")
    a.add_argument("--trials", type=int, default=100)
    a.add_argument("--audit", choices=["nogo", "rate"], default="nogo")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        if args.command == "decide":
            cfg = RunConfig("decide", [args.channel_a, args.channel_b], tol=args.tol, out=args.out)
            return cmd_decide(cfg)
        if args.command == "simulate":
            if args.steps < 1 or args.repeats < 1:
                raise CliError("N and K must be positive")
            cfg = RunConfig("simulate", [args.channel], steps=args.steps, repeats=args.repeats, out=args.out)
            return cmd_simulate(cfg, args.hamiltonian)
        if args.command == "sweep":
            if args.repeats < 1:
                raise CliError("K must be positive")
            cfg = RunConfig("sweep", [args.channel], repeats=args.repeats, n_grid=parse_n_grid(args.n_grid),
                            out=args.out, fmt=args.fmt or "csv")
            return cmd_sweep(cfg, args.hamiltonian)
        if args.command == "reduce":
            cfg = RunConfig("reduce", [args.reference, args.probe], out=args.out)
            return cmd_reduce(cfg, args.subspace, args.superchannel_out)
        if args.trials < 0:
            raise CliError("trials: must be nonnegative")
        cfg = RunConfig("nogo-audit", [args.channel_a, args.channel_b], trials=args.trials,
                        seed=0 if args.seed is None else args.seed, tol=args.tol, out=args.out,
                        fmt=args.fmt or "csv")
        return cmd_nogo_audit(cfg, args.audit)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
