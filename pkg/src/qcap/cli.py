"""Command-line interface: ``qcap {cq, holevo, validate}``."""

from __future__ import annotations

import argparse
import os
import sys
import time
import warnings

from .discrete import SolverConfig, perturb_channel, solve
from .errors import QcapError
from .holevo import (
    SamplerSpec,
    holevo_capacity,
    make_depolarizing,
    make_pauli,
)
from .io import ChannelFile, ChannelFileError, RunRecord, validate, write_trace_csv

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_UNCONVERGED = 2
EXIT_INVALID = 3

EPILOG = """exit codes:
  0  converged (or all validation checks passed)
  1  usage, I/O or other error
  2  finished without reaching the requested accuracy
  3  invalid channel (not a valid state or Choi matrix, regularity violation,
     infeasible cost budget)
"""


class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for unconverged runs
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_OTHER, f"{self.prog}: error: {message}\n")


def _default_threads() -> int:
    env = os.environ.get("QCAP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--eps", type=float, help="target accuracy in bits")
    g.add_argument("--iters", type=int, help="run exactly this many iterations")
    p.add_argument("--stride", type=int, default=1, help="evaluate bounds every this many iterations (default 1)")
    p.add_argument("--perturb", type=float, metavar="XI", help="mix the channel with white noise of weight XI first")
    p.add_argument("--nu", type=float, help="override the smoothing parameter")
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker threads for state evaluation (default 1, or $QCAP_THREADS)")
    p.add_argument("--out", metavar="REPORT.json", help="write the JSON report here instead of stdout")
    p.add_argument("--trace", metavar="TRACE.csv", help="write the convergence trace as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qcap", description="Certified capacity bounds for cq and quantum channels.",
                     epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    cq = sub.add_parser("cq", help="capacity of a discrete cq channel file", epilog=EPILOG,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    cq.add_argument("file", help="channel file (kind cq_discrete)")
    _add_common(cq)
    cq.add_argument("--stop", choices=("apriori", "aposteriori"), default="apriori",
                    help="run the guaranteed iteration count, or stop once UB-LB <= eps")
    cq.add_argument("--max-iters", type=int, default=10_000_000, help="iteration cap")

    ho = sub.add_parser("holevo", help="Holevo capacity of a quantum channel", epilog=EPILOG,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    ho.add_argument("channel", help="depolarizing:P | pauli:PX,PY,PZ | choi:FILE")
    _add_common(ho)
    ho.add_argument("--oracle", default="trapezoid",
                    help="trapezoid[:RxC] | uniform:N | importance:N (default trapezoid:100x200 for qubits)")
    ho.add_argument("--method", choices=("accelerated", "projected"),
                    help="solver (default: accelerated for trapezoid, projected for Monte-Carlo)")
    ho.add_argument("--seed", type=int, default=0, help="seed of the Monte-Carlo oracles")

    va = sub.add_parser("validate", help="check a channel file", epilog=EPILOG,
                        formatter_class=argparse.RawDescriptionHelpFormatter)
    va.add_argument("file")
    return parser


def parse_selector(text: str):
    """Quantum channel from ``depolarizing:p``, ``pauli:px,py,pz`` or ``choi:file``."""
    kind, _, arg = text.partition(":")
    if kind == "depolarizing":
        return make_depolarizing(float(arg))
    if kind == "pauli":
        vals = [float(v) for v in arg.split(",")]
        if len(vals) != 3:
            raise ValueError("pauli needs three probabilities px,py,pz")
        return make_pauli(*vals)
    if kind == "choi":
        return ChannelFile.load(arg).to_quantum()
    raise ValueError(f"unknown channel selector {text!r}")


def _emit(args, record: RunRecord) -> None:
    text = record.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.trace:
        write_trace_csv(args.trace, record.report)
    rep = record.report
    print(f"UB {rep.upper_bound:.12g}  LB {rep.lower_bound:.12g}  gap {rep.a_posteriori_error:.3e}  "
          f"iterations {rep.iterations}  nu {rep.nu:.4g}", file=sys.stderr)


def _config_echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "trace")}


def cmd_cq(args) -> int:
    ch = ChannelFile.load(args.file).to_discrete()
    shift = 0.0
    if args.perturb is not None:
        ch, shift = perturb_channel(ch, args.perturb)
    if args.eps is None and args.iters is None:
        args.eps = 1e-2
    config = SolverConfig(
        target_error=args.eps,
        stop_mode="a_posteriori" if args.stop == "aposteriori" else "a_priori",
        posterior_check_stride=args.stride,
        max_iterations=args.max_iters,
        iterations=args.iters,
        nu=args.nu,
    )
    t0 = time.perf_counter()
    report = solve(ch, config)
    elapsed = time.perf_counter() - t0
    report.details.update(
        perturbation_xi=args.perturb,
        perturbation_bound=shift,
        certified_interval=[report.lower_bound - shift, report.upper_bound + shift],
    )
    if report.a_priori_error is not None:
        report.details["total_certificate"] = report.a_priori_error + shift
    _emit(args, RunRecord("cq", _config_echo(args), report, elapsed))
    return EXIT_OK if report.converged else EXIT_UNCONVERGED


def cmd_holevo(args) -> int:
    ch = parse_selector(args.channel)
    sampler = SamplerSpec.parse(args.oracle, seed=args.seed)
    if args.eps is None and args.iters is None:
        args.iters = 100
    t0 = time.perf_counter()
    report = holevo_capacity(ch, eps=args.eps, iterations=args.iters, sampler=sampler, method=args.method,
                             nu=args.nu, perturb_xi=args.perturb, threads=args.threads, stride=args.stride)
    elapsed = time.perf_counter() - t0
    seeds = [args.seed] if sampler.kind != "trapezoid" else []
    _emit(args, RunRecord("holevo", _config_echo(args), report, elapsed, seeds))
    return EXIT_OK if report.converged else EXIT_UNCONVERGED


def cmd_validate(args) -> int:
    cf = ChannelFile.load(args.file)
    checks = validate(cf)
    for c in checks:
        note = f"  ({c.note})" if c.note else ""
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<14} {c.value: .6e}{note}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVALID


COMMANDS = {"cq": cmd_cq, "holevo": cmd_holevo, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except QcapError as exc:
        print(f"qcap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ChannelFileError, OSError, ValueError) as exc:
        print(f"qcap: error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
