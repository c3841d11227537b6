"""Channel files, validation reports and run records.

Channel files are UTF-8 JSON objects::

    {
      "schema_version": 1,
      "kind": "cq_discrete" | "choi",
      "matrices": [ [[[re, im], ...], ...], ... ],   # row-major [re, im] pairs
      "cost": [...], "budget": S,                      # optional, cq_discrete only
      "labels": [...],                                 # optional
      "dim_in": N, "dim_out": M,                       # choi only
      "name": "..."                                    # optional
    }

A ``choi`` file holds exactly one matrix. Reports are JSON with numbers
rounded to 12 significant digits; non-finite numbers are emitted as ``null``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .discrete import DiscreteCqChannel, SolverReport
from .holevo import RELAXED_TOL, STRICT_TOL, QuantumChannel, choi_checks, load_choi, output_gamma
from .linalg import NEGATIVE_EIG_TOL, TRACE_TOL

SCHEMA_VERSION = 1
KINDS = ("cq_discrete", "choi")
SIGNIFICANT_DIGITS = 12
TRACE_COLUMNS = ("iteration", "ub_bits", "lb_bits", "posterior_error", "nu")


class ChannelFileError(ValueError):
    """A channel file is malformed (as opposed to describing an invalid channel)."""


def matrix_to_json(a) -> list:
    """Row-major nested list of ``[re, im]`` pairs."""
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(rows) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ChannelFileError(f"matrix entries must be [re, im] pairs: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ChannelFileError(f"expected a square matrix of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


@dataclass
class ChannelFile:
    """In-memory form of a channel file."""

    kind: str
    matrices: list[np.ndarray]
    cost: list[float] | None = None
    budget: float | None = None
    labels: list[str] | None = None
    dim_in: int | None = None
    dim_out: int | None = None
    name: str = ""
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, obj: dict) -> "ChannelFile":
        if not isinstance(obj, dict):
            raise ChannelFileError("channel file must be a JSON object")
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise ChannelFileError(f"unsupported or missing schema_version {obj.get('schema_version')!r}")
        kind = obj.get("kind")
        if kind not in KINDS:
            raise ChannelFileError(f"kind must be one of {KINDS}, got {kind!r}")
        raw = obj.get("matrices")
        if not isinstance(raw, list) or not raw:
            raise ChannelFileError("matrices must be a nonempty list")
        mats = [matrix_from_json(m) for m in raw]
        cf = cls(
            kind=kind,
            matrices=mats,
            cost=None if obj.get("cost") is None else [float(c) for c in obj["cost"]],
            budget=None if obj.get("budget") is None else float(obj["budget"]),
            labels=None if obj.get("labels") is None else [str(s) for s in obj["labels"]],
            dim_in=obj.get("dim_in"),
            dim_out=obj.get("dim_out"),
            name=str(obj.get("name", "")),
        )
        if kind == "choi":
            if len(mats) != 1:
                raise ChannelFileError("a choi file holds exactly one matrix")
            if cf.dim_in is None:
                raise ChannelFileError("a choi file needs dim_in")
            size = mats[0].shape[0]
            if cf.dim_out is None:
                cf.dim_out = size // cf.dim_in
            if cf.dim_in * cf.dim_out != size:
                raise ChannelFileError(f"dim_in*dim_out={cf.dim_in * cf.dim_out} does not match matrix size {size}")
        elif len({m.shape for m in mats}) != 1:
            raise ChannelFileError("all cq states must share one dimension")
        return cf

    def to_dict(self) -> dict:
        out = {"schema_version": self.schema_version, "kind": self.kind,
               "matrices": [matrix_to_json(m) for m in self.matrices]}
        for key in ("cost", "budget", "labels", "dim_in", "dim_out"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def load(cls, path) -> "ChannelFile":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ChannelFileError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(obj)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    def to_discrete(self) -> DiscreteCqChannel:
        if self.kind != "cq_discrete":
            raise ChannelFileError(f"expected a cq_discrete file, got {self.kind}")
        cost = None if self.cost is None else np.asarray(self.cost)
        labels = None if self.labels is None else tuple(self.labels)
        return DiscreteCqChannel(self.matrices, cost, self.budget, labels)

    def to_quantum(self, tolerance: str | float = "auto") -> QuantumChannel:
        if self.kind != "choi":
            raise ChannelFileError(f"expected a choi file, got {self.kind}")
        return load_choi(self.matrices[0], self.dim_in, self.dim_out, tolerance, name=self.name)


def discrete_file(ch: DiscreteCqChannel, name: str = "") -> ChannelFile:
    return ChannelFile(
        "cq_discrete", [np.asarray(s) for s in ch.states],
        None if ch.cost is None else [float(c) for c in ch.cost], ch.budget,
        None if ch.labels is None else list(ch.labels), name=name,
    )


def choi_file(ch: QuantumChannel) -> ChannelFile:
    return ChannelFile("choi", [ch.choi], dim_in=ch.dim_in, dim_out=ch.dim_out, name=ch.name)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    note: str = ""


def validate(cf: ChannelFile) -> list[Check]:
    """Per-invariant diagnostics of a channel file.

    ``cq_discrete``: hermiticity, trace and positivity of every state, the
    minimum eigenvalue ``gamma`` and, if present, cost feasibility.
    ``choi``: hermiticity, trace, positivity and partial trace at the strict
    tier (the note records whether the relaxed tier passes), then ``gamma``
    of the (repaired if needed) channel.
    """
    checks: list[Check] = []
    if cf.kind == "cq_discrete":
        mats = np.array(cf.matrices)
        asym = float(np.max(np.abs(mats - mats.conj().transpose(0, 2, 1))))
        checks.append(Check("hermiticity", asym <= 1e-8, asym))
        herm = 0.5 * (mats + mats.conj().transpose(0, 2, 1))
        tr = np.real(np.trace(herm, axis1=1, axis2=2))
        dev = float(np.max(np.abs(tr - 1.0)))
        checks.append(Check("trace", dev <= TRACE_TOL, dev))
        w_min = float(np.linalg.eigvalsh(herm)[:, 0].min())
        checks.append(Check("positivity", w_min >= -NEGATIVE_EIG_TOL, w_min))
        checks.append(Check("gamma", w_min > 1e-12, w_min, "minimum eigenvalue over all states"))
        if cf.cost is not None or cf.budget is not None:
            ok = cf.cost is not None and cf.budget is not None and min(cf.cost) <= cf.budget \
                and len(cf.cost) == len(cf.matrices)
            checks.append(Check("cost_feasible", bool(ok), float(min(cf.cost or [math.nan]))))
        return checks
    strict = choi_checks(cf.matrices[0], cf.dim_in, cf.dim_out, STRICT_TOL)
    relaxed = choi_checks(cf.matrices[0], cf.dim_in, cf.dim_out, RELAXED_TOL)
    for name, (ok, value) in strict.items():
        if name == "shape":
            continue
        note = "" if ok else ("passes the relaxed 1e-3 tier" if relaxed[name][0] else "fails the relaxed 1e-3 tier")
        checks.append(Check(name, ok, value, note))
    if all(ok for ok, _ in relaxed.values()):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ch = cf.to_quantum("relaxed")
        gamma = output_gamma(ch)
        checks.append(Check("gamma", gamma > 1e-12, gamma, "minimum output eigenvalue over pure inputs"))
    return checks


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def round_sig(x: float, digits: int = SIGNIFICANT_DIGITS) -> float | None:
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.{digits}g}")


def jsonable(obj):
    """Convert solver output to JSON-safe values (finite, 12 significant digits)."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [round_sig(obj.real), round_sig(obj.imag)]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if obj.ndim == 2:
                return [[[round_sig(z.real), round_sig(z.imag)] for z in row] for row in obj]
            return [jsonable(z) for z in obj]
        return jsonable(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if dataclasses.is_dataclass(obj):
        return jsonable(dataclasses.asdict(obj))
    return str(obj)


def report_dict(report: SolverReport) -> dict:
    return {
        "upper_bound": report.upper_bound,
        "lower_bound": report.lower_bound,
        "iterations": report.iterations,
        "nu": report.nu,
        "a_priori_error": report.a_priori_error,
        "a_posteriori_error": report.a_posteriori_error,
        "input_distribution": report.input_distribution,
        "converged": report.converged,
        "method": report.method,
        "details": report.details,
    }


@dataclass
class RunRecord:
    """Report plus the command configuration that produced it."""

    command: str
    config: dict
    report: SolverReport
    wall_clock_seconds: float
    seeds: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        from . import __version__

        rep = report_dict(self.report)
        # exact brackets (UB = LB) can invert by rounding noise
        if 0 < rep["lower_bound"] - rep["upper_bound"] <= 1e-9:
            rep["lower_bound"] = rep["upper_bound"]
        return jsonable({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config,
            "report": rep,
            "seeds": self.seeds,
            "version": __version__,
            "wall_clock_seconds": self.wall_clock_seconds,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_trace_csv(path, report: SolverReport) -> int:
    """Write the convergence trace; returns the number of data rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for rec in report.trace:
            w.writerow([rec.iteration, f"{rec.upper_bound:.12g}", f"{rec.lower_bound:.12g}",
                        f"{rec.posterior_error:.12g}", f"{rec.nu:.12g}"])
    return len(report.trace)
