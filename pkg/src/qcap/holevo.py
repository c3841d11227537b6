"""Holevo capacity of finite-dimensional quantum channels.

A channel is stored as its Choi state ``tau`` on ``A (x) B`` (input dim ``N``,
output dim ``M``), normalized so that ``Tr_B tau = I/N``; it acts as
``Phi(rho) = N Tr_A[(rho^T (x) I) tau]``, transposition taken in the basis the
Choi matrix is written in.

Pure inputs are parametrized by spherical coordinates on a box, which turns
the Holevo capacity into the capacity of a continuous-input cq channel
(:func:`embed`). Gradients of the smoothed dual can then come from the
trapezoid rule or from Monte-Carlo estimators (:func:`mc_gradient_uniform`,
:func:`mc_gradient_importance`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .continuous import (
    ContinuousCqChannel,
    OracleEstimate,
    QuadratureOracle,
    build_grid,
    solve_continuous,
    solve_inexact,
)
from .discrete import SolverReport
from .errors import InvalidChoi, RegularityViolation
from .linalg import REGULARITY_FLOOR, binary_entropy, operator_norm

STRICT_TOL = 1e-8
RELAXED_TOL = 1e-3


# ---------------------------------------------------------------------------
# Choi representation
# ---------------------------------------------------------------------------

def choi_checks(choi, dim_in: int, dim_out: int, tol: float = STRICT_TOL) -> dict[str, tuple[bool, float]]:
    """Per-invariant diagnostics of a Choi matrix.

    :returns: mapping check name -> ``(passed, measured deviation)``; checks are
        ``shape``, ``hermiticity``, ``trace``, ``positivity`` (most negative
        eigenvalue) and ``partial_trace`` (max deviation of ``Tr_B`` from ``I/N``)
    """
    c = np.asarray(choi, dtype=complex)
    n = dim_in * dim_out
    if c.shape != (n, n):
        return {"shape": (False, float("nan"))}
    asym = float(np.max(np.abs(c - c.conj().T)))
    h = 0.5 * (c + c.conj().T)
    tr_dev = abs(float(np.real(np.trace(h))) - 1.0)
    w_min = float(np.linalg.eigvalsh(h)[0])
    ptr = partial_trace_output(h, dim_in, dim_out)
    pt_dev = float(np.max(np.abs(ptr - np.eye(dim_in) / dim_in)))
    return {
        "shape": (True, 0.0),
        "hermiticity": (asym <= tol, asym),
        "trace": (tr_dev <= tol, tr_dev),
        "positivity": (w_min >= -tol, w_min),
        "partial_trace": (pt_dev <= tol, pt_dev),
    }


def partial_trace_output(choi: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    """``Tr_B`` of an operator on ``A (x) B``."""
    return np.einsum("ibjb->ij", np.asarray(choi).reshape(dim_in, dim_out, dim_in, dim_out))


def _repair_choi(h: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    """Nearest-in-spirit valid Choi: clip negative eigenvalues, then rescale
    the input marginal to exactly ``I/N`` via ``(A^-1/2 (x) I) tau (A^-1/2 (x) I)``."""
    w, v = np.linalg.eigh(h)
    h = (v * np.clip(w, 0.0, None)) @ v.conj().T
    a = dim_in * partial_trace_output(h, dim_in, dim_out)
    wa, va = np.linalg.eigh(0.5 * (a + a.conj().T))
    inv_sqrt = (va / np.sqrt(wa)) @ va.conj().T
    k = np.kron(inv_sqrt, np.eye(dim_out))
    out = k @ h @ k.conj().T
    return 0.5 * (out + out.conj().T)


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Quantum channel given by its Choi state.

    Construct through :func:`load_choi` or the ``make_*`` helpers, which
    validate the Choi matrix.
    """

    choi: np.ndarray
    dim_in: int
    dim_out: int
    name: str = ""
    tier: str = "strict"
    repair_distance: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.choi, dtype=complex)
        c = 0.5 * (c + c.conj().T)
        c.setflags(write=False)
        object.__setattr__(self, "choi", c)
        n, m = self.dim_in, self.dim_out
        t = n * c.reshape(n, m, n, m)
        # rows: vec(rho) indices (x, y); columns: output entries (b, c)
        kernel = np.ascontiguousarray(t.transpose(0, 2, 1, 3).reshape(n * n, m * m))
        object.__setattr__(self, "_kernel", kernel)

    def apply(self, rho) -> np.ndarray:
        """Output state ``Phi(rho)``."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim_in, self.dim_in):
            raise ValueError(f"input must be {self.dim_in}x{self.dim_in}, got {rho.shape}")
        out = (rho.reshape(-1) @ self._kernel).reshape(self.dim_out, self.dim_out)
        return 0.5 * (out + out.conj().T)

    def apply_pure(self, vectors: np.ndarray) -> np.ndarray:
        """Outputs for a batch of pure inputs given as rows of ``vectors``."""
        v = np.asarray(vectors, dtype=complex)
        outer = (v[:, :, None] * v.conj()[:, None, :]).reshape(len(v), -1)
        out = (outer @ self._kernel).reshape(len(v), self.dim_out, self.dim_out)
        return 0.5 * (out + out.conj().transpose(0, 2, 1))


def apply_channel(ch: QuantumChannel, rho) -> np.ndarray:
    """``Phi(rho) = N Tr_A[(rho^T (x) I) tau]``."""
    return ch.apply(rho)


def load_choi(choi, dim_in: int, dim_out: int | None = None, tolerance: str | float = "auto",
              name: str = "") -> QuantumChannel:
    """Validate a Choi matrix and wrap it as a channel.

    :param tolerance: ``"strict"`` (1e-8), ``"relaxed"`` (1e-3), ``"auto"``
        (strict, falling back to relaxed with a warning) or a number
    :raises InvalidChoi: if a check fails at the chosen tier; ``exc.checks``
        holds the diagnostics

    Matrices accepted only at a looser tier (e.g. entries rounded to a few decimals)
    are minimally repaired so that the channel is exactly trace preserving
    and completely positive; the Frobenius size of the repair is recorded in
    ``repair_distance``.
    """
    c = np.asarray(choi, dtype=complex)
    if dim_out is None:
        if c.shape[0] % dim_in:
            raise InvalidChoi(f"matrix size {c.shape[0]} is not a multiple of dim_in={dim_in}")
        dim_out = c.shape[0] // dim_in
    tiers = {"strict": [("strict", STRICT_TOL)], "relaxed": [("relaxed", RELAXED_TOL)],
             "auto": [("strict", STRICT_TOL), ("relaxed", RELAXED_TOL)]}
    if isinstance(tolerance, str):
        if tolerance not in tiers:
            raise ValueError(f"unknown tolerance tier {tolerance!r}")
        plan = tiers[tolerance]
    else:
        plan = [(f"{float(tolerance):g}", float(tolerance))]
    checks = {}
    for tier, tol in plan:
        checks = choi_checks(c, dim_in, dim_out, tol)
        if all(ok for ok, _ in checks.values()):
            h = 0.5 * (c + c.conj().T)
            repaired = h
            dist = 0.0
            if tol > STRICT_TOL and not all(ok for ok, _ in choi_checks(c, dim_in, dim_out, STRICT_TOL).values()):
                repaired = _repair_choi(h, dim_in, dim_out)
                dist = float(np.linalg.norm(repaired - h))
                warnings.warn(f"Choi matrix accepted at the {tier} tier (tol {tol:g}); repaired by {dist:.2e}",
                              stacklevel=2)
            return QuantumChannel(repaired, dim_in, dim_out, name, tier, dist)
    failed = [k for k, (ok, _) in checks.items() if not ok]
    detail = "; ".join(f"{k}: {checks[k][1]:.3e}" for k in failed)
    if "positivity" in failed:
        detail += f" (negative eigenvalue {checks['positivity'][1]:.6g})"
    raise InvalidChoi(f"invalid Choi matrix, failed {', '.join(failed)}: {detail}", checks)


def maximally_entangled(dim: int) -> np.ndarray:
    """Projector ``|omega><omega|`` with ``|omega> = sum_i |ii> / sqrt(dim)``."""
    omega = np.eye(dim).reshape(-1) / math.sqrt(dim)
    return np.outer(omega, omega).astype(complex)


def make_depolarizing(p: float, dim: int = 2) -> QuantumChannel:
    """``rho -> (1 - p) rho + p I/dim``; Choi ``(1 - p)|omega><omega| + p I/dim^2``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    choi = (1.0 - p) * maximally_entangled(dim) + p * np.eye(dim * dim) / dim ** 2
    return load_choi(choi, dim, dim, "strict", name=f"depolarizing({p:g})")


def make_identity(dim: int = 2) -> QuantumChannel:
    return load_choi(maximally_entangled(dim), dim, dim, "strict", name="identity")


def make_pauli(px: float, py: float, pz: float) -> QuantumChannel:
    """Qubit Pauli channel ``(1-px-py-pz) rho + px X rho X + py Y rho Y + pz Z rho Z``."""
    if min(px, py, pz) < 0 or px + py + pz > 1:
        raise ValueError("Pauli probabilities must be nonnegative and sum to at most 1")
    a = 1.0 - px - py
    b = 1.0 - px - py - 2.0 * pz
    choi = 0.5 * np.array(
        [[a, 0, 0, b], [0, px + py, px - py, 0], [0, px - py, px + py, 0], [b, 0, 0, a]],
        dtype=complex,
    )
    return load_choi(choi, 2, 2, "strict", name=f"pauli({px:g},{py:g},{pz:g})")


# Random qubit channel with 4-decimal entries. Entry (1, 3) uses imaginary
# part 0.0187, as required by its Hermitian partner (3, 1) and the marginal
# condition; 0.00187 there would break hermiticity.
RANDOM_QUBIT_CHOI = np.array(
    [
        [0.2041, -0.1145 - 0.0926j, 0.0590 - 0.0187j, 0.0721 + 0.0487j],
        [-0.1145 + 0.0926j, 0.2959, -0.0861 - 0.0928j, -0.0590 + 0.0187j],
        [0.0590 + 0.0187j, -0.0861 + 0.0928j, 0.2350, -0.1296 + 0.0128j],
        [0.0721 - 0.0487j, -0.0590 - 0.0187j, -0.1296 - 0.0128j, 0.2650],
    ]
)


def conjugate_output(ch: QuantumChannel, unitary: np.ndarray) -> QuantumChannel:
    """Channel ``rho -> U Phi(rho) U^dagger``."""
    k = np.kron(np.eye(ch.dim_in), unitary)
    return QuantumChannel(k @ ch.choi @ k.conj().T, ch.dim_in, ch.dim_out, ch.name + "+U", ch.tier)


def tensor_square(ch: QuantumChannel) -> QuantumChannel:
    """Choi state of ``Phi (x) Phi`` (experimental utility).

    Subsystems are reordered from ``A1 B1 A2 B2`` to ``A1 A2 B1 B2``.
    """
    n, m = ch.dim_in, ch.dim_out
    t = np.kron(ch.choi, ch.choi).reshape(n, m, n, m, n, m, n, m)
    t = t.transpose(0, 2, 1, 3, 4, 6, 5, 7).reshape(n * n * m * m, n * n * m * m)
    return QuantumChannel(t, n * n, m * m, f"({ch.name})^2", ch.tier)


@dataclass(frozen=True)
class Perturbation:
    channel: QuantumChannel
    capacity_shift_bound: float
    xi: float


def perturb(ch: QuantumChannel, xi: float) -> Perturbation:
    """Mix with the completely depolarizing channel: ``(1 - xi) Phi + xi Tr[.] I/M``.

    The two channels are ``2 xi`` apart in diamond norm, so their Holevo
    capacities differ by at most ``16 xi log2 M + 4 Hb(2 xi)``. Every output
    of the perturbed channel has minimum eigenvalue at least ``xi / M``.
    """
    if not 0.0 < xi < 0.5:
        raise ValueError("xi must lie in (0, 1/2)")
    n, m = ch.dim_in, ch.dim_out
    choi = (1.0 - xi) * ch.choi + xi * np.eye(n * m) / (n * m)
    bound = 16.0 * xi * math.log2(m) + 4.0 * binary_entropy(2.0 * xi)
    new = QuantumChannel(choi, n, m, f"{ch.name}~{xi:g}", ch.tier, ch.repair_distance)
    return Perturbation(new, bound, xi)


# ---------------------------------------------------------------------------
# universal encoder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniversalEncoder:
    """Spherical-coordinate parametrization of pure states in dimension ``N``.

    Coordinates are ``x = (phi_1..phi_{N-1}, theta_1..theta_{N-1})`` with
    every ``phi`` in ``[0, pi]``, ``theta_j`` in ``[0, pi]`` for ``j < N-1`` and
    ``theta_{N-1}`` in ``[0, 2 pi]``. The encoded vector is
    ``(cos t1, sin t1 cos t2 e^{i phi_1}, ..., sin t1..sin t_{N-2} cos t_{N-1} e^{i phi_{N-2}},
    sin t1..sin t_{N-1} e^{i phi_{N-1}})``; for ``N = 2`` it is
    ``(cos theta, sin theta e^{i phi})`` on ``[0, pi] x [0, 2 pi]``.
    """

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("the encoder needs input dimension at least 2")

    @property
    def lower(self) -> tuple[float, ...]:
        return (0.0,) * (2 * self.dim - 2)

    @property
    def upper(self) -> tuple[float, ...]:
        k = self.dim - 1
        return (math.pi,) * k + (math.pi,) * (k - 1) + (2 * math.pi,)

    @property
    def volume(self) -> float:
        return 2.0 * math.pi ** (2 * self.dim - 2)

    def vectors(self, points: np.ndarray) -> np.ndarray:
        """Encoded unit vectors for points of shape ``(n, 2N - 2)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k = self.dim - 1
        phi, theta = pts[:, :k], pts[:, k:]
        n = len(pts)
        v = np.empty((n, self.dim), dtype=complex)
        amp = np.ones(n)
        for j in range(k):
            c = np.cos(theta[:, j])
            v[:, j] = amp * c if j == 0 else amp * c * np.exp(1j * phi[:, j - 1])
            amp = amp * np.sin(theta[:, j])
        v[:, k] = amp * np.exp(1j * phi[:, k - 1])
        return v

    def encode(self, x) -> np.ndarray:
        """Pure density matrix ``|v><v|`` for one point."""
        v = self.vectors(np.asarray(x, dtype=float)[None])[0]
        return np.outer(v, v.conj())

    def decode(self, vector) -> np.ndarray:
        """Coordinates of a point encoding ``vector`` (up to global phase)."""
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        if abs(v[0]) > 0:
            v = v * (np.conj(v[0]) / abs(v[0]))
        k = self.dim - 1
        phi = np.zeros(k)
        theta = np.zeros(k)

        def signed(j):
            # phase folded into [0, pi), sign carried by the real amplitude
            if j == 0:
                return float(v[0].real)
            ph = float(np.mod(np.angle(v[j]), np.pi))
            phi[j - 1] = ph
            return float((v[j] * np.exp(-1j * ph)).real)

        for j in range(k - 1):
            c = signed(j)
            theta[j] = math.atan2(float(np.linalg.norm(v[j + 1:])), c)
        c = signed(k - 1)
        s = signed(k)
        theta[k - 1] = float(np.mod(math.atan2(s, c), 2 * math.pi))
        return np.concatenate([phi, theta])


def encode(enc: UniversalEncoder, x) -> np.ndarray:
    return enc.encode(x)


# ---------------------------------------------------------------------------
# embedding as a continuous cq channel
# ---------------------------------------------------------------------------

def lipschitz_holevo(dim_in: int, dim_out: int, gamma: float) -> float:
    """``2 N sqrt(N) (M log2(max(1/gamma, e)) + sqrt(M) log2(max(1/(gamma e), e)))``."""
    return 2.0 * dim_in * math.sqrt(dim_in) * (
        dim_out * max(math.log2(1.0 / gamma), math.log2(math.e))
        + math.sqrt(dim_out) * max(math.log2(1.0 / (gamma * math.e)), math.log2(math.e))
    )


def output_gamma(ch: QuantumChannel, resolution: int = 41, refine: int = 5) -> float:
    """Smallest output eigenvalue over pure inputs.

    The smallest eigenvalue of ``Phi(rho)`` is concave in ``rho``, so its
    minimum over all states is attained at a pure state. A coarse grid over
    the encoder box seeds bounded local searches.
    """
    enc = UniversalEncoder(ch.dim_in)
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(enc.lower, enc.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.linalg.eigvalsh(ch.apply_pure(enc.vectors(pts)))[:, 0]
    best = float(vals.min())
    bounds = list(zip(enc.lower, enc.upper))

    def fun(x):
        return float(np.linalg.eigvalsh(ch.apply_pure(enc.vectors(x[None])))[0, 0])

    for j in np.argsort(vals, kind="stable")[:refine]:
        res = minimize(fun, pts[j], method="L-BFGS-B", bounds=bounds)
        best = min(best, float(res.fun))
    return best


def embed(ch: QuantumChannel, gamma: float | None = None, floor: float = REGULARITY_FLOOR) -> ContinuousCqChannel:
    """Continuous cq channel ``x -> Phi(|v(x)><v(x)|)`` over the encoder box.

    The trace-norm Lipschitz constant of the encoded outputs is ``2 N sqrt(N)``
    (l1 norm on the box), which makes the entropic Lipschitz constant the one
    of :func:`lipschitz_holevo`.

    :raises RegularityViolation: if some output has eigenvalue below ``floor``
    """
    if gamma is None:
        gamma = output_gamma(ch)
    if gamma <= floor:
        raise RegularityViolation(gamma, floor)
    enc = UniversalEncoder(ch.dim_in)

    def state_map(points):
        return ch.apply_pure(enc.vectors(points))

    n = ch.dim_in
    return ContinuousCqChannel(
        enc.lower, enc.upper, state_map, ch.dim_out,
        lipschitz=2.0 * n * math.sqrt(n), gamma=gamma, name=ch.name,
    )


# ---------------------------------------------------------------------------
# Monte-Carlo gradient estimators
# ---------------------------------------------------------------------------

def _objective_at(states: np.ndarray, lam: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(states)
    w = np.where(w > 1e-14, w, 1.0)
    ent = -np.sum(w * np.log2(w), axis=1)
    return (states.reshape(len(states), -1) @ np.asarray(lam).T.ravel()).real - ent


@dataclass
class MCEstimate:
    """Monte-Carlo gradient estimate with empirical and theoretical error figures."""

    gradient: np.ndarray
    value: float | None
    se_op: float
    n_samples: int
    theory: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)


def uniform_mc_certificate(n: int, nu: float, dim_in: int, dim_out: int, L_NM: float,
                        delta: float | None = None) -> dict:
    """Concentration guarantee of the uniform estimator.

    ``P(||error||_op >= delta) <= M exp(-delta^2 n K)`` with
    ``K = 2^(-4 sqrt(N) L / nu) / 576`` for ``delta <= 2^(-sqrt(N) L / nu - 1)``.
    Quantities are returned in log10 form where they under/overflow. With
    ``delta=None`` the largest admissible ``delta`` is used.
    """
    a = math.sqrt(dim_in) * L_NM / nu
    log2_delta_max = -a - 1.0
    log2_K = -4.0 * a - math.log2(576.0)
    log2_delta = log2_delta_max if delta is None else min(math.log2(delta), log2_delta_max)
    log2_exponent = 2.0 * log2_delta + math.log2(n) + log2_K
    exponent = 2.0 ** log2_exponent if log2_exponent > -1000 else 0.0
    eta = dim_out * math.exp(-exponent)
    return {
        "log10_K": log2_K * math.log10(2.0),
        "log10_delta_max": log2_delta_max * math.log10(2.0),
        "log10_delta": log2_delta * math.log10(2.0),
        "eta": min(eta, 1.0) if eta < 1.0 else 1.0,
        "vacuous": eta >= 1.0,
        "delta_clipped": delta is not None and math.log2(delta) > log2_delta_max,
    }


def uniform_mc_samples_log10(delta: float, eta: float, nu: float, dim_in: int, dim_out: int, L_NM: float) -> float:
    """``log10`` of ``576 2^(4 sqrt(N) L / nu) ln(M/eta) / delta^2``, the sample count
    the concentration bound needs for accuracy ``delta`` at confidence ``1 - eta``."""
    log2_n = math.log2(576.0) + 4.0 * math.sqrt(dim_in) * L_NM / nu + math.log2(math.log(dim_out / eta)) - 2.0 * math.log2(delta)
    return log2_n * math.log10(2.0)


def importance_mc_samples(t: float, confidence: float, dim_out: int) -> int:
    """Samples for ``P(||error||_op >= t) <= 1 - confidence``: ``ceil(32 ln(M/(1-c)) / t^2)``."""
    return math.ceil(32.0 * math.log(dim_out / (1.0 - confidence)) / (t * t))


def importance_mc_radius(n: int, confidence: float, dim_out: int) -> float:
    """Accuracy ``t`` certified by ``n`` exact samples at the given confidence."""
    return math.sqrt(32.0 * math.log(dim_out / (1.0 - confidence)) / n)


def _uniform_points(channel: ContinuousCqChannel, n: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = np.asarray(channel.lower), np.asarray(channel.upper)
    return lo + (hi - lo) * rng.random((n, channel.ndim))


def mc_gradient_uniform(
    lam,
    nu: float,
    channel: ContinuousCqChannel,
    n_samples: int,
    rng: np.random.Generator | int | None = None,
    threads: int = 1,
    bootstrap: int = 100,
    dim_in: int | None = None,
) -> MCEstimate:
    """Self-normalized uniform Monte-Carlo estimate of ``grad G_nu``.

    ``sum_i 2^(f(X_i)/nu) rho_{X_i} / sum_i 2^(f(X_i)/nu)`` with ``X_i`` uniform
    on the box and weights shifted by their maximum. ``se_op`` is the bootstrap
    root-mean-square operator-norm deviation. When ``dim_in`` is given the
    concentration certificate for embedded quantum channels is attached.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(rng)
    lam = np.asarray(lam, dtype=complex)
    pts = _uniform_points(channel, n_samples, rng)
    boot = rng.integers(0, n_samples, size=(bootstrap, n_samples)) if bootstrap else None
    states = channel.states_at(pts, threads)
    x = _objective_at(states, lam) / nu
    m = float(x.max())
    w = np.exp2(x - m)
    flat = states.reshape(n_samples, -1)
    z = float(w.sum())
    grad = ((w @ flat) / z).reshape(lam.shape)
    value = nu * (m + math.log2(z / n_samples))
    se = 0.0
    if boot is not None:
        devs = []
        for idx in boot:
            counts = np.bincount(idx, minlength=n_samples) * w
            g = ((counts @ flat) / counts.sum()).reshape(lam.shape)
            devs.append(operator_norm(g - grad) ** 2)
        se = math.sqrt(float(np.mean(devs)))
    theory = {}
    if dim_in is not None and channel.gamma is not None:
        L_NM = lipschitz_holevo(dim_in, channel.dim, channel.gamma)
        theory = uniform_mc_certificate(n_samples, nu, dim_in, channel.dim, L_NM)
        theory["log10_samples_for_delta0.1_eta0.01"] = uniform_mc_samples_log10(0.1, 0.01, nu, dim_in, channel.dim, L_NM)
    ess = z * z / float(w @ w)
    return MCEstimate(grad, value, se, n_samples, theory, {"effective_sample_size": ess})


def _reflect(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    width = hi - lo
    y = np.mod(x - lo, 2.0 * width)
    return lo + np.where(y > width, 2.0 * width - y, y)


def mc_gradient_importance(
    lam,
    nu: float,
    channel: ContinuousCqChannel,
    n_samples: int,
    rng: np.random.Generator | int | None = None,
    proposal_step: float = 0.25,
    burn_in: int = 200,
    n_chains: int = 64,
    confidence: float = 0.99,
    threads: int = 1,
) -> MCEstimate:
    """Average of outputs at points drawn from ``Q(x) ∝ 2^(f(x)/nu)``.

    Sampling uses parallel random-walk Metropolis-Hastings chains (Gaussian
    steps of ``proposal_step`` times the box width per axis, reflected at the
    boundary, ``burn_in`` steps discarded). Samples are therefore only
    asymptotically ``Q``-distributed and correlated; the attached
    concentration radius assumes exact independent draws and is flagged so.
    ``se_op`` comes from the spread of the per-chain means.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(rng)
    lam = np.asarray(lam, dtype=complex)
    lo, hi = np.asarray(channel.lower), np.asarray(channel.upper)
    n_chains = max(1, min(n_chains, n_samples))
    per_chain = math.ceil(n_samples / n_chains)
    steps = burn_in + per_chain
    # all randomness drawn up front so results do not depend on threading
    start = lo + (hi - lo) * rng.random((n_chains, len(lo)))
    noise = rng.normal(size=(steps, n_chains, len(lo))) * (proposal_step * (hi - lo))
    log_u = np.log2(rng.random((steps, n_chains)))

    x = start
    fx = _objective_at(channel.states_at(x, threads), lam) / nu
    acc = np.zeros(n_chains)
    sums = np.zeros((n_chains, channel.dim * channel.dim), dtype=complex)
    sq = np.zeros(n_chains)
    for s in range(steps):
        prop = _reflect(x + noise[s], lo, hi)
        st = channel.states_at(prop, threads)
        fp = _objective_at(st, lam) / nu
        take = log_u[s] < fp - fx
        x = np.where(take[:, None], prop, x)
        fx = np.where(take, fp, fx)
        if s >= burn_in:
            acc += take
            cur = channel.states_at(x, threads).reshape(n_chains, -1)
            sums += cur
    means = sums / per_chain
    grad = means.mean(axis=0).reshape(channel.dim, channel.dim)
    devs = [operator_norm(m.reshape(channel.dim, channel.dim) - grad) ** 2 for m in means]
    se = math.sqrt(float(np.sum(devs)) / (n_chains * max(n_chains - 1, 1)))
    rate = float(acc.sum() / (n_chains * per_chain))
    if not 0.05 <= rate <= 0.95:
        warnings.warn(f"Metropolis acceptance rate {rate:.3f} outside [0.05, 0.95]; tune proposal_step",
                      stacklevel=2)
    n_used = n_chains * per_chain
    theory = {
        "t": importance_mc_radius(n_used, confidence, channel.dim),
        "confidence": confidence,
        "samples_for_t0.05": importance_mc_samples(0.05, confidence, channel.dim),
        "iid_assumption_violated": True,
    }
    return MCEstimate(grad, None, se, n_used, theory, {"acceptance_rate": rate, "chains": n_chains})


class UniformMCOracle:
    """Gradient oracle backed by :func:`mc_gradient_uniform` with fresh samples per call.

    The reported ``delta`` is three bootstrap standard errors.
    """

    deterministic = False

    def __init__(self, channel: ContinuousCqChannel, n_samples: int, seed: int | None = 0,
                 threads: int = 1, bootstrap: int = 20, dim_in: int | None = None):
        self.channel = channel
        self.n_samples = n_samples
        self.rng = np.random.default_rng(seed)
        self.threads = threads
        self.bootstrap = bootstrap
        self.dim_in = dim_in
        self.delta = 0.0
        self.eta = 0.0

    def evaluate(self, lam, nu: float) -> OracleEstimate:
        est = mc_gradient_uniform(lam, nu, self.channel, self.n_samples, self.rng, self.threads,
                                  self.bootstrap, self.dim_in)
        delta = 3.0 * est.se_op
        self.delta = max(self.delta, delta)
        eta = float(est.theory.get("eta", 0.0))
        self.eta = max(self.eta, eta)
        return OracleEstimate(est.gradient, est.value, delta, eta, {"theory": est.theory})


class ImportanceMCOracle:
    """Gradient oracle backed by :func:`mc_gradient_importance`.

    The reported ``delta`` is three chain-mean standard errors.
    """

    deterministic = False

    def __init__(self, channel: ContinuousCqChannel, n_samples: int, seed: int | None = 0,
                 proposal_step: float = 0.25, burn_in: int = 200, n_chains: int = 64, threads: int = 1):
        self.channel = channel
        self.n_samples = n_samples
        self.rng = np.random.default_rng(seed)
        self.kw = dict(proposal_step=proposal_step, burn_in=burn_in, n_chains=n_chains, threads=threads)
        self.delta = 0.0
        self.eta = 0.0

    def evaluate(self, lam, nu: float) -> OracleEstimate:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            est = mc_gradient_importance(lam, nu, self.channel, self.n_samples, self.rng, **self.kw)
        delta = 3.0 * est.se_op
        self.delta = max(self.delta, delta)
        self.eta = max(self.eta, 1.0 - est.theory["confidence"])
        return OracleEstimate(est.gradient, float("nan"), delta, 1.0 - est.theory["confidence"],
                              {"theory": est.theory, **est.details})


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplerSpec:
    """Gradient oracle choice.

    ``kind`` is ``"trapezoid"`` (with ``resolution``), ``"uniform"`` or
    ``"importance"`` (with ``n_samples`` and ``seed``).
    """

    kind: str = "trapezoid"
    resolution: tuple[int, ...] | None = None
    n_samples: int = 10_000
    seed: int = 0
    proposal_step: float = 0.25
    burn_in: int = 200

    def __post_init__(self):
        if self.kind not in ("trapezoid", "uniform", "importance"):
            raise ValueError(f"unknown oracle kind {self.kind!r}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "SamplerSpec":
        """Parse ``trapezoid:100x200``, ``uniform:100000`` or ``importance:50000``."""
        kind, _, arg = text.partition(":")
        if kind == "trapezoid":
            res = tuple(int(r) for r in arg.lower().split("x")) if arg else None
            return cls("trapezoid", res, seed=seed)
        if kind in ("uniform", "importance"):
            return cls(kind, None, int(float(arg)) if arg else 10_000, seed)
        raise ValueError(f"unknown oracle {text!r}")


def default_resolution(dim_in: int) -> tuple[int, ...]:
    if dim_in == 2:
        return (100, 200)
    return (12,) * (2 * dim_in - 2)


def holevo_capacity(
    ch: QuantumChannel,
    eps: float | None = None,
    iterations: int | None = None,
    sampler: SamplerSpec | str | None = None,
    method: str | None = None,
    nu: float | None = None,
    perturb_xi: float | None = None,
    threads: int = 1,
    stride: int = 1,
    evaluation_resolution: tuple[int, ...] | None = None,
) -> SolverReport:
    """Certified bracket on the Holevo capacity of ``ch``.

    The trapezoid oracle runs the accelerated scheme on the discretized dual
    (``method="accelerated"``); Monte-Carlo oracles drive the projected
    gradient method (``method="projected"``), whose bounds are evaluated on a
    trapezoid grid. With ``perturb_xi`` the channel is first mixed with white
    noise and ``details['certified_interval']`` widens the bracket by the
    capacity shift bound.
    """
    if isinstance(sampler, str):
        sampler = SamplerSpec.parse(sampler)
    sampler = sampler or SamplerSpec()
    shift = 0.0
    original_name = ch.name
    if perturb_xi is not None:
        pert = perturb(ch, perturb_xi)
        ch, shift = pert.channel, pert.capacity_shift_bound
    cq = embed(ch)
    res = sampler.resolution or default_resolution(ch.dim_in)
    if method is None:
        method = "accelerated" if sampler.kind == "trapezoid" else "projected"
    if method not in ("accelerated", "projected"):
        raise ValueError("method must be 'accelerated' or 'projected'")
    if sampler.kind == "trapezoid":
        oracle = QuadratureOracle(cq, res, threads=threads, estimate_error=method == "projected")
        grid = oracle.grid
    else:
        grid = build_grid(cq, evaluation_resolution or res, threads=threads)
        if sampler.kind == "uniform":
            oracle = UniformMCOracle(cq, sampler.n_samples, sampler.seed, threads, dim_in=ch.dim_in)
        else:
            oracle = ImportanceMCOracle(cq, sampler.n_samples, sampler.seed, sampler.proposal_step,
                                        sampler.burn_in, threads=threads)
    if method == "accelerated":
        if sampler.kind != "trapezoid":
            raise ValueError("the accelerated method needs the deterministic trapezoid oracle")
        report = solve_continuous(cq, grid, eps=eps, iterations=iterations, nu=nu, stride=stride)
    else:
        report = solve_inexact(cq, oracle, eps=eps, grid=grid, iterations=iterations, nu=nu, stride=stride)
    report.details.update(
        channel=original_name,
        dim_in=ch.dim_in,
        dim_out=ch.dim_out,
        choi_tier=ch.tier,
        oracle=sampler.kind,
        oracle_seed=sampler.seed if sampler.kind != "trapezoid" else None,
        perturbation_xi=perturb_xi,
        perturbation_bound=shift,
        certified_interval=[report.lower_bound - shift, report.upper_bound + shift],
        lipschitz_holevo=lipschitz_holevo(ch.dim_in, ch.dim_out, cq.gamma),
    )
    return report
