"""Capacity bounds for classical-quantum channels with a finite input alphabet.

The capacity ``max_p H(sum_i p_i rho_i) - sum_i p_i H(rho_i)`` is attacked
through its Lagrange dual ``min_lam F(lam) + G(lam)`` with

* ``F(lam) = log2 Tr 2^(-lam)``
* ``G(lam) = max_p <p, b(lam) - a>``, ``a_i = H(rho_i)``, ``b_i = Tr[rho_i lam]``.

``G`` is replaced by an entropy-smoothed ``G_nu`` and the smooth problem is
minimized with an accelerated projected gradient scheme over the Frobenius
ball that contains a dual optimizer. Every iterate yields a certified
bracket: the dual value ``F + G`` is an upper bound and the Holevo
information of the averaged primal iterates is a lower bound.

Gradients are taken in the real inner-product space of Hermitian matrices
with ``<A, B> = Tr[A B]``, so ``grad Tr[rho lam] = rho``.

The accelerated loop in :func:`accelerated_dual` is shared with the
continuous-alphabet solver, which presents a quadrature grid as a weighted
finite alphabet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConstraintSolveFailure, InfeasibleConstraint
from .linalg import (
    REGULARITY_FLOOR,
    binary_entropy,
    density_matrix,
    dual_radius,
    entropies,
    min_spectrum_gamma,
    project_frobenius_ball,
    trace_norm,
    von_neumann_entropy,
    _eigh,
    _from_spectrum,
)

NEWTON_MAX_STEPS = 200


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscreteCqChannel:
    """Finite cq channel ``i -> rho_i`` with an optional cost constraint.

    :param states: array of shape ``(N, M, M)``; each entry a density matrix
    :param cost: optional nonnegative cost per input symbol
    :param budget: optional bound ``S`` on the expected cost
    :param labels: optional names of the input symbols
    """

    states: np.ndarray
    cost: np.ndarray | None = None
    budget: float | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        states = np.asarray(self.states, dtype=complex)
        if states.ndim != 3 or states.shape[1] != states.shape[2] or states.shape[0] < 1:
            raise ValueError(f"states must have shape (N, M, M) with N >= 1, got {states.shape}")
        states = np.array([density_matrix(r) for r in states])
        states.setflags(write=False)
        object.__setattr__(self, "states", states)
        if (self.cost is None) != (self.budget is None):
            raise ValueError("cost and budget must be given together")
        if self.cost is not None:
            cost = np.asarray(self.cost, dtype=float).copy()
            if cost.shape != (states.shape[0],):
                raise ValueError(f"cost must have length {states.shape[0]}")
            if np.any(cost < 0) or not np.all(np.isfinite(cost)):
                raise ValueError("costs must be finite and nonnegative")
            budget = float(self.budget)
            if budget < 0:
                raise ValueError("budget must be nonnegative")
            if budget < cost.min():
                raise InfeasibleConstraint(
                    f"budget {budget:g} is below the cheapest input cost {cost.min():g}"
                )
            cost.setflags(write=False)
            object.__setattr__(self, "cost", cost)
            object.__setattr__(self, "budget", budget)
        if self.labels is not None:
            if len(self.labels) != states.shape[0]:
                raise ValueError("one label per input symbol is required")
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        ent = entropies(states)
        ent.setflags(write=False)
        object.__setattr__(self, "_entropies", ent)
        object.__setattr__(self, "_flat", states.reshape(states.shape[0], -1))

    @property
    def n_inputs(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def constrained(self) -> bool:
        return self.cost is not None

    @property
    def state_entropies(self) -> np.ndarray:
        return self._entropies

    def permuted(self, order: Sequence[int]) -> "DiscreteCqChannel":
        order = np.asarray(order)
        return DiscreteCqChannel(
            self.states[order],
            None if self.cost is None else self.cost[order],
            self.budget,
            None if self.labels is None else tuple(self.labels[i] for i in order),
        )


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters for :func:`solve`.

    :param target_error: requested accuracy ``eps`` in bits
    :param stop_mode: ``"a_priori"`` runs the iteration count that guarantees
        ``eps``; ``"a_posteriori"`` keeps the same smoothing but stops as soon as
        the measured gap ``UB - LB`` is at most ``eps``
    :param posterior_check_stride: bounds are evaluated (and traced) every this
        many iterations
    :param max_iterations: hard cap on the iteration index
    :param iterations: run exactly this many iterations instead of deriving
        them from ``target_error``
    :param nu: override the smoothing parameter
    """

    target_error: float | None = 1e-2
    stop_mode: str = "a_priori"
    posterior_check_stride: int = 10
    max_iterations: int = 10_000_000
    iterations: int | None = None
    nu: float | None = None

    def __post_init__(self):
        if self.stop_mode not in ("a_priori", "a_posteriori"):
            raise ValueError("stop_mode must be 'a_priori' or 'a_posteriori'")
        if self.iterations is None and (self.target_error is None or not self.target_error > 0):
            raise ValueError("target_error must be positive unless iterations is given")
        if self.iterations is not None and self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if self.posterior_check_stride < 1:
            raise ValueError("posterior_check_stride must be at least 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if self.nu is not None and not self.nu > 0:
            raise ValueError("nu must be positive")
        if self.stop_mode == "a_posteriori" and self.target_error is None:
            raise ValueError("a_posteriori stopping needs target_error")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    upper_bound: float
    lower_bound: float
    nu: float

    @property
    def posterior_error(self) -> float:
        return self.upper_bound - self.lower_bound


@dataclass
class SolverReport:
    """Result of a capacity computation.

    ``upper_bound`` and ``lower_bound`` bracket the capacity of the channel
    that was actually solved; ``details`` holds method-specific diagnostics
    (radius, constants, perturbation accounting, oracle certificates).
    """

    upper_bound: float
    lower_bound: float
    iterations: int
    nu: float
    a_priori_error: float | None
    a_posteriori_error: float
    input_distribution: np.ndarray
    trace: list[TraceRecord] = field(default_factory=list)
    converged: bool = True
    method: str = "accelerated"
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# dual objective pieces
# ---------------------------------------------------------------------------

def dual_F(lam) -> tuple[float, np.ndarray]:
    """Value and gradient of ``F(lam) = log2 Tr 2^(-lam)``.

    The gradient is ``-2^(-lam) / Tr 2^(-lam)``. One eigen-decomposition,
    shifted by the smallest eigenvalue so nothing overflows.
    """
    w, v = _eigh(np.asarray(lam, dtype=complex))
    shift = float(w[0])
    e = np.exp2(shift - w)
    z = float(e.sum())
    return float(np.log2(z) - shift), -_from_spectrum(e / z, v)


def _base2_softmax(x: np.ndarray, log2_prior: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Return ``q ∝ prior * 2^x`` and ``log2 sum prior * 2^x`` (max-subtracted)."""
    if log2_prior is not None:
        x = x + log2_prior
    m = float(np.max(x))
    e = np.exp2(x - m)
    z = float(e.sum())
    return e / z, m + math.log2(z)


def _relative_entropy_bits(q: np.ndarray, log2_prior: np.ndarray | None) -> float:
    pos = q > 0
    if log2_prior is None:
        return float(np.sum(q[pos] * np.log2(q[pos] * q.size)))
    return float(np.sum(q[pos] * (np.log2(q[pos]) - log2_prior[pos])))


def _tilt_for_cost(
    x: np.ndarray,
    log2_prior: np.ndarray | None,
    cost: np.ndarray,
    budget: float,
    max_steps: int = NEWTON_MAX_STEPS,
) -> np.ndarray:
    """Distribution ``q ∝ prior * 2^(x + u cost)`` with ``<q, cost> = budget``.

    The scalar ``u`` minimizes the convex function
    ``psi(u) = log2 sum prior 2^(x + u cost) - u budget`` with
    ``psi' = <q, cost> - budget`` and ``psi'' = ln2 Var_q(cost)``. Newton steps
    are safeguarded by a sign bracket and fall back to bisection.
    """
    c_min, c_max = float(cost.min()), float(cost.max())
    span = c_max - c_min
    tol = 1e-12 * max(1.0, abs(c_max))
    if span <= tol or budget >= c_max - tol:
        return _base2_softmax(x, log2_prior)[0]
    if budget <= c_min + tol:
        # limit u -> -inf: all mass on the cheapest inputs
        mask = cost <= c_min + tol
        q = np.zeros_like(x)
        sub = None if log2_prior is None else log2_prior[mask]
        q[mask] = _base2_softmax(x[mask], sub)[0]
        return q

    def moments(u: float) -> tuple[np.ndarray, float, float]:
        q = _base2_softmax(x + u * cost, log2_prior)[0]
        mean = float(q @ cost)
        var = float(q @ (cost - mean) ** 2)
        return q, mean - budget, var

    lo, hi = -np.inf, np.inf
    u = 0.0
    for _ in range(max_steps):
        q, d, var = moments(u)
        if abs(d) <= tol:
            return q
        if d > 0:
            hi = u
        else:
            lo = u
        step = d / (math.log(2.0) * var) if var > 0 else np.inf
        cand = u - step
        if not (lo < cand < hi) or not np.isfinite(cand):
            if np.isfinite(lo) and np.isfinite(hi):
                cand = 0.5 * (lo + hi)
            else:
                # expand outwards until the sign flips
                width = max(1.0, abs(u)) / span
                cand = u - 2.0 * width if d > 0 else u + 2.0 * width
        u = cand
    q, d, _ = moments(u)
    if abs(d) <= 1e3 * tol:
        return q
    raise ConstraintSolveFailure(
        f"cost multiplier search did not converge in {max_steps} steps (residual {d:.3e})"
    )


def smoothed_max(
    x: np.ndarray,
    nu: float,
    log2_prior: np.ndarray | None = None,
    cost: np.ndarray | None = None,
    budget: float | None = None,
) -> tuple[float, np.ndarray]:
    """Entropy-smoothed maximum of ``x`` over the probability simplex.

    Computes ``max_q <q, x> - nu * D(q || prior)`` (relative entropy in bits),
    optionally restricted to ``<q, cost> = budget``. ``prior`` defaults to
    uniform, which gives ``<q, x> + nu H(q) - nu log2 N``.

    :returns: ``(value, q)``
    """
    if cost is None:
        q, lse = _base2_softmax(x / nu, log2_prior)
        if log2_prior is None:
            return nu * (lse - math.log2(x.size)), q
        return nu * lse, q
    q = _tilt_for_cost(x / nu, log2_prior, cost, budget)
    return float(q @ x) - nu * _relative_entropy_bits(q, log2_prior), q


def exact_max(x: np.ndarray, cost: np.ndarray | None = None, budget: float | None = None) -> tuple[float, np.ndarray]:
    """``max <p, x>`` over the simplex, optionally with ``<p, cost> <= budget``.

    The constrained linear program attains its maximum on a vertex of the
    feasible polytope: a single affordable input, or two inputs straddling
    the budget with the constraint tight. Ties go to the lowest index.

    :returns: ``(value, p)``
    """
    n = x.size
    p = np.zeros(n)
    if cost is None or budget >= cost.max():
        i = int(np.argmax(x))
        p[i] = 1.0
        return float(x[i]), p
    cheap = np.flatnonzero(cost <= budget)
    dear = np.flatnonzero(cost > budget)
    i = cheap[int(np.argmax(x[cheap]))]
    best, best_p = float(x[i]), (i, None, 1.0)
    low = cheap[cost[cheap] < budget]
    if low.size and dear.size:
        si, sj = cost[low][:, None], cost[dear][None, :]
        t = (sj - budget) / (sj - si)
        vals = t * x[low][:, None] + (1.0 - t) * x[dear][None, :]
        a, b = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[a, b] > best:
            best, best_p = float(vals[a, b]), (low[a], dear[b], float(t[a, b]))
    i, j, t = best_p
    p[i] = t
    if j is not None:
        p[j] = 1.0 - t
    return best, p


def holevo_information(p, channel) -> float:
    """Holevo information ``H(sum p_i rho_i) - sum p_i H(rho_i)`` in bits."""
    p = np.asarray(p, dtype=float)
    sigma = np.tensordot(p, channel.states, axes=1)
    return von_neumann_entropy(sigma) - float(p @ channel.state_entropies)


def _objective_vector(lam: np.ndarray, channel) -> np.ndarray:
    """``b(lam) - a`` with ``b_i = Tr[rho_i lam]``."""
    return (channel._flat @ lam.T.ravel()).real - channel.state_entropies


def smoothed_G(lam, nu: float, channel: DiscreteCqChannel, constrained: bool | None = None) -> tuple[float, np.ndarray, np.ndarray]:
    """Smoothed inner maximum ``G_nu(lam)`` with its gradient and maximizer.

    Unconstrained: ``p`` is the base-2 softmax of ``(b - a) / nu`` and the value
    is ``nu log2 sum 2^((b-a)/nu) - nu log2 N``. Constrained (default when the
    channel has a cost): the maximization is restricted to
    ``<p, cost> = budget``. The gradient is ``sum_i p_i rho_i``.

    :returns: ``(value, gradient, p)``
    """
    lam = np.asarray(lam, dtype=complex)
    if constrained is None:
        constrained = channel.constrained
    x = _objective_vector(lam, channel)
    if constrained:
        value, p = smoothed_max(x, nu, None, channel.cost, channel.budget)
    else:
        value, p = smoothed_max(x, nu)
    grad = (p @ channel._flat).reshape(lam.shape)
    return value, grad, p


def exact_G(lam, channel: DiscreteCqChannel) -> float:
    """Unsmoothed inner maximum ``G(lam)``, with ``<p, cost> <= budget`` if constrained."""
    x = _objective_vector(np.asarray(lam, dtype=complex), channel)
    return exact_max(x, channel.cost, channel.budget)[0]


def fannes_audenaert_bound(t: float, dim: int) -> float:
    """Entropy continuity bound ``t log2(dim-1) + Hb(t)`` for trace distance ``t``.

    Valid for ``t <= 1 - 1/dim``.
    """
    if not 0.0 <= t <= 1.0 - 1.0 / dim:
        raise ValueError("trace distance outside the range of the continuity bound")
    return t * math.log2(dim - 1) + binary_entropy(t) if dim > 1 else 0.0


def perturb_channel(channel: DiscreteCqChannel, xi: float) -> tuple[DiscreteCqChannel, float]:
    """Mix every output with white noise: ``rho_i -> (1 - xi) rho_i + xi I/M``.

    Every perturbed output has minimum eigenvalue at least ``xi/M``. The
    capacity moves by at most ``2 (T log2(M-1) + Hb(T))`` where ``T`` is the
    largest trace distance between an original and a perturbed output, since
    both the averaged output entropy and the average of output entropies obey
    the continuity bound.

    :returns: ``(perturbed channel, capacity shift bound)``
    """
    if not 0.0 < xi < 0.5:
        raise ValueError("xi must lie in (0, 1/2)")
    m = channel.dim
    noise = np.eye(m) / m
    new_states = (1.0 - xi) * channel.states + xi * noise
    t = max(0.5 * trace_norm(a - b) for a, b in zip(channel.states, new_states))
    bound = 2.0 * fannes_audenaert_bound(t, m)
    return DiscreteCqChannel(new_states, channel.cost, channel.budget, channel.labels), bound


# ---------------------------------------------------------------------------
# parameter schedule
# ---------------------------------------------------------------------------

def schedule(k_total: int, D1: float, D2: float) -> float:
    """Smoothing parameter ``nu = 2/(k+1) * sqrt(2 D1 / D2)`` for ``k`` iterations."""
    if D2 <= 0:
        # one input symbol: smoothing changes nothing
        return 1.0
    return 2.0 / (k_total + 1) * math.sqrt(2.0 * D1 / D2)


def a_priori_error(k: int, D1: float, D2: float) -> float:
    """Guaranteed gap after ``k`` iterations, ``4 sqrt(2 D1 D2)/(k+1) + 16 D1/(k+1)^2``."""
    return 4.0 * math.sqrt(2.0 * D1 * D2) / (k + 1) + 16.0 * D1 / (k + 1) ** 2


def iterations_for(eps: float, D1: float, D2: float) -> int:
    """Smallest ``k`` whose a-priori error is at most ``eps``.

    Solves the quadratic in ``1/(k+1)`` exactly:
    ``k + 1 = ceil((A + sqrt(A^2 + 64 D1 eps)) / (2 eps))``, ``A = 4 sqrt(2 D1 D2)``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    A = 4.0 * math.sqrt(2.0 * D1 * D2)
    k1 = math.ceil((A + math.sqrt(A * A + 64.0 * D1 * eps)) / (2.0 * eps))
    # guard against the ceiling landing one short through rounding
    while a_priori_error(k1 - 1, D1, D2) > eps:
        k1 += 1
    return max(k1 - 1, 0)


def prox_constants(channel: DiscreteCqChannel, floor: float = REGULARITY_FLOOR) -> dict:
    """``gamma``, dual radius ``r`` and ``D1 = r^2/2``, ``D2 = log2 N``."""
    gamma = min_spectrum_gamma(channel, floor)
    r = dual_radius(channel.dim, gamma)
    return {"gamma": gamma, "radius": r, "D1": 0.5 * r * r, "D2": math.log2(channel.n_inputs)}


# ---------------------------------------------------------------------------
# accelerated scheme
# ---------------------------------------------------------------------------

@dataclass
class _LoopResult:
    lam_hat: np.ndarray
    p_hat: np.ndarray
    upper_bound: float
    lower_bound: float
    last_index: int
    trace: list[TraceRecord]
    reached_target: bool


def accelerated_dual(
    smoothed: Callable[[np.ndarray, float], tuple[float, np.ndarray, np.ndarray]],
    exact_bound: Callable[[np.ndarray], float],
    lower_bound: Callable[[np.ndarray], float],
    dim: int,
    radius: float,
    nu: float,
    k: int,
    stride: int = 1,
    stop_below: float | None = None,
    observer: Callable[[int, np.ndarray, np.ndarray, np.ndarray], None] | None = None,
) -> _LoopResult:
    """Accelerated projected gradient on ``F + G_nu`` over the Frobenius ball.

    Steps ``m = 0..k`` with ``lam_0 = 0`` and ``L = 2 + 1/nu``:

    * ``g_m = grad F(lam_m) + grad G_nu(lam_m)``
    * ``y_m = proj(lam_m - g_m / L)``
    * ``z_m = proj(-(1/(2L)) sum_{i<=m} (i+1)/2 g_i)`` (running sum)
    * ``lam_{m+1} = 2/(m+3) z_m + (m+1)/(m+3) y_m``

    The dual estimate is ``y_m`` and the primal estimate the weighted average
    ``sum_i 2(i+1)/((m+1)(m+2)) p_nu(lam_i)``. Bounds are evaluated at every
    ``stride``-th step and at the last one; with ``stop_below`` the loop exits
    at the first evaluation whose gap is at most that value.

    :param smoothed: ``lam, nu -> (G_nu, grad G_nu, p_nu)``
    :param exact_bound: ``lam -> G(lam)``, the unsmoothed inner maximum
    :param lower_bound: ``p -> I(p)``
    :param observer: called as ``observer(m, lam_m, y_m, z_m)`` every step
    """
    L = 2.0 + 1.0 / nu
    lam = np.zeros((dim, dim), dtype=complex)
    grad_sum = np.zeros_like(lam)
    p_sum = None
    trace: list[TraceRecord] = []
    ub = lb = float("nan")
    y = lam
    m = 0
    reached = False
    for m in range(k + 1):
        _, gF = dual_F(lam)
        _, gG, p = smoothed(lam, nu)
        g = gF + gG
        y = project_frobenius_ball(lam - g / L, radius)
        grad_sum += 0.5 * (m + 1) * g
        z = project_frobenius_ball(grad_sum * (-0.5 / L), radius)
        p_sum = (m + 1) * p if p_sum is None else p_sum + (m + 1) * p
        if observer is not None:
            observer(m, lam, y, z)
        if m % stride == 0 or m == k:
            p_hat = p_sum * (2.0 / ((m + 1) * (m + 2)))
            ub = dual_F(y)[0] + exact_bound(y)
            lb = lower_bound(p_hat)
            trace.append(TraceRecord(m, ub, lb, nu))
            if stop_below is not None and ub - lb <= stop_below:
                reached = True
                break
        lam = (2.0 / (m + 3)) * z + ((m + 1) / (m + 3)) * y
    p_hat = p_sum * (2.0 / ((m + 1) * (m + 2)))
    return _LoopResult(y, p_hat, ub, lb, m, trace, reached)


def solve(channel: DiscreteCqChannel, config: SolverConfig | None = None) -> SolverReport:
    """Certified capacity bracket for a finite cq channel.

    Without a cost constraint (or when the unconstrained optimum already
    respects the budget) one accelerated run is made. Otherwise the problem is
    re-solved with the budget imposed as an equality, which has the same
    optimal value when the constraint is active.

    :raises RegularityViolation: if some output state is (numerically) singular
    :raises ConstraintSolveFailure: if the cost multiplier search diverges
    """
    config = config or SolverConfig()
    consts = prox_constants(channel)
    D1, D2, radius = consts["D1"], consts["D2"], consts["radius"]

    if config.iterations is not None:
        k_plan = config.iterations
    else:
        k_plan = iterations_for(config.target_error, D1, D2)
    nu = config.nu if config.nu is not None else schedule(k_plan, D1, D2)
    k_run = min(k_plan, config.max_iterations)
    stop_below = config.target_error if config.stop_mode == "a_posteriori" else None

    def run(constrained: bool) -> _LoopResult:
        def smoothed(lam, nu_):
            return smoothed_G(lam, nu_, channel, constrained=constrained)

        def exact_bound(lam):
            # always the inequality-constrained maximum: a valid dual bound
            return exact_max(_objective_vector(lam, channel), channel.cost, channel.budget)[0]

        return accelerated_dual(
            smoothed,
            exact_bound,
            lambda p: holevo_information(p, channel),
            channel.dim,
            radius,
            nu,
            k_run,
            config.posterior_check_stride,
            stop_below,
        )

    constraint_active = False
    res = run(False)
    if channel.constrained and float(res.p_hat @ channel.cost) > channel.budget + 1e-12:
        constraint_active = True
        res = run(True)

    posterior = res.upper_bound - res.lower_bound
    if config.stop_mode == "a_posteriori":
        converged = res.reached_target
    elif config.iterations is not None:
        converged = k_run == k_plan
    else:
        converged = k_run == k_plan and posterior <= config.target_error
    # the guarantee only applies to the scheduled smoothing at the planned index
    apriori = None
    if config.nu is None and res.last_index == k_plan:
        apriori = a_priori_error(k_plan, D1, D2)
    details = dict(consts)
    details.update(
        constraint_active=constraint_active,
        planned_iterations=k_plan,
        stop_mode=config.stop_mode,
        stride=config.posterior_check_stride,
        regularity_floor=REGULARITY_FLOOR,
    )
    if config.stop_mode == "a_posteriori":
        details["nu_note"] = "smoothing fixed from the a-priori iteration count"
    return SolverReport(
        upper_bound=res.upper_bound,
        lower_bound=res.lower_bound,
        iterations=res.last_index,
        nu=nu,
        a_priori_error=apriori,
        a_posteriori_error=posterior,
        input_distribution=res.p_hat,
        trace=res.trace,
        converged=converged,
        method="accelerated",
        details=details,
    )
