"""Capacity bounds for cq channels whose inputs range over a box in R^d.

Integrals over the input box are replaced by a product trapezoid rule. On the
grid the smoothed dual is the finite-alphabet one with a non-uniform prior
``w_j / volume``, so the same accelerated scheme applies
(:func:`solve_continuous`). When gradients come from an inexact oracle
(Monte-Carlo, coarse quadrature) the plain projected gradient method of
:func:`solve_inexact` is used, with a certificate that accounts for the
smoothing gap ``iota(nu)`` and the oracle accuracy ``delta``.

Lipschitz constants on the input box are taken with respect to the l1 norm.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy.optimize import minimize

from .discrete import (
    SolverReport,
    TraceRecord,
    accelerated_dual,
    dual_F,
    exact_max,
    schedule,
    smoothed_max,
)
from .errors import InfeasibleConstraint, RegularityViolation
from .linalg import (
    REGULARITY_FLOOR,
    dual_radius,
    min_spectrum_gamma,
    operator_norm,
    project_frobenius_ball,
    von_neumann_entropy,
)

MAX_GRID_NODES = 10_000_000
CHUNK = 4096
DEFAULT_RESOLUTION = 100


# ---------------------------------------------------------------------------
# channel and grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ContinuousCqChannel:
    """cq channel ``x -> rho_x`` on the box ``[lower, upper]``.

    :param lower: per-axis lower bounds
    :param upper: per-axis upper bounds
    :param state_map: vectorized map from points of shape ``(n, d)`` to states
        of shape ``(n, M, M)``
    :param dim: output dimension ``M``
    :param lipschitz: trace-norm Lipschitz constant of ``x -> rho_x`` (l1 norm
        on the box); estimated from the grid when ``None``
    :param cost: optional vectorized cost ``s(x)``
    :param cost_lipschitz: Lipschitz constant of ``s``; estimated when ``None``
    :param budget: bound on the expected cost
    :param gamma: known lower bound on every output eigenvalue; the grid
        minimum is used when ``None``
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    state_map: Callable[[np.ndarray], np.ndarray]
    dim: int
    lipschitz: float | None = None
    cost: Callable[[np.ndarray], np.ndarray] | None = None
    cost_lipschitz: float | None = None
    budget: float | None = None
    gamma: float | None = None
    name: str = ""

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper must have the same positive length")
        if any(not h > l for l, h in zip(lo, hi)):
            raise ValueError("the input box must have positive extent on every axis")
        if (self.cost is None) != (self.budget is None):
            raise ValueError("cost and budget must be given together")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def ndim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    @property
    def constrained(self) -> bool:
        return self.cost is not None

    def states_at(self, points: np.ndarray, threads: int = 1) -> np.ndarray:
        """Evaluate the state map in fixed-size chunks, optionally in parallel.

        Chunk boundaries do not depend on ``threads``, so results are
        bit-identical for any worker count.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        chunks = [points[i:i + CHUNK] for i in range(0, len(points), CHUNK)]
        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(self.state_map, chunks))
        else:
            parts = [self.state_map(c) for c in chunks]
        return np.concatenate([np.asarray(p, dtype=complex) for p in parts]) if parts else np.zeros((0, self.dim, self.dim), complex)


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Product quadrature nodes with cached states and entropies."""

    nodes: np.ndarray
    weights: np.ndarray
    states: np.ndarray
    entropies: np.ndarray
    resolution: tuple[int, ...]
    axes: tuple[np.ndarray, ...]
    rule: str
    costs: np.ndarray | None = None
    min_eigenvalue: float = float("nan")

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    @property
    def n_nodes(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def flat_states(self) -> np.ndarray:
        return self.states.reshape(len(self.states), -1)

    @property
    def log2_prior(self) -> np.ndarray:
        return np.log2(self.weights / self.weights.sum())


def _axis_rule(lo: float, hi: float, n: int, rule: str) -> tuple[np.ndarray, np.ndarray]:
    if n < 1:
        raise ValueError("resolution must be positive on every axis")
    if n == 1:
        return np.array([0.5 * (lo + hi)]), np.array([hi - lo])
    if rule == "trapezoid":
        x = np.linspace(lo, hi, n)
        w = np.full(n, (hi - lo) / (n - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        return x, w
    if rule == "midpoint":
        h = (hi - lo) / n
        return lo + h * (np.arange(n) + 0.5), np.full(n, h)
    raise ValueError(f"unknown quadrature rule {rule!r}")


def build_grid(
    channel: ContinuousCqChannel,
    resolution: int | Sequence[int] = DEFAULT_RESOLUTION,
    rule: str = "trapezoid",
    threads: int = 1,
    max_nodes: int = MAX_GRID_NODES,
    check_states: bool = True,
) -> QuadratureGrid:
    """Tensor-product quadrature grid with states and entropies precomputed.

    :param resolution: nodes per axis (an int applies to every axis)
    :param rule: ``"trapezoid"`` (end nodes half-weighted) or ``"midpoint"``
    :raises MemoryError: if the node count exceeds ``max_nodes``
    :raises ValueError: if a node's state is not a density matrix
    """
    res = (int(resolution),) * channel.ndim if np.isscalar(resolution) else tuple(int(r) for r in resolution)
    if len(res) != channel.ndim:
        raise ValueError(f"need {channel.ndim} resolutions, got {len(res)}")
    total = int(np.prod(res))
    if total > max_nodes:
        raise MemoryError(f"{total} grid nodes exceed the cap of {max_nodes}")
    rules = [_axis_rule(lo, hi, n, rule) for lo, hi, n in zip(channel.lower, channel.upper, res)]
    axes = tuple(r[0] for r in rules)
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    wmesh = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    weights = np.prod(np.stack([m.ravel() for m in wmesh]), axis=0)

    states = channel.states_at(nodes, threads)
    if states.shape != (total, channel.dim, channel.dim):
        raise ValueError(f"state_map returned shape {states.shape}")
    states = 0.5 * (states + states.conj().transpose(0, 2, 1))
    eig = np.linalg.eigvalsh(states)
    if check_states:
        tr = eig.sum(axis=1)
        bad = np.flatnonzero(np.abs(tr - 1.0) > 1e-9)
        if bad.size:
            raise ValueError(f"state at node {nodes[bad[0]]} has trace {tr[bad[0]]:.12g}")
        if eig[:, 0].min() < -1e-10:
            i = int(np.argmin(eig[:, 0]))
            raise ValueError(f"state at node {nodes[i]} has eigenvalue {eig[i, 0]:.3e}")
    clipped = np.where(eig > 1e-14, eig, 1.0)
    ent = -np.sum(clipped * np.log2(clipped), axis=1)
    costs = None
    if channel.cost is not None:
        costs = np.asarray(channel.cost(nodes), dtype=float).reshape(total)
    return QuadratureGrid(nodes, weights, states, ent, res, axes, rule, costs, float(eig[:, 0].min()))


# ---------------------------------------------------------------------------
# smoothed dual on the grid
# ---------------------------------------------------------------------------

def _grid_objective(lam: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    return (grid.flat_states @ np.asarray(lam, dtype=complex).T.ravel()).real - grid.entropies


def _smoothed_masses(lam, nu: float, grid: QuadratureGrid, channel: ContinuousCqChannel | None, constrained: bool):
    x = _grid_objective(lam, grid)
    if constrained:
        value, q = smoothed_max(x, nu, grid.log2_prior, grid.costs, channel.budget)
    else:
        value, q = smoothed_max(x, nu, grid.log2_prior)
    grad = (q @ grid.flat_states).reshape(grid.dim, grid.dim)
    return value, grad, q


def smoothed_G_quadrature(
    lam,
    nu: float,
    grid: QuadratureGrid,
    channel: ContinuousCqChannel | None = None,
    constrained: bool | None = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Quadrature approximation of the smoothed inner maximum.

    Value ``nu log2 sum_j w_j 2^(f_j/nu) - nu log2 volume`` with
    ``f_j = Tr[rho_j lam] - H(rho_j)``; gradient ``sum_j w_j p_j rho_j``.
    With a cost constraint the density is tilted so that
    ``sum_j w_j p_j s_j = budget``.

    :returns: ``(value, gradient, density p at the nodes)``
    """
    if constrained is None:
        constrained = channel is not None and channel.constrained
    value, grad, q = _smoothed_masses(lam, nu, grid, channel, constrained)
    return value, grad, q / grid.weights


def grid_holevo_information(masses: np.ndarray, grid: QuadratureGrid) -> float:
    """Holevo information of the finite ensemble ``{masses_j, rho_j}``."""
    sigma = (masses @ grid.flat_states).reshape(grid.dim, grid.dim)
    return von_neumann_entropy(sigma) - float(masses @ grid.entropies)


def supremum_f(
    lam,
    grid: QuadratureGrid,
    channel: ContinuousCqChannel,
    refine: bool = True,
    starts: int = 3,
) -> tuple[float, np.ndarray]:
    """``sup_x Tr[rho_x lam] - H(rho_x)`` over the box.

    The best grid nodes seed bounded quasi-Newton searches; the result is
    never below the grid maximum.

    :returns: ``(value, maximizing point)``
    """
    lam = np.asarray(lam, dtype=complex)
    x = _grid_objective(lam, grid)
    order = np.argsort(-x, kind="stable")[:max(starts, 1)]
    best_v, best_x = float(x[order[0]]), grid.nodes[order[0]].copy()
    if not refine:
        return best_v, best_x
    bounds = list(zip(channel.lower, channel.upper))

    def neg_f(pt):
        rho = channel.state_map(np.asarray(pt, dtype=float)[None])[0]
        return -(float(np.real(np.trace(rho @ lam))) - von_neumann_entropy(rho))

    for j in order:
        res = minimize(neg_f, grid.nodes[j], method="L-BFGS-B", bounds=bounds)
        if np.isfinite(res.fun) and -res.fun > best_v:
            best_v, best_x = float(-res.fun), np.asarray(res.x)
    return best_v, best_x


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

def estimate_lipschitz(grid: QuadratureGrid, inflate: float = 2.0) -> float:
    """Heuristic trace-norm Lipschitz constant from neighbouring grid nodes.

    Maximum of ``||rho_x - rho_y||_tr / ||x - y||_1`` over grid edges, times
    ``inflate``.
    """
    shaped = grid.states.reshape(grid.resolution + grid.states.shape[1:])
    best = 0.0
    for ax, pts in enumerate(grid.axes):
        if len(pts) < 2:
            continue
        diff = np.diff(shaped, axis=ax).reshape(-1, grid.dim, grid.dim)
        h = np.diff(pts)
        hshape = [1] * len(grid.resolution)
        hshape[ax] = len(h)
        hh = np.broadcast_to(h.reshape(hshape), tuple(r - (i == ax) for i, r in enumerate(grid.resolution))).ravel()
        tn = np.abs(np.linalg.eigvalsh(diff)).sum(axis=1)
        best = max(best, float(np.max(tn / hh)))
    return inflate * best


def estimate_cost_lipschitz(grid: QuadratureGrid, inflate: float = 2.0) -> float:
    shaped = grid.costs.reshape(grid.resolution)
    best = 0.0
    for ax, pts in enumerate(grid.axes):
        if len(pts) < 2:
            continue
        h = np.diff(pts)
        hshape = [1] * len(grid.resolution)
        hshape[ax] = len(h)
        best = max(best, float(np.max(np.abs(np.diff(shaped, axis=ax)) / h.reshape(hshape))))
    return inflate * best


def entropic_lipschitz(lipschitz: float, dim: int, gamma: float) -> float:
    """Lipschitz constant of ``x -> Tr[rho_x lam] - H(rho_x)`` uniformly over the dual ball.

    ``L (M log2(max(1/gamma, e)) + sqrt(M) log2(max(1/(gamma e), e)))``.
    """
    return lipschitz * (
        dim * max(math.log2(1.0 / gamma), math.log2(math.e))
        + math.sqrt(dim) * max(math.log2(1.0 / (gamma * math.e)), math.log2(math.e))
    )


@dataclass(frozen=True)
class SmoothingGap:
    """Bound ``iota(nu)`` on ``G - G_nu`` for a continuous input box.

    ``iota_formula`` is the two-branch expression
    ``nu (log2(T1/nu + T2) + 1)`` (when ``nu < T1/(1-T2)`` or ``T2 > 1``),
    else ``nu``. Because the true gap is nondecreasing in ``nu``, the formula
    may be replaced by its value at the branch point wherever that is
    smaller; :meth:`iota` does so and is therefore monotone.
    """

    T1: float
    T2: float
    L_f: float
    volume: float
    gamma: float
    constrained: bool = False
    notes: tuple[str, ...] = ()

    @property
    def crossover(self) -> float:
        return math.inf if self.T2 >= 1.0 else self.T1 / (1.0 - self.T2)

    def iota_formula(self, nu: float) -> float:
        if nu < self.crossover or self.T2 > 1.0:
            return nu * (math.log2(self.T1 / nu + self.T2) + 1.0)
        return nu

    def iota(self, nu: float) -> float:
        val = self.iota_formula(nu)
        if nu < self.crossover and self.T2 <= 1.0:
            val = min(val, self.crossover)
        return val

    def nu_for(self, target: float) -> float:
        """Largest ``nu`` with ``iota(nu) <= target`` (bisection on the monotone bound)."""
        lo, hi = 0.0, max(target, 1e-300)
        while self.iota(hi) <= target:
            lo, hi = hi, 2.0 * hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.iota(mid) <= target:
                lo = mid
            else:
                hi = mid
        return lo


def smoothing_gap(
    channel: ContinuousCqChannel,
    grid: QuadratureGrid | None = None,
    gamma: float | None = None,
    lipschitz: float | None = None,
) -> SmoothingGap:
    """Constants ``T1, T2`` of the smoothing gap bound for ``channel``.

    Without a cost constraint ``T1 = L_f * volume`` and ``T2 = 0``. With one,
    ``s_lo = min s - S`` and ``s_hi = max s - S`` (grid extremes) enter
    ``T1 = L_f v + 2 L_f L_s v^2 max(1/-s_lo, 1/s_hi)`` and
    ``T2 = L_s v max(mu_lo, mu_hi)``,
    ``mu_lo = 2/(-s_lo) log2(max(2 L_s v/(-s_lo), 1))`` (``mu_hi`` likewise).
    A budget outside ``(min s, max s)`` is treated as unconstrained.
    """
    notes = []
    if gamma is None:
        gamma = channel.gamma
    if gamma is None:
        if grid is None:
            raise ValueError("need a grid or an explicit gamma")
        gamma = min_spectrum_gamma(grid)
        notes.append("gamma taken from the grid minimum")
    if lipschitz is None:
        lipschitz = channel.lipschitz
    if lipschitz is None:
        if grid is None:
            raise ValueError("need a grid or an explicit Lipschitz constant")
        lipschitz = estimate_lipschitz(grid)
        notes.append("Lipschitz constant estimated from grid differences (x2)")
    v = channel.volume
    L_f = entropic_lipschitz(lipschitz, channel.dim, gamma)
    T1, T2, constrained = L_f * v, 0.0, False
    if channel.constrained:
        if grid is None or grid.costs is None:
            raise ValueError("a constrained channel needs a grid to bound its cost range")
        s_lo = float(grid.costs.min()) - channel.budget
        s_hi = float(grid.costs.max()) - channel.budget
        if s_lo >= 0 or s_hi <= 0:
            notes.append("budget outside the open cost range; unconstrained constants used")
        else:
            L_s = channel.cost_lipschitz
            if L_s is None:
                L_s = estimate_cost_lipschitz(grid)
                notes.append("cost Lipschitz constant estimated from grid differences (x2)")
            constrained = True
            T1 = L_f * v + 2.0 * L_f * L_s * v * v * max(1.0 / -s_lo, 1.0 / s_hi)
            mu_lo = 2.0 / -s_lo * math.log2(max(2.0 * L_s * v / -s_lo, 1.0))
            mu_hi = 2.0 / s_hi * math.log2(max(2.0 * L_s * v / s_hi, 1.0))
            T2 = L_s * v * max(mu_lo, mu_hi)
    return SmoothingGap(T1, T2, L_f, v, gamma, constrained, tuple(notes))


@dataclass(frozen=True)
class Schedule:
    nu: float
    iterations: int
    alpha: float


def smoothing_schedule(eps: float, gap: SmoothingGap, D1: float) -> Schedule:
    """Smoothing and iteration count guaranteeing an ``eps``-accurate bracket.

    ``alpha = 2 (T1 + T2 + 1)``, ``nu = (eps/alpha) / log2(alpha/eps)`` and
    ``k = ceil(sqrt(16 D1 alpha) sqrt(log2(1/eps) + log2(alpha) + 1/2) / eps)``.

    :raises ValueError: unless ``0 < eps < alpha/4``
    """
    alpha = 2.0 * (gap.T1 + gap.T2 + 1.0)
    if not 0.0 < eps < alpha / 4.0:
        raise ValueError(f"eps must lie in (0, alpha/4) with alpha = {alpha:.6g}")
    nu = (eps / alpha) / math.log2(alpha / eps)
    k = math.ceil(math.sqrt(16.0 * D1 * alpha) * math.sqrt(math.log2(1.0 / eps) + math.log2(alpha) + 0.5) / eps)
    return Schedule(nu, k, alpha)


@dataclass(frozen=True)
class InexactParameters:
    nu: float
    iterations: int
    delta_max: float


def inexact_parameters(eps: float, gap: SmoothingGap, D: float) -> InexactParameters:
    """Smoothing, iteration count and oracle accuracy for the projected gradient method.

    Splits ``eps`` into three equal parts for optimization error, smoothing
    gap and oracle error. Unconstrained channels use the closed forms with
    ``beta = 1 + log2(e)/e`` and ``alpha = log2(T1) + 1``:
    ``nu = eps / (3 beta (alpha + log2(3 beta/eps)))``,
    ``k = ceil(3 D^2 (2 eps + 3 beta (alpha + log2(3 beta/eps))) / (2 eps^2))``,
    ``delta <= eps/(6 D)``. With an active constraint ``nu`` solves
    ``iota(nu) = eps/3`` numerically and ``k`` makes the optimization term
    at most ``eps/3``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if gap.T2 == 0.0 and gap.T1 > 0:
        beta = 1.0 + math.log2(math.e) / math.e
        alpha = math.log2(gap.T1) + 1.0
        c = 3.0 * beta * (alpha + math.log2(3.0 * beta / eps))
        nu = eps / c
        k = math.ceil(3.0 * D * D * (2.0 * eps + c) / (2.0 * eps * eps))
    else:
        nu = gap.nu_for(eps / 3.0)
        k = math.ceil(3.0 * (2.0 + 1.0 / nu) * D * D / (2.0 * eps))
    return InexactParameters(nu, k, eps / (6.0 * D))


def inexact_error_bound(k: int, nu: float, D: float, iota: float, delta: float) -> float:
    """Error bound ``(2 + 1/nu) D^2 / (2k) + iota + 2 delta D`` after ``k`` steps."""
    if k <= 0:
        return math.inf
    return (2.0 + 1.0 / nu) * D * D / (2.0 * k) + iota + 2.0 * delta * D


# ---------------------------------------------------------------------------
# gradient oracles
# ---------------------------------------------------------------------------

@dataclass
class OracleEstimate:
    """Gradient and value estimates of ``G_nu`` with their accuracy claims."""

    gradient: np.ndarray
    value: float
    delta: float
    eta: float = 0.0
    details: dict = field(default_factory=dict)


class GradientOracle(Protocol):
    deterministic: bool

    def evaluate(self, lam: np.ndarray, nu: float) -> OracleEstimate: ...


class QuadratureOracle:
    """Trapezoid-rule gradient of ``G_nu``.

    ``delta`` is estimated by comparing with a grid of half the resolution
    (Richardson: error of the fine rule ~ difference / 3). The running
    maximum over calls is exposed as :attr:`delta`.
    """

    deterministic = True

    def __init__(self, channel: ContinuousCqChannel, resolution=DEFAULT_RESOLUTION, threads: int = 1,
                 estimate_error: bool = True, grid: QuadratureGrid | None = None):
        self.channel = channel
        self.grid = grid if grid is not None else build_grid(channel, resolution, threads=threads)
        self.coarse = None
        if estimate_error:
            half = tuple(max(1, (r + 1) // 2) for r in self.grid.resolution)
            self.coarse = build_grid(channel, half, self.grid.rule, threads=threads)
        self.delta = 0.0
        self.eta = 0.0

    def evaluate(self, lam, nu: float) -> OracleEstimate:
        value, grad, q = _smoothed_masses(lam, nu, self.grid, self.channel, self.channel.constrained)
        delta = 0.0
        if self.coarse is not None:
            _, g2, _ = _smoothed_masses(lam, nu, self.coarse, self.channel, self.channel.constrained)
            delta = operator_norm(grad - g2) / 3.0
            self.delta = max(self.delta, delta)
        return OracleEstimate(grad, value, delta, 0.0, {"masses": q})


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def _gamma_for(channel: ContinuousCqChannel, grid: QuadratureGrid) -> float:
    if channel.gamma is not None:
        if channel.gamma <= REGULARITY_FLOOR:
            raise RegularityViolation(channel.gamma, REGULARITY_FLOOR)
        return channel.gamma
    return min_spectrum_gamma(grid)


def grid_prox_d2(grid: QuadratureGrid) -> float:
    """``log2(volume / min weight)``, the largest relative entropy to the grid prior."""
    return float(math.log2(grid.volume / grid.weights.min()))


def _check_feasible(channel: ContinuousCqChannel, grid: QuadratureGrid):
    if channel.constrained and grid.costs.min() > channel.budget:
        raise InfeasibleConstraint(f"budget {channel.budget:g} is below every grid cost")


def _holevo_lb(masses, grid):
    return grid_holevo_information(masses, grid)


def solve_continuous(
    channel: ContinuousCqChannel,
    grid: QuadratureGrid,
    eps: float | None = None,
    iterations: int | None = None,
    nu: float | None = None,
    stride: int = 1,
    refine: bool = True,
) -> SolverReport:
    """Accelerated scheme on the quadrature-discretized dual.

    With ``eps`` the smoothing and iteration count follow
    :func:`smoothing_schedule`. With ``iterations`` the smoothing follows the
    finite-alphabet schedule with ``D2 = log2(volume / min weight)``, the
    exact smoothing gap of the grid problem.

    The lower bound is the Holevo information of the averaged node masses
    (a genuine input ensemble). The upper bound is ``F + sup_x f`` with the
    supremum over the box refined by local search from the best nodes (grid
    maximum in the trace rows). ``details['upper_bound_certificate']`` holds
    ``F + G_nu + iota(nu)``, which needs no supremum.
    """
    if (eps is None) == (iterations is None):
        raise ValueError("give exactly one of eps and iterations")
    _check_feasible(channel, grid)
    gamma = _gamma_for(channel, grid)
    radius = dual_radius(channel.dim, gamma)
    D1 = 0.5 * radius * radius
    D2 = grid_prox_d2(grid)
    gap = smoothing_gap(channel, grid, gamma=gamma)
    if eps is not None:
        sched = smoothing_schedule(eps, gap, D1)
        k = sched.iterations
        nu_run = nu if nu is not None else sched.nu
        schedule_name = "guaranteed"
    else:
        k = iterations
        nu_run = nu if nu is not None else schedule(k, D1, D2)
        schedule_name = "grid"

    def run(constrained: bool):
        def smoothed(lam, nu_):
            return _smoothed_masses(lam, nu_, grid, channel, constrained)

        def exact_bound(lam):
            return exact_max(_grid_objective(lam, grid), grid.costs, channel.budget)[0]

        return accelerated_dual(
            smoothed, exact_bound, lambda q: _holevo_lb(q, grid),
            channel.dim, radius, nu_run, k, stride,
        )

    constraint_active = False
    res = run(False)
    if channel.constrained and float(res.p_hat @ grid.costs) > channel.budget + 1e-12:
        constraint_active = True
        res = run(True)

    ub = res.upper_bound
    lam_hat = res.lam_hat
    sup_point = None
    if refine and not channel.constrained:
        g_sup, sup_point = supremum_f(lam_hat, grid, channel)
        ub = max(ub, dual_F(lam_hat)[0] + g_sup)
    gnu, _, _ = _smoothed_masses(lam_hat, nu_run, grid, channel, constraint_active)
    certificate = dual_F(lam_hat)[0] + gnu + gap.iota(nu_run)
    trace = list(res.trace)
    if trace and trace[-1].iteration == res.last_index:
        trace[-1] = TraceRecord(res.last_index, ub, res.lower_bound, nu_run)
    details = {
        "gamma": gamma, "radius": radius, "D1": D1, "D2": D2,
        "T1": gap.T1, "T2": gap.T2, "iota": gap.iota(nu_run), "L_f": gap.L_f,
        "schedule": schedule_name, "grid_resolution": list(grid.resolution),
        "grid_nodes": grid.n_nodes, "upper_bound_certificate": certificate,
        "constraint_active": constraint_active, "gap_notes": list(gap.notes),
        "supremum_point": None if sup_point is None else [float(v) for v in sup_point],
    }
    return SolverReport(
        upper_bound=ub,
        lower_bound=res.lower_bound,
        iterations=res.last_index,
        nu=nu_run,
        a_priori_error=eps,
        a_posteriori_error=ub - res.lower_bound,
        input_distribution=res.p_hat,
        trace=trace,
        converged=eps is None or ub - res.lower_bound <= eps,
        method="accelerated",
        details=details,
    )


def solve_inexact(
    channel: ContinuousCqChannel,
    oracle: GradientOracle,
    eps: float | None = None,
    grid: QuadratureGrid | None = None,
    iterations: int | None = None,
    nu: float | None = None,
    stride: int = 1,
    max_iterations: int = 10_000_000,
    refine: bool = True,
) -> SolverReport:
    """Projected gradient method driven by an inexact gradient oracle.

    ``lam_{m+1} = proj(lam_m - (grad F + oracle gradient) / (2 + 1/nu))``
    from ``lam_0 = 0``. Parameters follow :func:`inexact_parameters` unless
    ``iterations`` / ``nu`` are given; with ``iterations`` alone,
    ``nu = D / sqrt(2 k D2)`` with ``D2 = log2(volume / min weight)``.

    Bounds are evaluated on ``grid`` (default: the oracle's grid) at every
    ``stride``-th iterate and at the last:

    * lower bound: Holevo information of the smoothed node masses at the
      current iterate or of their running average, whichever is larger;
    * upper bound: ``F + max_grid f`` (refined over the box at the end);
    * certificate ``F + G_nu + iota(nu) + 2 delta D`` in the trace details.

    A warning is issued when the oracle's ``delta`` exceeds ``eps / (6 D)``.
    For stochastic oracles the bracket holds with probability at least
    ``1 - k eta``.
    """
    if grid is None:
        grid = getattr(oracle, "grid", None)
    if grid is None:
        grid = build_grid(channel, DEFAULT_RESOLUTION)
    _check_feasible(channel, grid)
    gamma = _gamma_for(channel, grid)
    D = dual_radius(channel.dim, gamma)
    gap = smoothing_gap(channel, grid, gamma=gamma)
    params = None
    if eps is not None:
        params = inexact_parameters(eps, gap, D)
    if iterations is None:
        if params is None:
            raise ValueError("give eps or iterations")
        iterations = params.iterations
    if nu is None:
        if params is None:
            # balances D^2/(2 k nu) against the grid smoothing gap nu * D2
            nu = D / math.sqrt(2.0 * max(iterations, 1) * grid_prox_d2(grid))
        else:
            nu = params.nu
    k = min(iterations, max_iterations)
    L = 2.0 + 1.0 / nu
    iota = gap.iota(nu)
    constrained = channel.constrained

    lam = np.zeros((channel.dim, channel.dim), dtype=complex)
    mass_sum = np.zeros(grid.n_nodes)
    trace: list[TraceRecord] = []
    cert_trace: list[float] = []
    delta = 0.0
    eta = 0.0
    best_lb, best_q = -math.inf, None
    ub = cert = math.nan
    warned = False
    for m in range(k + 1):
        gnu, _, q = _smoothed_masses(lam, nu, grid, channel, constrained)
        mass_sum += q
        if m % stride == 0 or m == k:
            fval = dual_F(lam)[0]
            ub = fval + exact_max(_grid_objective(lam, grid), grid.costs, channel.budget)[0]
            avg = mass_sum / (m + 1)
            for cand in (q, avg):
                val = _holevo_lb(cand, grid)
                if val > best_lb:
                    best_lb, best_q = val, cand.copy()
            cert = fval + gnu + iota + 2.0 * delta * D
            trace.append(TraceRecord(m, ub, best_lb, nu))
            cert_trace.append(cert)
        if m == k:
            break
        est = oracle.evaluate(lam, nu)
        delta = max(delta, est.delta)
        eta = max(eta, est.eta)
        if params is not None and delta > params.delta_max and not warned:
            warnings.warn(
                f"oracle accuracy {delta:.3e} exceeds eps/(6D) = {params.delta_max:.3e}; "
                "the certificate is widened by the measured delta",
                stacklevel=2,
            )
            warned = True
        lam = project_frobenius_ball(lam - (dual_F(lam)[1] + est.gradient) / L, D)

    sup_point = None
    if refine and not constrained:
        g_sup, sup_point = supremum_f(lam, grid, channel)
        ub = max(ub, dual_F(lam)[0] + g_sup)
        trace[-1] = TraceRecord(k, ub, best_lb, nu)
    converged = iterations <= max_iterations and (eps is None or ub - best_lb <= eps)
    details = {
        "gamma": gamma, "radius": D, "T1": gap.T1, "T2": gap.T2, "iota": iota, "L_f": gap.L_f,
        "oracle_delta": delta, "oracle_eta": eta, "oracle_deterministic": bool(oracle.deterministic),
        "upper_bound_certificate": cert, "certificate_trace": cert_trace,
        "inexact_error_bound": inexact_error_bound(k, nu, D, iota, delta),
        "confidence": max(0.0, 1.0 - k * eta),
        "delta_max": None if params is None else params.delta_max,
        "grid_resolution": list(grid.resolution), "gap_notes": list(gap.notes),
        "supremum_point": None if sup_point is None else [float(v) for v in sup_point],
    }
    return SolverReport(
        upper_bound=ub,
        lower_bound=best_lb,
        iterations=k,
        nu=nu,
        a_priori_error=eps,
        a_posteriori_error=ub - best_lb,
        input_distribution=best_q,
        trace=trace,
        converged=converged,
        method="projected",
        details=details,
    )
