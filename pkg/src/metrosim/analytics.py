"""Closed-form bounds for frequency estimation with the Ising-coupled
Hamiltonian H1, and the optimum-time solver for the noisy product case.

With k = (n/N)(T/T~) and times in units of T~:

* noiseless product:    1 / sqrt(k t F),  F = max(1, 2 cos^2(2Jt))
* noiseless entangled:  1 / (2 sqrt(k t))
* noisy product:        e^{gamma t} / (sqrt(2 k t) |cos(2Jt)|)
* noisy entangled:      e^{2 gamma t} / (2 sqrt(k t))

The noisy product form is the |+>|+> probe; its stationary points satisfy
2J tan(2Jt) = 1/(2t) - gamma, solved branch by branch in :func:`solve_topt`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

T_WINDOW = 2.0
BISECT_TOL = 1e-12
POLE_OFFSET = 1e-9
RESIDUAL_TOL = 1e-12


class Scenario(str, enum.Enum):
    NOISELESS_PRODUCT = "noiseless_product"
    NOISELESS_ENTANGLED = "noiseless_entangled"
    NOISY_PRODUCT = "noisy_product"
    NOISY_ENTANGLED = "noisy_entangled"


class Divergence(ArithmeticError):
    """The closed form is infinite at this time (cos(2Jt) = 0)."""


@dataclass(frozen=True)
class ClosedFormCase:
    scenario: Scenario
    n: int = 2
    N: int = 2
    T_over_Ttilde: float = 2.0
    gamma: float = 0.5
    coupling_j: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if self.n < 1 or self.N < 1 or self.T_over_Ttilde <= 0:
            raise ValueError("n, N and T/T~ must be positive")
        if self.gamma < 0 or self.coupling_j < 0:
            raise ValueError("gamma and J must be non-negative")

    @property
    def k(self) -> float:
        return (self.n / self.N) * self.T_over_Ttilde


def closed_form_bound(case: ClosedFormCase, t: float) -> float:
    if t <= 0:
        raise ValueError("t must be positive")
    k, g, j = case.k, case.gamma, case.coupling_j
    s = case.scenario
    if s is Scenario.NOISELESS_PRODUCT:
        f = max(1.0, 2.0 * math.cos(2 * j * t) ** 2)
        return 1.0 / math.sqrt(k * t * f)
    if s is Scenario.NOISELESS_ENTANGLED:
        return 1.0 / (2.0 * math.sqrt(k * t))
    if s is Scenario.NOISY_ENTANGLED:
        return math.exp(2 * g * t) / (2.0 * math.sqrt(k * t))
    c = abs(math.cos(2 * j * t))
    if c < 1e-12:
        raise Divergence(f"cos(2Jt) = 0 at t = {t}")
    return math.exp(g * t) / (math.sqrt(2.0 * k * t) * c)


def topt_residual(t: float, coupling_j: float, gamma: float) -> float:
    """2J tan(2Jt) - 1/(2t) + gamma; zero at stationary points of the noisy product bound."""
    return 2 * coupling_j * math.tan(2 * coupling_j * t) - 1.0 / (2 * t) + gamma


def _bisect(fn, a: float, b: float) -> float:
    # stop on a tight bracket only once the residual is small too: near t -> 0
    # the residual is steep and a 1e-12 bracket alone leaves it around 1e-10
    fa = fn(a)
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = fn(mid)
        if fm == 0 or mid in (a, b) or ((b - a) < BISECT_TOL and abs(fm) < RESIDUAL_TOL):
            return mid
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


@dataclass(frozen=True)
class TOpt:
    t_opt: float
    bound_min: float
    roots: tuple


def solve_topt(coupling_j: float, gamma: float, n: int = 2, N: int = 2,
               T_over_Ttilde: float = 2.0, t_max: float = T_WINDOW) -> TOpt:
    """Time in (0, t_max] minimizing the noisy product bound.

    The residual is increasing between consecutive poles of tan(2Jt), so
    each branch holds at most one root; each is bracketed away from the
    poles and bisected. The edge t = t_max is always a candidate.
    """
    if coupling_j < 0 or gamma < 0:
        raise ValueError("J and gamma must be non-negative")
    case = ClosedFormCase(Scenario.NOISY_PRODUCT, n, N, T_over_Ttilde, gamma, coupling_j)
    fn = lambda t: topt_residual(t, coupling_j, gamma)

    roots = []
    if coupling_j == 0:
        if gamma > 0 and 1 / (2 * gamma) <= t_max:
            roots.append(1 / (2 * gamma))
    else:
        period = math.pi / (2 * coupling_j)
        edges = [0.0]
        pole = period / 2
        while pole < t_max:
            edges.append(pole)
            pole += period
        edges.append(t_max)
        for k in range(len(edges) - 1):
            a = edges[k] + POLE_OFFSET
            is_pole = k + 1 < len(edges) - 1
            b = edges[k + 1] - POLE_OFFSET if is_pole else edges[k + 1]
            if a >= b:
                continue
            if k == 0:
                a = min(1e-12, b / 2)
            if fn(a) < 0 < fn(b) or fn(b) == 0:
                roots.append(_bisect(fn, a, b))

    best_t, best = t_max, math.inf
    for t in roots + [t_max]:
        try:
            v = closed_form_bound(case, t)
        except Divergence:
            continue
        if v < best:
            best_t, best = t, v
    return TOpt(best_t, best, tuple(roots))


def entangled_noisy_min(gamma: float, n: int = 2, N: int = 2, T_over_Ttilde: float = 2.0,
                        t_max: float = T_WINDOW):
    """Minimum over (0, t_max] of the noisy entangled bound, attained at 1/(4 gamma)."""
    t = t_max if gamma == 0 else min(t_max, 1.0 / (4.0 * gamma))
    case = ClosedFormCase(Scenario.NOISY_ENTANGLED, n, N, T_over_Ttilde, gamma, 0.0)
    return t, closed_form_bound(case, t)


def sweep_coupling(j_grid, gamma: float, n: int = 2, N: int = 2,
                   T_over_Ttilde: float = 2.0) -> list:
    """Rows (J, product minimum, entangled minimum); the entangled column has no J dependence."""
    j_grid = [float(j) for j in j_grid]
    if not j_grid:
        raise ValueError("empty coupling grid")
    _, ent = entangled_noisy_min(gamma, n, N, T_over_Ttilde)
    return [(j, solve_topt(j, gamma, n, N, T_over_Ttilde).bound_min, ent) for j in j_grid]
