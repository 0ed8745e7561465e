"""Global minimization of the uncertainty bound.

The search runs over probe angles, measurement angles and (unless pinned)
the evolution time at once, with a self-adaptive (mu, lambda) evolution
strategy using stochastic ranking and differential variation. All
constraints here are boxes, so the ranking penalty is identically zero and
stochastic ranking reduces to an ordinary sort; the general form is kept in
:func:`stochastic_rank`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import Propagator
from .estimation import P_FLOOR, ExperimentConfig, batch_qfi, local_qfi, reduce_pair
from .model import (PROBE_DIMS, TWO_PI, HamiltonianSpec, MeasurementFamily,
                    MeasurementParams, ProbeFamily, ProbeParams, probe_vectors,
                    qubit_state, two_qubit_measurement_vectors)

SENTINEL = 1e6
FI_FLOOR = 1e-14
T_MIN = 0.01
T_MAX = 2.0

MEASURED = "measured"
QFI = "qfi"


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizationTask:
    spec: HamiltonianSpec
    probe_family: ProbeFamily
    config: ExperimentConfig
    objective: str = MEASURED
    budget: int = 40_000
    restarts: int = 5
    rng_seed: int = 42
    alpha: float | None = None
    fixed_time: float | None = None
    population: int = 40
    parents: int = 7

    def __post_init__(self):
        object.__setattr__(self, "probe_family", ProbeFamily(self.probe_family))
        if self.objective not in (MEASURED, QFI):
            raise ValueError(f"objective must be {MEASURED!r} or {QFI!r}")
        if self.budget < self.population * 10:
            raise ValueError(f"budget {self.budget} below the minimum "
                             f"{self.population * 10} (population x 10)")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if not 0 < self.parents < self.population:
            raise ValueError("need 0 < parents < population")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.probe_family is ProbeFamily.PARTIAL and self.alpha is None:
            raise ValueError("Partial probe family needs a pinned alpha")
        if self.fixed_time is not None and not 0 < self.fixed_time <= T_MAX:
            raise ValueError("fixed time must lie in (0, 2]")


@dataclass
class Optimum:
    best_bound: float
    best_time: float
    best_probe: ProbeParams
    best_meas: MeasurementParams | None
    trace: list
    evaluations_used: int
    best_x: np.ndarray = field(repr=False, default=None)


class BatchObjective:
    """Vectorized bound over a population; rows of ``x`` are search points.

    Layout: probe angles, then measurement angles (measured objective only),
    then the time unless it is pinned.
    """

    def __init__(self, task: OptimizationTask):
        self.task = task
        self.config = task.config
        self.prop = Propagator.from_spec(task.spec, task.config.gamma)
        self.product = task.probe_family is ProbeFamily.PRODUCT
        self.n_probe = PROBE_DIMS[task.probe_family]
        if task.objective == QFI:
            self.n_meas = 0
        else:
            self.n_meas = 4 if self.product else 15
        lower = [0.0] * (self.n_probe + self.n_meas)
        upper = [TWO_PI] * (self.n_probe + self.n_meas)
        if self.n_meas == 15:
            upper[-3:] = [math.pi] * 3
        if task.fixed_time is None:
            lower.append(T_MIN)
            upper.append(T_MAX)
        self.lower = np.array(lower)
        self.upper = np.array(upper)
        self.dim = len(lower)

    def times(self, x: np.ndarray) -> np.ndarray:
        if self.task.fixed_time is None:
            return x[..., -1]
        return np.full(x.shape[:-1], float(self.task.fixed_time))

    def fisher(self, x: np.ndarray):
        """Per-cluster FI for each row, plus a flag for floored probabilities."""
        x = np.atleast_2d(x)
        psi = probe_vectors(self.task.probe_family, x[:, :self.n_probe], self.task.alpha)
        rho0 = psi[:, :, None] * psi[:, None, :].conj()
        t = self.times(x)
        rho, drho = self.prop.evolve(rho0, t)
        flagged = np.zeros(len(x), dtype=bool)
        if self.task.objective == QFI:
            # product probes are read out qubit by qubit, so their quantum limit
            # is the sum of the single-qubit QFIs
            return (local_qfi(rho, drho) if self.product else batch_qfi(rho, drho)), flagged
        m = x[:, self.n_probe:self.n_probe + self.n_meas]
        if self.product:
            (r1, r2), (d1, d2) = reduce_pair(rho), reduce_pair(drho)
            reduced = [(r1, d1, qubit_state(m[:, 0], m[:, 1])),
                       (r2, d2, qubit_state(m[:, 2], m[:, 3]))]
        else:
            reduced = [(rho, drho, two_qubit_measurement_vectors(m))]
        fi = np.zeros(len(x))
        for red, dred, phi in reduced:
            p = np.real(np.einsum("bi,bij,bj->b", phi.conj(), red, phi))
            dp = np.real(np.einsum("bi,bij,bj->b", phi.conj(), dred, phi))
            p = np.clip(p, 0.0, 1.0)
            var = p * (1.0 - p)
            flagged |= (var < P_FLOOR) & (dp != 0)
            fi += dp * dp / np.maximum(var, P_FLOOR)
        return fi, flagged

    def evaluate(self, x: np.ndarray):
        fi, flagged = self.fisher(x)
        t = self.times(np.atleast_2d(x))
        nu = self.config.nu(t)
        with np.errstate(divide="ignore"):
            bound = np.where(fi > FI_FLOOR, 1.0 / np.sqrt(nu * np.maximum(fi, FI_FLOOR)), SENTINEL)
        return bound, flagged

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.evaluate(x)[0]

    def decode(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        probe = ProbeParams(self.task.probe_family, tuple(x[:self.n_probe]),
                            alpha=self.task.alpha if self.task.alpha is not None
                            else 1.0 / math.sqrt(2.0))
        meas = None
        if self.n_meas:
            fam = MeasurementFamily.SINGLE_QUBIT if self.product else MeasurementFamily.TWO_QUBIT
            meas = MeasurementParams(fam, tuple(x[self.n_probe:self.n_probe + self.n_meas]))
        return probe, meas, float(self.times(x))


def stochastic_rank(f: np.ndarray, penalty: np.ndarray, rng: np.random.Generator,
                    pf: float = 0.45) -> np.ndarray:
    """Stochastic bubble-sort ranking of Runarsson and Yao.

    Pairs are compared by objective when both are feasible or with
    probability ``pf``, otherwise by penalty. With no penalties this is a
    stable argsort.
    """
    if not np.any(penalty):
        return np.argsort(f, kind="stable")
    idx = np.arange(len(f))
    for _ in range(len(f)):
        swapped = False
        for j in range(len(f) - 1):
            a, b = idx[j], idx[j + 1]
            if (penalty[a] == 0 and penalty[b] == 0) or rng.random() < pf:
                swap = f[a] > f[b]
            else:
                swap = penalty[a] > penalty[b]
            if swap:
                idx[j], idx[j + 1] = b, a
                swapped = True
        if not swapped:
            break
    return idx


def evolution_strategy(func, lower, upper, rng: np.random.Generator, budget: int,
                       population: int = 40, parents: int = 7, gamma: float = 0.85,
                       smoothing: float = 0.2, resample: int = 10, periodic=None,
                       sigma0: float | None = None, sigma_cap: float | None = 0.1):
    """Minimize ``func`` (batch callable returning ``(values, flagged)``) in a box.

    Coordinates marked in ``periodic`` are wrapped back into their box;
    the others are resampled (then reset to the parent value) when a step
    leaves the box. Returns ``(best_x, best_f, trace, evaluations)``.
    Flagged evaluations take part in ranking but are never reported as the
    best point.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = len(lower)
    span = upper - lower
    periodic = np.zeros(n, dtype=bool) if periodic is None else np.asarray(periodic, bool)

    def wrap(v):
        return np.where(periodic, lower + np.mod(v - lower, span), v)
    tau = 1.0 / math.sqrt(2.0 * math.sqrt(n))
    tau_global = 1.0 / math.sqrt(2.0 * n)

    x = lower + rng.random((population, n)) * span
    # step sizes are capped at a fraction of the box width: uncapped, they stay
    # near the box scale on these oscillatory landscapes and selection stalls
    smax = np.inf if sigma_cap is None else span * sigma_cap
    s0 = np.minimum(span / math.sqrt(n) if sigma0 is None else span * sigma0, smax)
    sigma = np.tile(s0, (population, 1))
    f, flagged = func(x)
    evals = population
    best_x, best_f = None, math.inf
    trace = []

    def record(x, f, flagged):
        nonlocal best_x, best_f
        ok = np.where(~flagged)[0]
        if len(ok):
            k = ok[np.argmin(f[ok])]
            if f[k] < best_f:
                best_f, best_x = float(f[k]), x[k].copy()
        trace.append(best_f)

    record(x, f, flagged)
    while evals + population <= budget:
        order = stochastic_rank(f, np.zeros_like(f), rng)[:parents]
        xp, sp = x[order], sigma[order]
        src = np.arange(population) % parents
        new_sigma = sp[src].copy()
        new_x = np.empty_like(x)

        # differential variation toward the best parent for the first mu-1 offspring
        k = np.arange(parents - 1)
        trial = wrap(xp[k] + gamma * (xp[0] - xp[k + 1]))
        ok = np.all((trial >= lower) & (trial <= upper), axis=1)
        mutate = np.ones(population, dtype=bool)
        new_x[k[ok]] = trial[ok]
        mutate[k[ok]] = False

        m = np.where(mutate)[0]
        base_s = sp[src[m]]
        s = base_s * np.exp(tau_global * rng.standard_normal((len(m), 1))
                            + tau * rng.standard_normal((len(m), n)))
        base_x = xp[src[m]]
        cand = wrap(base_x + s * rng.standard_normal((len(m), n)))
        for _ in range(resample):
            bad = (cand < lower) | (cand > upper)
            if not bad.any():
                break
            redo = wrap(base_x + s * rng.standard_normal((len(m), n)))
            cand = np.where(bad, redo, cand)
        bad = (cand < lower) | (cand > upper)
        cand = np.where(bad, base_x, cand)
        new_x[m] = cand
        new_sigma[m] = np.minimum(base_s + smoothing * (s - base_s), smax)

        x, sigma = new_x, new_sigma
        f, flagged = func(x)
        evals += population
        record(x, f, flagged)
    return best_x, best_f, trace, evals


def minimize(task: OptimizationTask) -> Optimum:
    """Best bound over probe, measurement and time, over all restarts."""
    obj = BatchObjective(task)
    seeds = np.random.SeedSequence(task.rng_seed).spawn(task.restarts)
    best = None
    trace = []
    used = 0
    for child in seeds:
        rng = np.random.default_rng(child)
        x, f, tr, n = evolution_strategy(obj.evaluate, obj.lower, obj.upper, rng, task.budget,
                                         task.population, task.parents)
        used += n
        trace.extend(tr)
        if x is not None and (best is None or f < best[1]):
            best = (x, f)
    if best is None or best[1] >= SENTINEL:
        raise OptimizationError("no finite objective value found within budget")
    x, f = best
    probe, meas, t = obj.decode(x)
    return Optimum(f, t, probe, meas, trace, used, x)


def _family_task(task: OptimizationTask, family, **kw) -> OptimizationTask:
    return replace(task, probe_family=ProbeFamily(family), **kw)


def scan_time(task: OptimizationTask, grid) -> list:
    """Optimal product and maximally entangled bounds at each pinned time."""
    grid = sorted(float(t) for t in grid)
    if not grid:
        raise ValueError("empty time grid")
    rows = []
    for t in grid:
        if not 0 < t <= T_MAX:
            raise ValueError(f"grid time {t} outside (0, 2]")
        prod = minimize(_family_task(task, ProbeFamily.PRODUCT, fixed_time=t, alpha=None))
        ent = minimize(_family_task(task, ProbeFamily.MAX_ENTANGLED, fixed_time=t, alpha=None))
        rows.append((t, prod.best_bound, ent.best_bound))
    return rows


def scan_alpha(task: OptimizationTask, alphas) -> list:
    """Minimum bound over probe, measurement and time per entanglement amplitude."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("empty alpha grid")
    rows = []
    for a in alphas:
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"alpha {a} outside [0, 1]")
        opt = minimize(_family_task(task, ProbeFamily.PARTIAL, alpha=a))
        rows.append((a, opt.best_bound))
    return rows
