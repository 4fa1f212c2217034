"""Microscopic system: positions and weights of N interacting agents.

Agent ``i`` moves with ``(1/M) sum_j m_j phi(x_j - x_i)`` and its weight grows
at rate ``m_i (1/M^q) sum m_{j1}..m_{jq} S(x_i, x_{j1}, .., x_{jq})``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._core import kernels as _fast
from .kernels import InteractionKernel, SourceKernel, direction
from .measures import ParticleState, fmt

NAIVE_LIMIT = 10**9


class WeightPositivityError(RuntimeError):
    """A weight reached zero or below; the exact flow never does this."""

    def __init__(self, t, index, value):
        super().__init__(
            f"weight of agent {index} became {value!r} at t={t:.6g}; reduce dt"
        )
        self.t, self.index, self.value = t, index, value


@dataclass
class MicroConfig:
    kernel: InteractionKernel
    source: SourceKernel
    N: int
    M: float
    dt: float
    T: float
    integrator: str = "rk4"

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not (self.dt > 0 and self.T > 0 and self.dt <= self.T):
            raise ValueError(f"need 0 < dt <= T, got dt={self.dt}, T={self.T}")
        if not self.M > 0:
            raise ValueError("M must be positive")
        if self.integrator not in ("rk4", "euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    meta: dict = field(default_factory=dict)

    @property
    def positions(self) -> np.ndarray:
        return np.stack([s.x for s in self.states])

    @property
    def weights(self) -> np.ndarray:
        return np.stack([s.m for s in self.states])

    @property
    def final(self) -> ParticleState:
        return self.states[-1]

    def summary(self, source_bound: float) -> dict:
        """Conservation diagnostics; the growth ratio compares ``m_i(t)`` with
        ``m_i(0) exp(source_bound t)``."""
        w = self.weights
        M = self.states[0].M
        with np.errstate(over="ignore"):
            growth = np.exp(source_bound * self.times)[:, None]
        ratio = w / (w[0][None, :] * growth)
        return {
            "N": int(w.shape[1]),
            "M": float(M),
            "dt": float(self.meta.get("dt", float("nan"))),
            "T": float(self.times[-1]),
            "mass_drift_max": float(np.max(np.abs(w.sum(axis=1) - M))),
            "min_weight": float(w.min()),
            "max_weight_ratio_vs_bound": float(np.max(ratio)),
        }

    def to_csv(self, path) -> None:
        d = self.states[0].dim
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "i"] + [f"x_{k}" for k in range(d)] + ["m"])
            for t, s in zip(self.times, self.states):
                for i in range(s.N):
                    wr.writerow([fmt(t), i] + [fmt(v) for v in s.x[i]] + [fmt(s.m[i])])


def _velocity(x, m, M, kernel):
    if kernel.fast_sin2 is not None and x.shape[1] == 1:
        return _fast.sin2_self_velocity(np.ascontiguousarray(x[:, 0]), m / M,
                                        kernel.fast_sin2).reshape(-1, 1)
    pair = kernel.pair(x[:, None, :], x[None, :, :])
    return np.einsum("ijk,j->ik", pair, m) / M


def position_rhs(state: ParticleState, kernel: InteractionKernel) -> np.ndarray:
    """Row ``i`` is ``(1/M) sum_j m_j phi(x_j - x_i)``."""
    return _velocity(state.x, state.m, state.M, kernel)


def growth_naive(x, w, source: SourceKernel) -> np.ndarray:
    """Rates ``Lambda_i = sum w_{j1}..w_{jq} S(x_i, x_{j1}, .., x_{jq})`` by the full sum.

    ``w`` may be signed; cost is ``n^(q+1)`` kernel evaluations.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    w = np.asarray(w, dtype=float)
    n, d = x.shape
    q = source.arity
    if float(n) ** (q + 1) > NAIVE_LIMIT:
        raise ValueError(f"naive sum needs n^{q + 1} = {n ** (q + 1)} kernel evaluations")
    shape = lambda k: (1,) * k + (n,) + (1,) * (q - 1 - k)
    others = [x.reshape(shape(k) + (d,)) for k in range(q)]
    wprod = np.ones((n,) * q)
    for k in range(q):
        wprod = wprod * w.reshape(shape(k))
    out = np.empty(n)
    for i in range(n):
        out[i] = np.sum(wprod * source(x[i].reshape((1,) * q + (d,)), *others))
    return out


def weight_rhs_naive(state: ParticleState, source: SourceKernel) -> np.ndarray:
    """Full ``(q+1)``-fold sum; cost ``N^(q+1)`` kernel evaluations."""
    return state.m * growth_naive(state.x, state.m / state.M, source)


def growth_m1(x, w, velocity, beta) -> np.ndarray:
    """M1 rates ``(beta/2) sum_j w_j <A_i + A_j, dir(x_i - x_j)>`` given ``A = velocity``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    velocity = np.asarray(velocity, dtype=float).reshape(x.shape)
    w = np.asarray(w, dtype=float)
    if x.shape[1] == 1:
        return _fast.m1_growth(np.ascontiguousarray(x[:, 0]), w,
                               np.ascontiguousarray(velocity[:, 0]), beta)
    pair = (velocity[:, None, :] + velocity[None, :, :]) * direction(x[:, None, :] - x[None, :, :])
    return 0.5 * beta * np.einsum("ijk,j->i", pair, w)


def weight_rhs_m1_factored(state: ParticleState, source: SourceKernel) -> np.ndarray:
    """Weight rates for the M1 kernel in ``O(N^2)``.

    The inner sum over the third agent collapses to the velocity field
    ``A_i = (1/M) sum_k m_k phi(x_k - x_i)``, leaving
    ``(beta/M) m_i sum_j m_j <(A_i + A_j)/2, dir(x_i - x_j)>``.
    """
    if source.name != "m1":
        raise ValueError(f"factored path needs the m1 source, got {source.name!r}")
    phi = source.params["phi"]
    A = _velocity(state.x, state.m, state.M, phi)
    return state.m * growth_m1(state.x, state.m / state.M, A, source.params["beta"])


def make_rhs(kernel: InteractionKernel, source: SourceKernel) -> Callable:
    """Right-hand side ``(x, m, M) -> (xdot, mdot)`` choosing the fastest exact path."""
    m1 = source.name == "m1"
    shared = m1 and source.params["phi"] is kernel

    def rhs(x, m, M):
        v = _velocity(x, m, M, kernel)
        if m1:
            A = v if shared else _velocity(x, m, M, source.params["phi"])
            mdot = m * growth_m1(x, m / M, A, source.params["beta"])
        else:
            mdot = m * growth_naive(x, m / M, source)
        return v, mdot

    return rhs


def integrate_micro(config: MicroConfig, initial: ParticleState, sample_stride: int = 1,
                    stop_tol: float | None = None, sample_times=None) -> Trajectory:
    """Fixed-step integration of the coupled system up to ``config.T``.

    ``sample_stride`` keeps every n-th step; ``sample_times`` (snapped to the
    step grid) overrides it. With ``stop_tol`` the run ends early once the
    largest position speed drops below it. Raises
    :class:`WeightPositivityError` when a weight stops being positive.
    """
    if np.any(initial.m <= 0):
        raise ValueError("initial weights must be positive")
    if abs(initial.m.sum() - initial.M) > 1e-12 * max(1.0, initial.M):
        raise ValueError(f"initial weights sum to {initial.m.sum()!r}, not M={initial.M!r}")
    if initial.N != config.N:
        raise ValueError(f"config says N={config.N} but state has {initial.N} agents")
    nsteps = max(1, math.ceil(config.T / config.dt - 1e-9))
    h = config.T / nsteps
    rhs = make_rhs(config.kernel, config.source)
    if sample_times is not None:
        keep = {int(round(t / h)) for t in sample_times}
    else:
        keep = set(range(0, nsteps + 1, max(1, sample_stride)))
    keep.add(0)
    keep.add(nsteps)

    x = np.array(initial.x)
    m = np.array(initial.m)
    M = initial.M
    t0 = initial.t
    times, states = [t0], [initial]
    stopped = None
    for n in range(1, nsteps + 1):
        if config.integrator == "rk4":
            k1x, k1m = rhs(x, m, M)
            k2x, k2m = rhs(x + 0.5 * h * k1x, m + 0.5 * h * k1m, M)
            k3x, k3m = rhs(x + 0.5 * h * k2x, m + 0.5 * h * k2m, M)
            k4x, k4m = rhs(x + h * k3x, m + h * k3m, M)
            dx = (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            dm = (h / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
        else:
            k1x, k1m = rhs(x, m, M)
            dx, dm = h * k1x, h * k1m
        x = x + dx
        m = m + dm
        t = t0 + n * h
        if not np.all(m > 0):
            i = int(np.flatnonzero(~(m > 0))[0])
            raise WeightPositivityError(t, i, float(m[i]))
        done = stop_tol is not None and float(np.max(np.abs(dx))) / h < stop_tol
        if n in keep or done:
            times.append(t)
            states.append(ParticleState(x, m, M, t))
        if done:
            stopped = t
            break
    meta = {"dt": h, "steps": nsteps, "integrator": config.integrator, "early_stop": stopped}
    return Trajectory(np.array(times), states, meta)


def initial_state_from_density(N: int, density: Callable, mass_convention: str = "N",
                        quad_points: int = 64) -> ParticleState:
    """Agents at ``x_i = i/N`` carrying the mass of ``density`` on ``((i-1)/N, i/N)``.

    Each sub-interval is integrated with a ``quad_points`` midpoint rule; the
    weights are then rescaled to sum to ``M`` (``M = N`` or ``M = 1``).
    """
    if mass_convention not in ("N", "unit"):
        raise ValueError(f"mass_convention must be 'N' or 'unit', got {mass_convention!r}")
    h = 1.0 / (N * quad_points)
    pts = h * (np.arange(N * quad_points) + 0.5)
    m = density(pts).reshape(N, quad_points).sum(axis=1) * h
    if np.any(m <= 0):
        raise ValueError("density vanishes on a sub-interval; weights would not be positive")
    M = float(N) if mass_convention == "N" else 1.0
    m = m * (M / m.sum())
    m[-1] = M - m[:-1].sum()
    return ParticleState(np.arange(1, N + 1, dtype=float) / N, m, M)


@dataclass
class IndistinguishabilityReport:
    position_gap: float
    group_sum_gap: float
    outside_weight_gap: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.position_gap, self.group_sum_gap, self.outside_weight_gap) <= self.tol


def indistinguishability_check(config: MicroConfig, x0, m0, p0, group,
                               tol: float = 1e-8) -> IndistinguishabilityReport:
    """Run ``(x0, m0)`` and ``(x0, p0)`` and compare them agent by agent.

    ``group`` lists co-located agents whose weights may differ between the
    two runs provided their sums agree; every other weight must coincide.
    """
    x0 = np.asarray(x0, dtype=float).reshape(config.N, -1)
    m0 = np.asarray(m0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    J = np.asarray(sorted(group), dtype=int)
    out = np.setdiff1d(np.arange(config.N), J)
    if J.size and np.ptp(x0[J], axis=0).max() != 0:
        raise ValueError("agents in the group must share one position")
    if not np.allclose(m0[out], p0[out], rtol=0, atol=0):
        raise ValueError("weights outside the group must be identical")
    if abs(m0[J].sum() - p0[J].sum()) > 1e-14 * max(1.0, m0.sum()):
        raise ValueError("group weight sums differ")
    M = float(m0.sum())
    a = integrate_micro(config, ParticleState(x0, m0, M)).final
    b = integrate_micro(config, ParticleState(x0, p0, M)).final
    return IndistinguishabilityReport(
        position_gap=float(np.max(np.abs(a.x - b.x))),
        group_sum_gap=float(abs(a.m[J].sum() - b.m[J].sum())) if J.size else 0.0,
        outside_weight_gap=float(np.max(np.abs(a.m[out] - b.m[out]), initial=0.0)),
        tol=tol,
    )


def permutation_check(config: MicroConfig, initial: ParticleState, perm,
                      tol: float = 1e-8) -> float:
    """Largest gap between the permuted run and the permuted original run."""
    perm = np.asarray(perm, dtype=int)
    a = integrate_micro(config, initial).final
    b = integrate_micro(config, ParticleState(initial.x[perm], initial.m[perm], initial.M)).final
    return float(max(np.max(np.abs(a.x[perm] - b.x)), np.max(np.abs(a.m[perm] - b.m))))
