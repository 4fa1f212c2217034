"""Operator-splitting solver for the transport equation with source.

One step of length ``dt`` first redistributes mass with the source,
``mu <- mu + dt h[mu]``, then pushes the result along the velocity field
``V[mu](x) = int phi(y - x) dmu(y)`` frozen at the start of the step. On a
grid, characteristics start at cell centres and arrivals are deposited with
cloud-in-cell weights. The variant ``stilde`` transports first and adds the
source at the old atom positions; it serves as a counterexample because it
preserves neither sign nor total variation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._core import kernels as _fast
from .kernels import InteractionKernel, SourceKernel
from .measures import AtomicMeasure, GridMeasure
from .micro import NAIVE_LIMIT, growth_m1, growth_naive


class SchemeError(RuntimeError):
    """Raised when a step would leave the grid or produce negative mass."""


def support_radius_bound(R0: float, T: float, lipschitz: float, phi0: float = 0.0) -> float:
    """Radius of a ball that contains the support up to time ``T``.

    ``(phi0/(2L) + R0) exp(2 L T) - phi0/(2L)``, or ``R0 + phi0 T`` when ``L = 0``.
    """
    phi0 = float(np.linalg.norm(phi0))
    if lipschitz == 0:
        return R0 + phi0 * T
    c = phi0 / (2.0 * lipschitz)
    with np.errstate(over="ignore"):
        return float((c + R0) * np.exp(2.0 * lipschitz * T) - c)


def source_bound(source: SourceKernel, left: float, right: float, dim: int = 1) -> float:
    """Bound on ``|S|`` over tuples in the interval ``[left, right]``.

    Dense sampling of the interval, capped by the analytic global bound of
    the M1 kernel (``|beta| sup|phi| pi/2``) when that is smaller.
    """
    center = 0.5 * (left + right)
    value = source.bound(0.5 * (right - left), dim=dim, center=[center] * dim)
    if source.name == "m1":
        phi = source.params["phi"]
        if phi.sup is not None:
            value = min(value, abs(source.params["beta"]) * phi.sup * math.pi / 2)
    return value


@dataclass
class SchemeConfig:
    """Parameters of a dyadic run with ``dt = T / 2**k``.

    ``source_bound`` defaults to :func:`source_bound` on the domain; the
    constructor rejects ``dt * source_bound > 1`` since positivity is then
    no longer guaranteed.
    """

    kernel: InteractionKernel
    source: SourceKernel
    k: int
    T: float
    left: float = 0.0
    right: float = 1.0
    cells: int = 400
    transport_substeps: int = 4
    deposit: str = "CIC"
    source_bound: float | None = None
    R0: float | None = None

    def __post_init__(self):
        if self.k < 0 or self.T < 0:
            raise ValueError("need k >= 0 and T >= 0")
        if not self.right > self.left:
            raise ValueError("empty domain")
        if self.cells < 1 or self.transport_substeps < 1:
            raise ValueError("cells and transport_substeps must be >= 1")
        if self.deposit != "CIC":
            raise ValueError(f"unknown deposit {self.deposit!r}")
        if self.source_bound is None:
            self.source_bound = source_bound(self.source, self.left, self.right)
        if self.dt * self.source_bound > 1.0:
            raise ValueError(
                f"dt * S_bar = {self.dt * self.source_bound:.4g} > 1; raise k to at least "
                f"{minimal_k(self.T, self.source_bound)}"
            )

    @property
    def dt(self) -> float:
        return self.T / 2**self.k

    @property
    def steps(self) -> int:
        return 2**self.k if self.T > 0 else 0

    def geometry(self) -> GridMeasure:
        return GridMeasure.zeros(self.left, self.right, self.cells)

    def support_bound(self) -> float:
        R0 = self.R0 if self.R0 is not None else max(abs(self.left), abs(self.right))
        return support_radius_bound(R0, self.T, self.kernel.lipschitz, self.kernel.phi0)


def minimal_k(T: float, S_bar: float, target: float = 1.0) -> int:
    """Smallest ``k`` with ``(T / 2**k) * S_bar <= target``."""
    if T * S_bar <= target:
        return 0
    return max(0, math.ceil(math.log2(T * S_bar / target) - 1e-12))


def _atoms(mu):
    if isinstance(mu, GridMeasure):
        return mu.centers.reshape(-1, 1), np.asarray(mu.mass)
    return mu.positions, mu.weights


def field_at(targets, positions, weights, kernel: InteractionKernel) -> np.ndarray:
    """``sum_j w_j phi(y_j - x)`` at each row ``x`` of ``targets``."""
    targets = np.asarray(targets, dtype=float)
    flat = targets.ndim == 1
    if flat:
        targets = targets.reshape(-1, 1)
    positions = np.asarray(positions, dtype=float).reshape(-1, targets.shape[1])
    weights = np.asarray(weights, dtype=float)
    if kernel.fast_sin2 is not None and targets.shape[1] == 1:
        out = _fast.sin2_velocity(np.ascontiguousarray(targets[:, 0]),
                                  np.ascontiguousarray(positions[:, 0]),
                                  np.ascontiguousarray(weights), kernel.fast_sin2)
        out = out.reshape(-1, 1)
    else:
        pair = kernel.pair(targets[:, None, :], positions[None, :, :])
        out = np.einsum("ijk,j->ik", pair, weights)
    return out[:, 0] if flat else out


@dataclass(frozen=True)
class FlowField:
    """Velocity field of a measure held fixed for one transport half-step."""

    positions: np.ndarray
    weights: np.ndarray
    kernel: InteractionKernel

    @classmethod
    def of(cls, mu, kernel: InteractionKernel) -> "FlowField":
        x, w = _atoms(mu)
        return cls(np.array(x), np.array(w), kernel)

    def __call__(self, x):
        return field_at(x, self.positions, self.weights, self.kernel)

    def speed_bound(self, radius: float) -> float:
        """``phi_R |mu|`` with ``phi_R = |phi0| + 2 L radius`` (or the recorded sup)."""
        return self.kernel.sup_on(radius) * float(np.abs(self.weights).sum())

    def flow(self, x, duration: float, substeps: int = 4):
        """Follow characteristics from ``x`` for ``duration`` with midpoint RK2."""
        x = np.array(x, dtype=float)
        h = duration / substeps
        for _ in range(substeps):
            x = x + h * self(x + 0.5 * h * self(x))
        return x


def velocity_eval(mu, x, kernel: InteractionKernel):
    """``V[mu](x)`` for a grid (cell centres as atoms) or atomic measure."""
    pos, w = _atoms(mu)
    scalar = np.ndim(x) == 0
    out = field_at(np.atleast_1d(np.asarray(x, dtype=float)), pos, w, kernel)
    return float(out[0]) if scalar else out


def growth_rates(positions, weights, source: SourceKernel, method: str = "auto") -> np.ndarray:
    """``Lambda(x_i) = int S(x_i, y_1, .., y_q) dmu(y_1)..dmu(y_q)`` at every atom.

    ``method="factored"`` uses the two-pass form of the M1 kernel,
    ``"naive"`` the full q-fold sum, ``"auto"`` the former when possible.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim == 1:
        positions = positions.reshape(-1, 1)
    weights = np.asarray(weights, dtype=float)
    if method == "auto":
        method = "factored" if source.name == "m1" else "naive"
    if method == "factored":
        if source.name != "m1":
            raise ValueError("factored evaluation exists only for the m1 source")
        phi = source.params["phi"]
        A = field_at(positions, positions, weights, phi)
        return growth_m1(positions, weights, A, source.params["beta"])
    if method != "naive":
        raise ValueError(f"unknown method {method!r}")
    n = len(weights)
    if float(n) ** (source.arity + 1) > NAIVE_LIMIT:
        raise ValueError(f"naive source sum over {n} atoms exceeds {NAIVE_LIMIT:.0e} evaluations")
    return growth_naive(positions, weights, source)


def source_eval(mu, source: SourceKernel, method: str = "auto"):
    """Signed measure ``h[mu]``, carried on the atoms (or cells) of ``mu``."""
    pos, w = _atoms(mu)
    h = w * growth_rates(pos, w, source, method)
    if isinstance(mu, GridMeasure):
        return mu.with_mass(h)
    return AtomicMeasure(pos, h)


def _check_nonnegative(w, where):
    if np.any(w < 0):
        i = int(np.argmin(w))
        raise SchemeError(f"negative mass {w[i]!r} after source half-step at {where}; dt*S_bar too large")


def scheme_S_step(mu: GridMeasure, config: SchemeConfig) -> GridMeasure:
    """One split step on the grid: source update, then frozen-field transport and CIC deposit."""
    dt = config.dt
    x = mu.centers
    w = np.asarray(mu.mass)
    frozen = FlowField(x.reshape(-1, 1), w, config.kernel)
    lam = growth_rates(x, w, config.source)
    w_half = w * (1.0 + dt * lam)
    _check_nonnegative(w_half, f"cell {int(np.argmin(w_half))}")
    arrival = frozen.flow(x, dt, config.transport_substeps)
    out, bad = _fast.cic_deposit(np.ascontiguousarray(arrival), np.ascontiguousarray(w_half),
                                 mu.left, mu.width, mu.cells)
    if bad >= 0:
        raise SchemeError(
            f"characteristic from cell {bad} reached x={arrival[bad]!r} outside "
            f"[{mu.left}, {mu.right}]; enlarge the domain (support bound R_T = "
            f"{config.support_bound():.4g})"
        )
    return mu.with_mass(out)


def scheme_S_step_atomic(mu: AtomicMeasure, config: SchemeConfig) -> AtomicMeasure:
    """Split step on atoms; exact up to the characteristic integrator."""
    frozen = FlowField.of(mu, config.kernel)
    lam = growth_rates(mu.positions, mu.weights, config.source)
    w = mu.weights * (1.0 + config.dt * lam)
    _check_nonnegative(w, "an atom")
    x = frozen.flow(mu.positions, config.dt, config.transport_substeps)
    return AtomicMeasure(x, w).canonical()


def scheme_Stilde_step_atomic(mu: AtomicMeasure, config: SchemeConfig) -> AtomicMeasure:
    """Transport the measure, then add ``dt h[mu]`` at the pre-transport atoms."""
    frozen = FlowField.of(mu, config.kernel)
    h = source_eval(mu, config.source)
    moved = AtomicMeasure(frozen.flow(mu.positions, config.dt, config.transport_substeps), mu.weights)
    return (moved + h.scaled(config.dt)).canonical()


def diagnostics(t: float, g) -> dict:
    w = g.mass if isinstance(g, GridMeasure) else g.weights
    if isinstance(g, GridMeasure):
        lo, hi = g.support()
    else:
        nz = g.positions[g.weights != 0, 0]
        lo, hi = (float(nz.min()), float(nz.max())) if nz.size else (float("nan"),) * 2
    return {"t": float(t), "mass": float(w.sum()), "min_mass": float(w.min()),
            "support_left": lo, "support_right": hi, "tv": float(np.abs(w).sum())}


@dataclass
class SchemeRun:
    times: np.ndarray
    measures: list
    diagnostics: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def run_scheme(config: SchemeConfig, mu0, sample_times=None, mass_tol: float = 1e-9,
               require_support_domain: bool = False) -> SchemeRun:
    """Iterate the split step ``2**k`` times and keep the requested samples.

    ``sample_times`` are snapped to the nearest multiple of ``dt`` (default:
    every step). ``mu0`` may be a :class:`GridMeasure` (grid scheme) or an
    :class:`AtomicMeasure` (atomic scheme). With ``require_support_domain``
    the domain must contain the ball of radius ``R_T``.
    """
    atomic = isinstance(mu0, AtomicMeasure)
    if not atomic and (mu0.left, mu0.right, mu0.cells) != (config.left, config.right, config.cells):
        raise ValueError("initial grid does not match the configured geometry")
    w0 = mu0.weights if atomic else mu0.mass
    if np.any(w0 < 0) or abs(w0.sum() - 1.0) > 1e-12:
        raise ValueError("initial measure must be a probability measure")
    pos0 = mu0.positions[:, 0] if atomic else mu0.centers[mu0.mass != 0]
    if pos0.size and (pos0.min() < config.left or pos0.max() > config.right):
        raise ValueError("initial support leaves the configured domain")
    R_T = config.support_bound()
    if require_support_domain and (config.left > -R_T or config.right < R_T):
        raise ValueError(f"domain [{config.left}, {config.right}] does not contain B(0, {R_T:.4g})")
    steps, dt = config.steps, config.dt
    if sample_times is None:
        keep = set(range(steps + 1))
    else:
        keep = {min(steps, int(round(t / dt))) if dt > 0 else 0 for t in sample_times}
    keep.add(0)
    step = scheme_S_step_atomic if atomic else scheme_S_step
    mu = mu0
    times, out, diag = [], [], []
    for n in range(steps + 1):
        if n > 0:
            mu = step(mu, config)
            w = mu.weights if atomic else mu.mass
            if abs(w.sum() - 1.0) > mass_tol:
                raise SchemeError(f"mass drifted to {w.sum()!r} at step {n}")
        if n in keep:
            times.append(n * dt)
            out.append(mu)
            diag.append(diagnostics(n * dt, mu))
    meta = {"dt": dt, "k": config.k, "steps": steps, "S_bar": config.source_bound, "R_T": R_T,
            "transport_substeps": config.transport_substeps}
    return SchemeRun(np.array(times), out, diag, meta)
