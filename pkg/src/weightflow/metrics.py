"""Exact one-dimensional transport distances and the flat (bounded Lipschitz) metric.

The flat distance is the linear program

    maximise  sum_i c_i f_i   subject to  |f_i| <= a,  |f_{i+1} - f_i| <= b (x_{i+1} - x_i)

over the sorted union support, with ``c`` the weights of ``mu - nu``. The
constraint graph is a path, so the program is solved exactly by dynamic
programming over concave piecewise-linear value functions; the optimal
``f`` comes back as a certificate.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .measures import AtomicMeasure, GridMeasure, atomic_from_grid

PROB_TOL = 1e-9


@dataclass
class DistanceReport:
    value: float
    method: str
    certificate: dict | None = None

    def check_certificate(self, c, a: float = 1.0, b: float = 1.0, tol: float = 1e-9) -> bool:
        """True when the witness is feasible and attains ``value`` within ``tol``."""
        x = np.asarray(self.certificate["x"])
        f = np.asarray(self.certificate["f"])
        ok = np.all(np.abs(f) <= a + tol)
        ok = ok and np.all(np.abs(np.diff(f)) <= b * np.diff(x) + tol)
        return bool(ok and abs(float(np.dot(c, f)) - self.value) <= tol)


def _one_dim(mu: AtomicMeasure, name: str):
    if mu.dim != 1:
        raise ValueError(f"{name} is {mu.dim}-dimensional; only d = 1 is supported")


def _check_probability(mu: AtomicMeasure, name: str):
    _one_dim(mu, name)
    if mu.size == 0 or np.any(mu.weights < 0) or abs(mu.total_mass - 1.0) > PROB_TOL:
        raise ValueError(f"{name} is not a probability measure (mass {mu.total_mass!r})")


def _quantile_steps(mu: AtomicMeasure):
    order = np.argsort(mu.x, kind="stable")
    x = mu.x[order]
    w = mu.weights[order]
    keep = w > 0
    x, w = x[keep], w[keep]
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return x, cdf


def wasserstein_p_1d(mu: AtomicMeasure, nu: AtomicMeasure, p: float = 1) -> float:
    """``W_p`` between probability measures on the line.

    Integrates ``|F_mu^{-1}(u) - F_nu^{-1}(u)|^p`` exactly over the merged
    breakpoints of the two quantile functions. Totals within ``PROB_TOL`` of
    one are renormalised.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    _check_probability(mu, "mu")
    _check_probability(nu, "nu")
    xa, ca = _quantile_steps(mu)
    xb, cb = _quantile_steps(nu)
    u = np.union1d(ca, cb)
    du = np.diff(np.concatenate([[0.0], u]))
    mid = u - 0.5 * du
    ia = np.minimum(np.searchsorted(ca, mid), len(xa) - 1)
    ib = np.minimum(np.searchsorted(cb, mid), len(xb) - 1)
    gap = np.abs(xa[ia] - xb[ib])
    return float(np.sum(du * gap**p) ** (1.0 / p))


def _chain_lp(x, c, a: float, b: float):
    """Solve the path-constrained program; return ``(value, f)``."""
    n = len(c)
    d = b * np.diff(x)
    # value function of f_i as a concave polyline through (px, py)
    px = np.array([-a, a])
    py = c[0] * px
    plateaus = []
    for i in range(n - 1):
        top = py.max()
        tol = 1e-14 * max(1.0, np.abs(py).max())
        flat = np.flatnonzero(py >= top - tol)
        lo, hi = flat[0], flat[-1]
        p, q = px[lo], px[hi]
        plateaus.append((p, q))
        nx = np.concatenate([px[: lo + 1] - d[i], px[hi:] + d[i]])
        ny = np.concatenate([py[: lo + 1], py[hi:]])
        inside = (nx > -a) & (nx < a)
        ends_y = np.interp([-a, a], nx, ny)
        # outside the shifted polyline the windowed max is the plateau value
        if nx[0] > -a:
            ends_y[0] = ny[0]
        if nx[-1] < a:
            ends_y[1] = ny[-1]
        px = np.concatenate([[-a], nx[inside], [a]])
        py = np.concatenate([[ends_y[0]], ny[inside], [ends_y[1]]])
        py = py + c[i + 1] * px
    top = py.max()
    f = np.empty(n)
    f[-1] = px[int(np.argmax(py))]
    for i in range(n - 2, -1, -1):
        p, q = plateaus[i]
        g = f[i + 1]
        f[i] = min(max(min(max(g, p), q), g - d[i]), g + d[i])
    return float(top), f


def bounded_lipschitz(mu: AtomicMeasure, nu: AtomicMeasure, a: float = 1.0,
                      b: float = 1.0) -> DistanceReport:
    """Flat distance ``sup { int f d(mu - nu) : |f| <= a, Lip(f) <= b }``.

    ``a = b = 1`` gives the bounded Lipschitz distance. Signed inputs are
    accepted; only ``mu - nu`` matters. The certificate holds the optimal
    ``f`` at the sorted union support.
    """
    _one_dim(mu, "mu")
    _one_dim(nu, "nu")
    if not (a > 0 and b > 0):
        raise ValueError("need a > 0 and b > 0")
    diff = (mu - nu).canonical()
    if diff.size == 0:
        return DistanceReport(0.0, "dual_lp", {"x": [], "f": [], "c": []})
    order = np.argsort(diff.x, kind="stable")
    x = diff.x[order]
    c = diff.weights[order]
    value, f = _chain_lp(x, c, float(a), float(b))
    if not np.isfinite(value):
        raise RuntimeError("flat-distance program did not produce a finite optimum")
    return DistanceReport(max(value, 0.0), "dual_lp", {"x": x.tolist(), "f": f.tolist(), "c": c.tolist()})


def bl_distance(mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    return bounded_lipschitz(mu, nu).value


def _as_atomic(m):
    return atomic_from_grid(m) if isinstance(m, GridMeasure) else m


def distance_between_grid(mu, nu, which: str = "W1", p: float = 2) -> float:
    """Distance between atomised grids (cell centres) or a grid and atoms.

    ``which`` is ``"W1"``, ``"Wp"`` (uses ``p``) or ``"BL"``.
    """
    if isinstance(mu, GridMeasure) and isinstance(nu, GridMeasure):
        if mu.left > nu.right or nu.left > mu.right:
            raise ValueError("grid domains do not overlap")
    a, b = _as_atomic(mu), _as_atomic(nu)
    if which == "W1":
        return wasserstein_p_1d(a, b, 1)
    if which == "Wp":
        return wasserstein_p_1d(a, b, p)
    if which == "BL":
        return bounded_lipschitz(a, b).value
    raise ValueError(f"unknown distance {which!r}")


@dataclass
class InequalityReport:
    pairs: int
    max_violation: float
    worst_pair_seed: int | None
    slack: float
    details: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.slack

    def to_json(self) -> dict:
        return {"pairs": self.pairs, "max_violation": self.max_violation,
                "worst_pair_seed": self.worst_pair_seed}

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


def pair_violations(mu: AtomicMeasure, nu: AtomicMeasure, R: float, ps=(1, 2, 3)) -> dict:
    """Amount by which each comparison inequality fails for one pair (0 if it holds)."""
    for m in (mu, nu):
        if m.size and np.max(np.abs(m.x)) > R + 1e-12:
            raise ValueError(f"support leaves B(0, {R})")
    rho = bl_distance(mu, nu)
    W = {p: wasserstein_p_1d(mu, nu, p) for p in sorted(set(ps) | {1})}
    out = {
        "bl_le_w1": rho - W[1],
        "w1_le_CR_bl": W[1] - max(1.0, R) * rho,
    }
    ordered = sorted(W)
    for lo, hi in zip(ordered, ordered[1:]):
        out[f"w{lo}_le_w{hi}"] = W[lo] - W[hi]
    for p in ordered:
        if p > 1:
            out[f"w{p}_interp"] = W[p] - (2.0 * R) ** ((p - 1) / p) * W[1] ** (1.0 / p)
    return {k: max(v, 0.0) for k, v in out.items()}


def random_pair(seed: int, R: float = 1.0, max_atoms: int = 12):
    """Two random probability measures with atoms in ``[-R, R]``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(2):
        n = int(rng.integers(1, max_atoms + 1))
        w = rng.random(n) + 1e-3
        out.append(AtomicMeasure(rng.uniform(-R, R, n), w / w.sum()))
    return out[0], out[1]


def check_metric_inequalities(samples, R: float, ps=(1, 2, 3), slack: float = 1e-10) -> InequalityReport:
    """Evaluate every inequality on ``samples``, an iterable of ``(seed, mu, nu)``."""
    worst, worst_seed, count, details = 0.0, None, 0, []
    for seed, mu, nu in samples:
        v = pair_violations(mu, nu, R, ps)
        m = max(v.values())
        details.append({"seed": seed, **v})
        if worst_seed is None or m > worst:
            worst, worst_seed = m, seed
        count += 1
    return InequalityReport(count, float(worst), worst_seed, slack, details)
