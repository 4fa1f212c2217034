"""Interaction functions, direction smoother and skew-symmetric source kernels.

All kernels act on arrays whose last axis is the space dimension ``d`` and
broadcast over the leading axes.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


def _norm(v):
    return np.sqrt(np.sum(v * v, axis=-1, keepdims=True))


def _unit_scaled(delta, profile):
    """``profile(|delta|) * delta / |delta|`` with value 0 at the origin."""
    delta = np.asarray(delta, dtype=float)
    r = _norm(delta)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, profile(r) * delta / safe, 0.0)


def direction(delta):
    """Smoothed unit vector ``arctan(|delta|) delta / |delta|`` (0 at 0)."""
    return _unit_scaled(delta, np.arctan)


@dataclass(frozen=True)
class InteractionKernel:
    """Interaction function acting on the displacement ``y - x``.

    ``pair_func``, when given, replaces the displacement form and returns the
    contribution of a source at ``y`` to the velocity at ``x``; it is how
    non translation-invariant fields are expressed.
    """

    func: Callable
    lipschitz: float
    phi0: np.ndarray
    name: str = "custom"
    radius: float | None = None
    sup: float | None = None
    pair_func: Callable | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, delta):
        return self.func(np.asarray(delta, dtype=float))

    def pair(self, x, y):
        if self.pair_func is not None:
            return self.pair_func(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return self.func(np.asarray(y, dtype=float) - np.asarray(x, dtype=float))

    @property
    def translation_invariant(self) -> bool:
        return self.pair_func is None

    @property
    def fast_sin2(self) -> float | None:
        """Support radius when the compiled sin^2 path applies, else None."""
        return self.params.get("R") if self.name == "sin2" else None

    def sup_on(self, radius: float) -> float:
        """Bound on ``|phi|`` over displacements of norm at most ``2 radius``."""
        if self.sup is not None:
            return self.sup
        return float(np.linalg.norm(self.phi0)) + 2.0 * self.lipschitz * radius


@dataclass(frozen=True)
class SourceKernel:
    """A ``(q+1)``-ary scalar kernel, antisymmetric in ``skew_pair``."""

    arity: int
    func: Callable
    skew_pair: tuple = (0, 1)
    name: str = "custom"
    lipschitz_fn: Callable | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, *args):
        if len(args) != self.arity + 1:
            raise TypeError(f"{self.name} takes {self.arity + 1} arguments, got {len(args)}")
        return self.func(*(np.asarray(a, dtype=float) for a in args))

    def lipschitz_on(self, radius: float) -> float:
        if self.lipschitz_fn is None:
            raise ValueError(f"no Lipschitz bound recorded for {self.name}")
        return float(self.lipschitz_fn(radius))

    def bound(self, radius: float, dim: int = 1, samples: int = 20000, seed: int = 0,
              center=None) -> float:
        """Sampled ``max |S|`` over tuples drawn from the ball ``B(center, radius)``.

        In one dimension a regular lattice of the ball is included alongside
        the random draws, which pins the maximum down for the smooth kernels
        used here.
        """
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=float).reshape(dim)
        rng = np.random.default_rng(seed)
        tuples = [_ball_points(rng, (samples,), dim, radius) + c for _ in range(self.arity + 1)]
        best = float(np.max(np.abs(self(*tuples)))) if samples else 0.0
        if dim == 1:
            n = {1: 401, 2: 61}.get(self.arity, 17)
            axis = c[0] + np.linspace(-radius, radius, n)
            mesh = np.meshgrid(*([axis] * (self.arity + 1)), indexing="ij")
            vals = self(*(m.reshape(-1, 1) for m in mesh))
            best = max(best, float(np.max(np.abs(vals))))
        return best


def _ball_points(rng, shape, dim, radius):
    v = rng.normal(size=shape + (dim,))
    v /= np.maximum(_norm(v), 1e-300)
    r = radius * rng.random(shape + (1,)) ** (1.0 / dim)
    return v * r


def kernel_sin2(R: float) -> InteractionKernel:
    """``delta/|delta| * sin^2(pi |delta| / R)`` on ``|delta| <= R``, zero outside.

    The radial profile has slope at most ``pi/R`` and ``sin^2(u)/u`` stays
    below that, so ``pi/R`` is a Lipschitz constant in any dimension. The
    sampled constant (times 1.05) is kept in ``params`` for reference.
    """
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    R = float(R)

    def profile(r):
        return np.where(r <= R, np.sin(np.pi * r / R) ** 2, 0.0)

    def phi(delta):
        return _unit_scaled(delta, profile)

    rng = np.random.default_rng(12345)
    u = rng.uniform(-1.5 * R, 1.5 * R, size=(4000, 1))
    v = u + rng.normal(scale=0.05 * R, size=u.shape)
    q = np.abs(phi(u) - phi(v))[:, 0] / np.maximum(np.abs(u - v)[:, 0], 1e-300)
    return InteractionKernel(
        func=phi,
        lipschitz=np.pi / R,
        phi0=np.zeros(1),
        name="sin2",
        radius=R,
        sup=1.0,
        params={"R": R, "sampled_lipschitz": 1.05 * float(q.max())},
    )


def zero_interaction() -> InteractionKernel:
    return InteractionKernel(func=lambda d: np.zeros_like(np.asarray(d, dtype=float)),
                             lipschitz=0.0, phi0=np.zeros(1), name="zero", sup=0.0)


def two_atom_field() -> InteractionKernel:
    """Field ``v(x)`` = ``x`` inside ``(-1, 1)`` and ``sgn(x)`` outside; ``V[mu] = mu(R) v``."""

    def v(x):
        return np.clip(x, -1.0, 1.0)

    def pair(x, y):
        return np.broadcast_to(v(x), np.broadcast_shapes(np.shape(x), np.shape(y))).copy()

    return InteractionKernel(func=lambda d: np.zeros_like(d), lipschitz=1.0, phi0=np.zeros(1),
                             name="appendixB_field", sup=1.0, pair_func=pair)


def source_m1(phi: InteractionKernel, beta: float) -> SourceKernel:
    """``beta < (phi(z-x) + phi(z-y))/2 , direction(x-y) >`` with ``q = 2``."""
    beta = float(beta)

    def S(x, y, z):
        avg = 0.5 * (phi(z - x) + phi(z - y))
        return beta * np.sum(avg * direction(x - y), axis=-1)

    def lip(radius):
        return abs(beta) * (phi.lipschitz * np.arctan(2.0 * radius) + phi.sup_on(radius))

    return SourceKernel(arity=2, func=S, skew_pair=(0, 1), name="m1", lipschitz_fn=lip,
                        params={"beta": beta, "phi": phi})


def source_linear_appendixB() -> SourceKernel:
    """``S(x, y) = x - y`` in one dimension (``q = 1``)."""

    def S(x, y):
        return (x - y)[..., 0]

    return SourceKernel(arity=1, func=S, skew_pair=(0, 1), name="appendixB_linear",
                        lipschitz_fn=lambda radius: 1.0)


def zero_source(arity: int = 1) -> SourceKernel:
    return SourceKernel(arity=arity, func=lambda *a: np.zeros(np.broadcast_shapes(*(x.shape for x in a))[:-1]),
                        name="zero", lipschitz_fn=lambda radius: 0.0)


@dataclass
class SkewReport:
    max_defect: float
    samples: int
    passed: bool


def validate_skew(S: SourceKernel, samples: int = 1000, radius: float = 1.0, seed: int = 0,
                  dim: int = 1, tol: float = 1e-12) -> SkewReport:
    """Largest ``|S(..y_i..y_j..) + S(..y_j..y_i..)|`` over random tuples in a ball."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    args = [_ball_points(rng, (samples,), dim, radius) for _ in range(S.arity + 1)]
    i, j = S.skew_pair
    swapped = list(args)
    swapped[i], swapped[j] = args[j], args[i]
    defect = float(np.max(np.abs(S(*args) + S(*swapped))))
    return SkewReport(defect, samples, defect <= tol)


_PRESET = re.compile(r"^\s*([A-Za-z_0-9]+)\s*(?:\((.*)\))?\s*$")


def from_preset(name: str):
    """Build a kernel from a config string: ``sin2(R)``, ``m1(beta, R)``,
    ``appendixB_linear`` or ``appendixB_field``."""
    m = _PRESET.match(name)
    if not m:
        raise ValueError(f"cannot parse kernel preset {name!r}")
    key, argtext = m.group(1), m.group(2)
    args = [float(a) for a in argtext.split(",")] if argtext and argtext.strip() else []
    if key == "sin2" and len(args) == 1:
        return kernel_sin2(args[0])
    if key == "m1" and len(args) == 2:
        return source_m1(kernel_sin2(args[1]), args[0])
    if key == "appendixB_linear" and not args:
        return source_linear_appendixB()
    if key == "appendixB_field" and not args:
        return two_atom_field()
    raise ValueError(f"unknown kernel preset {name!r}")
