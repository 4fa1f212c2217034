"""Pure-numpy implementations of the hot 1-D kernels.

Same signatures and semantics as the compiled ``_ckernels`` module; used when
the extension is not built or when ``WEIGHTFLOW_PURE=1`` is set.
"""
import numpy as np

SNAP = 1e-10  # arrivals this close to a centre (in cell widths) count as on it


def _sin2(d, radius):
    a = np.abs(d)
    out = np.sign(d) * np.sin(np.pi * a / radius) ** 2
    return np.where(a <= radius, out, 0.0)


def _dir(d):
    return np.sign(d) * np.arctan(np.abs(d))


def sin2_velocity(targets, sources, weights, radius):
    targets = np.asarray(targets, dtype=float)
    sources = np.asarray(sources, dtype=float)
    weights = np.asarray(weights, dtype=float)
    keep = weights != 0.0
    if not keep.any():
        return np.zeros_like(targets)
    disp = sources[keep][None, :] - targets[:, None]
    return _sin2(disp, radius) @ weights[keep]


def sin2_self_velocity(x, weights, radius):
    x = np.asarray(x, dtype=float)
    return sin2_velocity(x, x, weights, radius)


def m1_growth(x, weights, drift, beta):
    x = np.asarray(x, dtype=float)
    drift = np.asarray(drift, dtype=float)
    pair = (drift[:, None] + drift[None, :]) * _dir(x[:, None] - x[None, :])
    return 0.5 * beta * (pair @ np.asarray(weights, dtype=float))


def cic_deposit(positions, masses, left, width, ncells):
    positions = np.asarray(positions, dtype=float)
    masses = np.asarray(masses, dtype=float)
    live = masses != 0.0
    right = left + width * ncells
    outside = live & ~((positions >= left) & (positions <= right))
    if outside.any():
        return np.zeros(ncells), int(np.flatnonzero(outside)[0])
    p = positions[live]
    w = masses[live]
    s = (p - left) / width - 0.5
    near = np.abs(s - np.rint(s)) <= SNAP
    s[near] = np.rint(s[near])
    lo_edge = s <= 0.0
    hi_edge = (s >= ncells - 1) & ~lo_edge
    mid = ~(lo_edge | hi_edge)
    j = np.floor(s[mid]).astype(np.intp)
    frac = s[mid] - j
    out = np.zeros(ncells)
    out[0] += w[lo_edge].sum()
    out[ncells - 1] += w[hi_edge].sum()
    out += np.bincount(j, weights=w[mid] * (1.0 - frac), minlength=ncells)[:ncells]
    out += np.bincount(j + 1, weights=w[mid] * frac, minlength=ncells + 1)[:ncells]
    return out, -1
