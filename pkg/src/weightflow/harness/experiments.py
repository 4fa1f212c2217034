"""Experiments built from the micro, scheme and metric modules.

Each ``run_*`` function takes an :class:`ExperimentConfig` and an optional
:class:`RunRecord`. With a record, artifacts are written to its directory
and every assertion lands in ``record.checks``; without one, results are
only returned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import macroscheme as ms
from .. import metrics as mt
from .. import micro, presets
from ..measures import (AtomicMeasure, ParticleState, atomic_from_grid, counting_measure,
                        empirical_measure, fmt, grid_from_density)
from .config import ExperimentConfig
from .output import RunRecord, svg_plot, write_json, write_rows

WEAK_RESIDUAL_C = 1.0


class CheckFailed(AssertionError):
    def __init__(self, failures):
        super().__init__("failed checks: " + ", ".join(failures))
        self.failures = list(failures)


def _record(record, cfg, name):
    return record if record is not None else RunRecord(None, name, cfg.to_dict())


# ----------------------------------------------------------------- initial data

def initial_state(cfg: ExperimentConfig, N: int) -> ParticleState:
    if cfg.preset == "appendixB":
        if N != 2:
            raise ValueError("the two-atom example has exactly N = 2 agents")
        M = 2.0 if cfg.mass_convention == "N" else 1.0
        return ParticleState([1.0, -1.0], [M / 2, M / 2], M)
    return micro.initial_state_from_density(N, presets.two_gaussian, cfg.mass_convention)


def initial_grid(cfg: ExperimentConfig):
    return grid_from_density(presets.two_gaussian, None, cfg.domain, cfg.G)


def scheme_config(cfg: ExperimentConfig, T: float | None = None, k: int | None = None) -> ms.SchemeConfig:
    """Scheme parameters on ``cfg.domain``; ``k`` defaults to the least level with
    ``dt * S_bar <= cfg.courant``."""
    phi, S = cfg.kernels()
    T = cfg.T if T is None else T
    left, right = cfg.domain
    S_bar = ms.source_bound(S, left, right)
    if k is None:
        k = cfg.k if cfg.k is not None else ms.minimal_k(T, S_bar, cfg.courant)
    return ms.SchemeConfig(phi, S, k=k, T=T, left=left, right=right, cells=cfg.G,
                           transport_substeps=cfg.transport_substeps, source_bound=S_bar,
                           R0=max(abs(left), abs(right)))


def micro_trajectory(cfg: ExperimentConfig, N: int, sample_times=None, stop_tol=None,
                     T: float | None = None, dt: float | None = None):
    phi, S = cfg.kernels()
    state = initial_state(cfg, N)
    mc = micro.MicroConfig(phi, S, N, state.M, cfg.dt if dt is None else dt,
                           cfg.T if T is None else T, cfg.integrator)
    return micro.integrate_micro(mc, state, sample_times=sample_times, stop_tol=stop_tol)


def state_at(traj: micro.Trajectory, t: float) -> ParticleState:
    """Sample nearest to ``t``; after an early stop the final state stands in."""
    h = traj.meta["dt"]
    i = int(np.argmin(np.abs(traj.times - t)))
    if abs(traj.times[i] - t) <= 0.5 * h * (1 + 1e-9):
        return traj.states[i]
    if traj.meta.get("early_stop") is not None and t > traj.times[-1]:
        return traj.final
    raise KeyError(f"no sample near t={t}")


# ----------------------------------------------------------------- clusters

@dataclass
class Cluster:
    center: float
    mass: float
    size: int


def detect_clusters(x, w, threshold: float = 1e-3) -> list:
    """Maximal chains of agents with neighbouring gaps ``<= threshold``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float)
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    cuts = np.flatnonzero(np.diff(x) > threshold) + 1
    out = []
    for xs, ws in zip(np.split(x, cuts), np.split(w, cuts)):
        out.append(Cluster(float(ws @ xs / ws.sum()), float(ws.sum()), len(xs)))
    return out


def match_centers(found, expected, tol: float):
    """Largest distance from an expected centre to the nearest found one."""
    if not found:
        return math.inf
    f = np.asarray(found)
    return float(max(np.min(np.abs(f - e)) for e in expected))


# ----------------------------------------------------------------- micro / macro commands

def micro_summary(traj: micro.Trajectory, source) -> dict:
    X = traj.positions
    S_bar = ms.source_bound(source, float(X.min()), float(X.max()) if X.max() > X.min() else float(X.min()) + 1e-12)
    out = traj.summary(S_bar)
    out["S_bar"] = S_bar
    return out


def run_micro(cfg: ExperimentConfig, record: RunRecord | None = None) -> dict:
    """Integrate each ``N`` in ``cfg.N_list`` and audit the conservation laws."""
    rec = _record(record, cfg, "micro")
    _, S = cfg.kernels()
    results = {}
    for N in cfg.N_list:
        steps = max(1, round(cfg.T / cfg.dt))
        grid = np.linspace(0.0, cfg.T, min(steps, 200) + 1)
        traj = micro_trajectory(cfg, N, sample_times=np.union1d(grid, cfg.times()))
        summ = micro_summary(traj, S)
        results[N] = summ
        if rec.writes:
            traj.to_csv(rec.path(f"trajectory_N{N}.csv"))
            write_json(rec.path(f"summary_N{N}.json"), summ)
        rec.check(f"N{N}_mass", summ["mass_drift_max"] <= 1e-8 * summ["M"], summ["mass_drift_max"])
        rec.check(f"N{N}_positive", summ["min_weight"] > 0, summ["min_weight"])
        rec.check(f"N{N}_growth_bound", summ["max_weight_ratio_vs_bound"] <= 1 + 1e-6,
                  summ["max_weight_ratio_vs_bound"])
    return results


def run_macro(cfg: ExperimentConfig, record: RunRecord | None = None) -> ms.SchemeRun:
    """Scheme run on the grid (or on atoms for the two-atom example)."""
    rec = _record(record, cfg, "macro")
    if cfg.preset == "appendixB":
        phi, S = cfg.kernels()
        R_T = ms.support_radius_bound(1.0, cfg.T, phi.lipschitz, phi.phi0)
        S_bar = ms.source_bound(S, -R_T, R_T)
        k = cfg.k if cfg.k is not None else ms.minimal_k(cfg.T, S_bar, cfg.courant)
        sc = ms.SchemeConfig(phi, S, k=k, T=cfg.T, left=-R_T, right=R_T, cells=1,
                             transport_substeps=cfg.transport_substeps, source_bound=S_bar, R0=1.0)
        mu0 = AtomicMeasure([[1.0], [-1.0]], [0.5, 0.5])
    else:
        sc = scheme_config(cfg)
        mu0 = initial_grid(cfg)
    run = ms.run_scheme(sc, mu0, sample_times=[0.0] + cfg.times())
    rec.meta.update({k: v for k, v in run.meta.items()})
    if rec.writes:
        for t, m in zip(run.times, run.measures):
            if hasattr(m, "cells"):
                m.to_csv(rec.path(f"macro_t{fmt(t)}.csv"), t=t)
            else:
                m.to_csv(rec.path(f"macro_t{fmt(t)}.csv"))
        write_json(rec.path("diagnostics.json"), run.diagnostics)
    R_T = run.meta["R_T"]
    for d in run.diagnostics:
        tag = f"t{fmt(d['t'])}"
        rec.check(f"{tag}_mass", abs(d["mass"] - 1.0) <= 1e-10, d["mass"])
        rec.check(f"{tag}_nonnegative", d["min_mass"] >= 0, d["min_mass"])
        rec.check(f"{tag}_support", max(abs(d["support_left"]), abs(d["support_right"])) <= R_T,
                  [d["support_left"], d["support_right"]])
    return run


# ----------------------------------------------------------------- clustering experiment

@dataclass
class ClusterExperiment:
    clusters: dict
    macro: ms.SchemeRun
    trajectories: dict
    sample_times: list


def run_paper_experiment(cfg: ExperimentConfig, record: RunRecord | None = None) -> ClusterExperiment:
    """Particles for every ``N`` against the grid solution, plus cluster detection.

    Checks that each run ends with ``len(cfg.cluster_centers)`` clusters near
    ``cfg.cluster_centers`` and that the count does not depend on ``N``.
    """
    rec = _record(record, cfg, "clusters")
    _, S = cfg.kernels()
    times = cfg.times()
    steps = max(1, round(cfg.T / cfg.dt))
    dense = np.union1d(np.linspace(0.0, cfg.T, min(steps, 200) + 1), times)
    trajs, clusters = {}, {}
    for N in cfg.N_list:
        traj = micro_trajectory(cfg, N, sample_times=dense, stop_tol=cfg.stop_tol)
        trajs[N] = traj
        fin = traj.final
        found = detect_clusters(fin.x[:, 0], fin.m, cfg.cluster_threshold)
        clusters[N] = found
        if rec.writes:
            traj.to_csv(rec.path(f"trajectory_N{N}.csv"))
            write_json(rec.path(f"summary_N{N}.json"), micro_summary(traj, S))
            X = traj.positions[:, :, 0]
            svg_plot(rec.path(f"trajectories_N{N}.svg"),
                     [(traj.times, X[:, i], "") for i in range(N)],
                     title=f"agent positions, N={N}", xlabel="t", ylabel="x")
    macro = run_macro(cfg, rec)
    if rec.writes:
        rows = []
        for t, g in zip(macro.times, macro.measures):
            e = g.edges
            rows += [[float(t), e[j], e[j + 1], g.mass[j], g.density[j]] for j in range(g.cells)]
        write_rows(rec.path("macro_density.csv"), ["t", "cell_left", "cell_right", "mass", "density"], rows)
        write_json(rec.path("macro_diagnostics.json"), macro.diagnostics)
        svg_plot(rec.path("macro_density.svg"),
                 [(g.centers, g.density, f"t={t:.3g}") for t, g in zip(macro.times, macro.measures)],
                 title="grid density", xlabel="x", ylabel="density")
        for i, t in enumerate(times):
            g = macro.measures[int(np.argmin(np.abs(macro.times - t)))]
            series = [(g.centers, g.density, "grid")]
            rows = []
            for N in cfg.N_list:
                c = counting_measure(state_at(trajs[N], t), cfg.bins, cfg.domain)
                e = c.edges
                rows += [[N, float(t), e[j], e[j + 1], c.mass[j], c.density[j]] for j in range(c.cells)]
                series.append((e, np.append(c.density, c.density[-1]), f"N={N}", "step"))
            write_rows(rec.path(f"overlay_t{i + 1}.csv"),
                       ["N", "t", "cell_left", "cell_right", "mass", "density"], rows)
            svg_plot(rec.path(f"overlay_t{i + 1}.svg"), series,
                     title=f"counting measure vs grid density, t={t:.3g}", xlabel="x", ylabel="density")
        write_json(rec.path("clusters.json"), {
            str(N): [c.__dict__ for c in cl] for N, cl in clusters.items()})
    rec.meta["sample_times"] = times
    rec.meta["early_stop"] = {str(N): tr.meta["early_stop"] for N, tr in trajs.items()}
    want = len(cfg.cluster_centers)
    counts = {N: len(cl) for N, cl in clusters.items()}
    rec.check("cluster_count", all(n == want for n in counts.values()), counts)
    rec.check("cluster_count_independent_of_N", len(set(counts.values())) == 1, counts)
    for N, cl in clusters.items():
        gap = match_centers([c.center for c in cl], cfg.cluster_centers, cfg.cluster_tol)
        rec.check(f"N{N}_centers", gap <= cfg.cluster_tol and len(cl) == want,
                  {"centers": [c.center for c in cl], "max_gap": gap})
    return ClusterExperiment(clusters, macro, trajs, times)


# ----------------------------------------------------------------- convergence

@dataclass
class ConvergenceTable:
    rows: list
    slopes: dict = field(default_factory=dict)
    C_hat: float = float("nan")
    meta: dict = field(default_factory=dict)

    def value(self, N, t, metric) -> float:
        for n, tt, m, v in self.rows:
            if n == N and m == metric and abs(tt - t) < 1e-12:
                return v
        raise KeyError((N, t, metric))

    @property
    def times(self) -> list:
        return sorted({r[1] for r in self.rows})

    @property
    def N_list(self) -> list:
        return sorted({r[0] for r in self.rows})

    def to_csv(self, path) -> None:
        write_rows(path, ["N", "t", "metric", "distance"], [[n, float(t), m, float(v)] for n, t, m, v in self.rows])


def fit_slope(N_list, values) -> float:
    """Least-squares slope of ``log D`` against ``log N``."""
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        return float("nan")
    return float(np.polyfit(np.log(np.asarray(N_list, float)), np.log(v), 1)[0])


METRICS = ("BL", "W1", "W2")


def run_convergence_study(cfg: ExperimentConfig, record: RunRecord | None = None) -> ConvergenceTable:
    """Distances between particle solutions and one grid reference solution.

    Rows cover ``N_list x ({0} + sample_times) x {BL, W1, W2}``. Checks that
    the largest ``N`` beats the smallest at every time, that the fitted
    log-log slopes are negative, and the row-wise metric comparisons.
    """
    rec = _record(record, cfg, "converge")
    times = [0.0] + cfg.times()
    sc = scheme_config(cfg)
    ref = ms.run_scheme(sc, initial_grid(cfg), sample_times=times)
    refs = [atomic_from_grid(g) for g in ref.measures]
    R_T = ref.meta["R_T"]
    rows = []
    for N in cfg.N_list:
        traj = micro_trajectory(cfg, N, sample_times=times)
        for t, r in zip(times, refs):
            e = empirical_measure(state_at(traj, t))
            rows.append((N, t, "BL", mt.bl_distance(e, r)))
            rows.append((N, t, "W1", mt.wasserstein_p_1d(e, r, 1)))
            rows.append((N, t, "W2", mt.wasserstein_p_1d(e, r, 2)))
    table = ConvergenceTable(rows, meta={"k": sc.k, "dt_macro": sc.dt, "G": cfg.G, "R_T": R_T,
                                         "S_bar": sc.source_bound})
    Ns = cfg.N_list
    for t in times:
        for m in METRICS:
            vals = [table.value(N, t, m) for N in Ns]
            table.slopes[f"{m}@{fmt(t)}"] = fit_slope(Ns, vals) if len(Ns) > 1 else float("nan")
            if len(Ns) > 1:
                rec.check(f"{m}_t{fmt(t)}_decreasing", vals[-1] < vals[0], vals)
                rec.check(f"{m}_t{fmt(t)}_slope", table.slopes[f"{m}@{fmt(t)}"] < 0,
                          table.slopes[f"{m}@{fmt(t)}"])
    rates = []
    for N in Ns:
        d0 = table.value(N, 0.0, "BL")
        for t in times[1:]:
            if d0 > 0 and t > 0:
                rates.append(math.log(table.value(N, t, "BL") / d0) / t)
    table.C_hat = max(max(rates, default=0.0), 1e-12)
    stab = max((table.value(N, t, "BL") - math.exp(table.C_hat * t) * table.value(N, 0.0, "BL")
                for N in Ns for t in times), default=0.0)
    rec.check("stability_constant", table.C_hat > 0 and stab <= 1e-12, {"C_hat": table.C_hat})
    worst = 0.0
    for N in Ns:
        for t in times:
            rho, w1, w2 = (table.value(N, t, m) for m in METRICS)
            worst = max(worst, rho - w1, w1 - max(1.0, R_T) * rho,
                        w2 - math.sqrt(2.0 * R_T) * math.sqrt(w1))
    rec.check("rowwise_metric_inequalities", worst <= 1e-10, worst)
    if rec.writes:
        table.to_csv(rec.path("convergence.csv"))
        write_json(rec.path("convergence.json"), {"slopes": table.slopes, "C_hat": table.C_hat,
                                                  **table.meta})
        for m in METRICS:
            svg_plot(rec.path(f"convergence_{m}.svg"),
                     [(np.log10(Ns), np.log10([max(table.value(N, t, m), 1e-300) for N in Ns]),
                       f"t={t:.3g}") for t in times],
                     title=f"{m} distance to the grid solution", xlabel="log10 N", ylabel="log10 D")
    rec.meta.update(table.meta)
    return table


# ----------------------------------------------------------------- two-atom comparison

def _expected_stilde_step1(dt):
    return AtomicMeasure([[1 + dt], [1.0], [-1.0], [-1 - dt]], [0.5, 0.5 * dt, -0.5 * dt, 0.5])


def _expected_s_step1(dt):
    return AtomicMeasure([[1 + dt], [-1 - dt]], [0.5 * (1 + dt), 0.5 * (1 - dt)])


def _atom_gap(a: AtomicMeasure, b: AtomicMeasure) -> float:
    ca, cb = a.canonical(), b.canonical()
    if ca.size != cb.size:
        return math.inf
    return float(max(np.max(np.abs(ca.positions - cb.positions)), np.max(np.abs(ca.weights - cb.weights))))


def run_scheme_comparison(cfg: ExperimentConfig, record: RunRecord | None = None) -> dict:
    """Both splittings on ``(delta_1 + delta_{-1})/2`` for each ``dt`` in ``cfg.dt_list``."""
    rec = _record(record, cfg, "scheme-compare")
    from ..kernels import two_atom_field, source_linear_appendixB

    phi, S = two_atom_field(), source_linear_appendixB()
    mu0 = AtomicMeasure([[1.0], [-1.0]], [0.5, 0.5])
    report = {}
    for dt in cfg.dt_list:
        reach = 1.0 + (cfg.steps + 1) * dt
        sc = ms.SchemeConfig(phi, S, k=0, T=dt, left=-reach, right=reach, cells=1,
                             transport_substeps=cfg.transport_substeps)
        S_iter, St_iter = [mu0], [mu0]
        for _ in range(cfg.steps):
            S_iter.append(ms.scheme_S_step_atomic(S_iter[-1], sc))
            St_iter.append(ms.scheme_Stilde_step_atomic(St_iter[-1], sc))
        tag = f"dt{fmt(dt)}"
        if rec.writes:
            for n in range(1, cfg.steps + 1):
                S_iter[n].to_csv(rec.path(f"S_{tag}_step{n}.csv"))
                St_iter[n].to_csv(rec.path(f"Stilde_{tag}_step{n}.csv"))
        st1, s1 = St_iter[1], S_iter[1]
        entry = {
            "Stilde": [{"step": n, "tv": m.total_variation, "mass": m.total_mass,
                        "center": float(m.moment()[0]), "atoms": m.size,
                        "min_weight": float(m.weights.min())} for n, m in enumerate(St_iter)],
            "S": [{"step": n, "tv": m.total_variation, "mass": m.total_mass,
                   "center": float(m.moment()[0]), "atoms": m.size,
                   "min_weight": float(m.weights.min())} for n, m in enumerate(S_iter)],
        }
        report[tag] = entry
        g = _atom_gap(st1, _expected_stilde_step1(dt))
        rec.check(f"{tag}_Stilde_step1_atoms", g <= 1e-12, g)
        rec.check(f"{tag}_Stilde_step1_tv", abs(st1.total_variation - (1 + dt)) <= 1e-12, st1.total_variation)
        rec.check(f"{tag}_Stilde_step1_mass", abs(st1.total_mass - 1) <= 1e-12, st1.total_mass)
        rec.check(f"{tag}_Stilde_step1_center", abs(st1.moment()[0] - dt) <= 1e-12, float(st1.moment()[0]))
        rec.check(f"{tag}_Stilde_negative_atom", st1.weights.min() < 0, float(st1.weights.min()))
        if cfg.steps >= 2:
            st2 = St_iter[2]
            rec.check(f"{tag}_Stilde_step2_tv", abs(st2.total_variation - (1 + 2 * (dt + dt * dt))) <= 1e-12,
                      st2.total_variation)
            rec.check(f"{tag}_Stilde_step2_center", abs(st2.moment()[0] - (2 * dt + 3 * dt * dt)) <= 1e-12,
                      float(st2.moment()[0]))
        for n in range(1, cfg.steps + 1):
            rec.check(f"{tag}_Stilde_step{n}_atom_count", St_iter[n].size == 2 * (n + 1), St_iter[n].size)
            rec.check(f"{tag}_S_step{n}_atom_count", S_iter[n].size == 2, S_iter[n].size)
            rec.check(f"{tag}_S_step{n}_nonnegative", S_iter[n].weights.min() >= 0, float(S_iter[n].weights.min()))
            rec.check(f"{tag}_S_step{n}_tv", abs(S_iter[n].total_variation - 1) <= 1e-12,
                      S_iter[n].total_variation)
        g = _atom_gap(s1, _expected_s_step1(dt))
        rec.check(f"{tag}_S_step1_atoms", g <= 1e-12, g)
    if rec.writes:
        write_json(rec.path("scheme_comparison.json"), report)
    return report


# ----------------------------------------------------------------- metrics check

def run_metrics_check(cfg: ExperimentConfig, record: RunRecord | None = None) -> mt.InequalityReport:
    """Closed-form identities plus the comparison inequalities on random pairs."""
    rec = _record(record, cfg, "metrics-check")
    d0 = AtomicMeasure.dirac(0.0)
    ident = 0.0
    for c in (0.5, 1.0, 2.0, 3.0, 10.0):
        dc = AtomicMeasure.dirac(c)
        ident = max(ident, abs(mt.bl_distance(d0, dc) - min(c, 2.0)))
        for p in cfg.p_list:
            ident = max(ident, abs(mt.wasserstein_p_1d(d0, dc, p) - c))
    rec.check("closed_form_identities", ident <= 1e-9, ident)
    R = cfg.metric_radius
    samples = ((cfg.seed + i, *mt.random_pair(cfg.seed + i, R)) for i in range(cfg.pairs))
    report = mt.check_metric_inequalities(samples, R, tuple(cfg.p_list))
    rec.check("inequalities", report.passed, report.max_violation)
    if rec.writes:
        report.write(rec.path("metrics_report.json"))
    return report


# ----------------------------------------------------------------- weak form

@dataclass(frozen=True)
class TestFunction:
    name: str
    f: object
    df: object


def _bump(c: float, width: float) -> TestFunction:
    def f(x):
        r = (x - c) / width
        inside = np.abs(r) < 1
        s = np.where(inside, r, 0.0)
        return np.where(inside, np.exp(-1.0 / (1.0 - s * s)), 0.0)

    def df(x):
        r = (x - c) / width
        inside = np.abs(r) < 1
        s = np.where(inside, r, 0.0)
        return np.where(inside, np.exp(-1.0 / (1.0 - s * s)) * (-2.0 * s / (1.0 - s * s) ** 2) / width, 0.0)

    return TestFunction(f"bump({c},{width})", f, df)


def default_test_functions() -> list:
    """Constant, two monomials, a cosine and three smooth bumps."""
    return [
        TestFunction("one", np.ones_like, np.zeros_like),
        TestFunction("x", lambda x: x, np.ones_like),
        TestFunction("x^2", lambda x: x * x, lambda x: 2.0 * x),
        TestFunction("cos(pi x)", lambda x: np.cos(np.pi * x), lambda x: -np.pi * np.sin(np.pi * x)),
    ] + [_bump(c, 0.3) for c in (0.25, 0.5, 0.75)]


@dataclass
class WeakResidualReport:
    max_residual: float
    per_function: dict
    h: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.bound


def weak_form_residual(traj: micro.Trajectory, kernel, source, test_functions=None,
                       C: float = WEAK_RESIDUAL_C) -> WeakResidualReport:
    """Defect of ``d/dt int f dmu = int V[mu] f' dmu + int f dh[mu]`` along a 1-D run.

    The derivative is a central difference over consecutive samples, which
    must be equally spaced by ``h``. The run passes when the largest defect
    is at most ``C (h^2 + dt^4)`` with ``dt`` the integrator step.
    """
    fams = test_functions or default_test_functions()
    t = traj.times
    h = float(t[1] - t[0]) if len(t) > 1 else 0.0
    if len(t) < 3 or np.max(np.abs(np.diff(t) - h)) > 1e-9 * max(h, 1.0):
        raise ValueError("weak residual needs at least three equally spaced samples")
    if traj.states[0].dim != 1:
        raise ValueError("weak residual is implemented for d = 1")
    rhs = micro.make_rhs(kernel, source)
    X = traj.positions[:, :, 0]
    M = traj.states[0].M
    W = traj.weights / M
    worst = {tf.name: 0.0 for tf in fams}
    for n in range(1, len(t) - 1):
        v, mdot = rhs(X[n][:, None], traj.weights[n], M)
        for tf in fams:
            lhs = (W[n + 1] @ tf.f(X[n + 1]) - W[n - 1] @ tf.f(X[n - 1])) / (2.0 * h)
            r = W[n] @ (tf.df(X[n]) * v[:, 0]) + (mdot / M) @ tf.f(X[n])
            worst[tf.name] = max(worst[tf.name], abs(lhs - r))
    dt = traj.meta.get("dt", h)
    return WeakResidualReport(max(worst.values()), worst, h, C * (h * h + dt**4))


def weak_residual_study(cfg: ExperimentConfig, N: int = 50, T: float = 1.0,
                        intervals=(2e-3, 1e-3, 5e-4)) -> dict:
    """Residuals for a sequence of sampling intervals (integrator step = interval)."""
    phi, S = cfg.kernels()
    res = []
    for h in intervals:
        traj = micro_trajectory(cfg, N, T=T, dt=h)
        res.append(weak_form_residual(traj, phi, S))
    orders = [math.log(a.max_residual / b.max_residual) / math.log(ha / hb)
              for a, b, ha, hb in zip(res, res[1:], intervals, intervals[1:])]
    return {"intervals": list(intervals), "reports": res, "orders": orders}
