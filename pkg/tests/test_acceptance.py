"""Acceptance criteria, one test each, at the stated tolerances and time limits."""
import time

import numpy as np

from weightflow import kernels as K
from weightflow import macroscheme as ms
from weightflow import metrics as mt
from weightflow import micro, presets
from weightflow.harness import experiments as ex
from weightflow.harness.config import ExperimentConfig
from weightflow.measures import ParticleState, atomic_from_grid, grid_from_density

from conftest import preset_state


def _failed(rec):
    return {k: rec.checks[k]["detail"] for k in rec.failures}


def test_criterion_1_conservation(criterion):
    cfg = ExperimentConfig(N_list=[50], T=5.0, dt=1e-3, integrator="rk4")
    rec = ex._record(None, cfg, "micro")
    t0 = time.perf_counter()
    summ = ex.run_micro(cfg, rec)[50]
    secs = time.perf_counter() - t0
    ok = not rec.failures and secs < 10
    criterion(1, ok, f"mass drift {summ['mass_drift_max']:.2e}, min weight {summ['min_weight']:.3g}, "
                     f"growth ratio {summ['max_weight_ratio_vs_bound']:.3g}, failed {_failed(rec)}", secs)


def test_criterion_2_two_atom_example(criterion):
    cfg = ExperimentConfig(preset="appendixB", N_list=[2], dt_list=[0.1, 0.01], steps=2)
    rec = ex._record(None, cfg, "scheme-compare")
    t0 = time.perf_counter()
    ex.run_scheme_comparison(cfg, rec)
    secs = time.perf_counter() - t0
    ok = not rec.failures and len(rec.checks) > 0 and secs < 1
    criterion(2, ok, f"{len(rec.checks)} checks, failed {_failed(rec)}", secs)


def test_criterion_3_scheme_structure(criterion):
    cfg = ExperimentConfig(G=400, T=10.0, courant=0.5)
    rec = ex._record(None, cfg, "macro")
    t0 = time.perf_counter()
    run = ex.run_macro(cfg, rec)
    secs = time.perf_counter() - t0
    dt_S = run.meta["dt"] * run.meta["S_bar"]
    ok = not rec.failures and dt_S <= 0.5 and secs < 60
    criterion(3, ok, f"k={run.meta['k']}, dt*S_bar={dt_S:.3f}, {len(run.diagnostics)} samples, "
                     f"failed {_failed(rec)}", secs)


def test_criterion_4_metric_identities(criterion):
    cfg = ExperimentConfig(pairs=100, metric_radius=1.0, p_list=[1, 2, 3])
    rec = ex._record(None, cfg, "metrics-check")
    t0 = time.perf_counter()
    report = ex.run_metrics_check(cfg, rec)
    secs = time.perf_counter() - t0
    ok = not rec.failures and report.pairs == 100 and report.max_violation <= 1e-10 and secs < 30
    criterion(4, ok, f"{report.pairs} pairs, max violation {report.max_violation:.2e}, "
                     f"failed {_failed(rec)}", secs)


def test_criterion_5_mean_field_convergence(criterion):
    cfg = ExperimentConfig(N_list=[20, 50, 100, 200], G=400, T=10.0)
    rec = ex._record(None, cfg, "converge")
    t0 = time.perf_counter()
    table = ex.run_convergence_study(cfg, rec)
    secs = time.perf_counter() - t0
    bad = []
    for t in cfg.times():
        for m in ("BL", "W1"):
            d20, d200 = table.value(20, t, m), table.value(200, t, m)
            slope = ex.fit_slope(cfg.N_list, [table.value(N, t, m) for N in cfg.N_list])
            if not (d200 < d20 and slope <= -0.3):
                bad.append((m, t, d20, d200, slope))
    slopes = {k: round(v, 2) for k, v in table.slopes.items() if not k.startswith("W2")}
    ok = not bad and secs < 600
    criterion(5, ok, f"slopes {slopes}, violations {bad}", secs)


def test_criterion_6_cluster_reproduction(criterion):
    cfg = ExperimentConfig(N_list=[20, 50, 100], T=10.0)
    rec = ex._record(None, cfg, "clusters")
    t0 = time.perf_counter()
    res = ex.run_paper_experiment(cfg, rec)
    secs = time.perf_counter() - t0
    want = list(presets.CLUSTER_CENTERS)
    found = {N: [round(c.center, 3) for c in cl] for N, cl in res.clusters.items()}
    ok = secs < 120
    for N, cl in res.clusters.items():
        centers = [c.center for c in cl]
        ok = ok and len(cl) == 4 and ex.match_centers(centers, want, 0.03) <= 0.03
    ok = ok and len({len(cl) for cl in res.clusters.values()}) == 1
    criterion(6, ok, f"centers {found}", secs)


def test_criterion_7_weak_residual(criterion):
    cfg = ExperimentConfig()
    t0 = time.perf_counter()
    study = ex.weak_residual_study(cfg, N=50, T=1.0, intervals=(2e-3, 1e-3, 5e-4))
    secs = time.perf_counter() - t0
    at_1e3 = study["reports"][1].max_residual
    orders = study["orders"]
    ok = at_1e3 <= 1e-4 and min(orders) >= 1.8
    criterion(7, ok, f"residual {at_1e3:.2e} at interval 1e-3, orders {[round(o, 2) for o in orders]}", secs)


def test_criterion_8_oracle_equivalences(criterion):
    phi = K.kernel_sin2(presets.RADIUS)
    S = K.source_m1(phi, presets.BETA)
    t0 = time.perf_counter()
    micro_gap = 0.0
    rng = np.random.default_rng(8)
    states = [preset_state(N) for N in (1, 2, 20, 50)]
    for N in (3, 17, 50):
        m = rng.random(N) + 0.05
        states.append(ParticleState(rng.random(N), m, m.sum()))
    for s in states:
        a = micro.weight_rhs_naive(s, S)
        b = micro.weight_rhs_m1_factored(s, S)
        micro_gap = max(micro_gap, np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300))
    g = grid_from_density(presets.two_gaussian, None, (0.0, 1.0), 32)
    a = ms.source_eval(g, S, method="naive").mass
    b = ms.source_eval(g, S, method="factored").mass
    grid_gap = np.max(np.abs(a - b)) / np.max(np.abs(a))

    T, G = 1.0, 400
    mu0 = grid_from_density(presets.two_gaussian, None, (0.0, 1.0), G)
    ts = T * np.arange(17) / 16
    runs = {k: ms.run_scheme(ms.SchemeConfig(phi, S, k=k, T=T, cells=G), mu0, sample_times=ts)
            for k in range(6, 12)}
    sup = [max(mt.bl_distance(atomic_from_grid(p), atomic_from_grid(q))
               for p, q in zip(runs[k].measures, runs[k + 1].measures)) for k in range(6, 11)]
    ratios = [a / b for a, b in zip(sup, sup[1:])]
    secs = time.perf_counter() - t0
    ok = micro_gap <= 1e-12 and grid_gap <= 1e-12 and all(1.5 <= r <= 2.5 for r in ratios)
    criterion(8, ok, f"micro rel gap {micro_gap:.1e}, grid rel gap {grid_gap:.1e}, "
                     f"halving ratios {[round(r, 3) for r in ratios]}", secs)


def test_criterion_9_indistinguishability(criterion):
    phi = K.kernel_sin2(presets.RADIUS)
    S = K.source_m1(phi, presets.BETA)
    t0 = time.perf_counter()
    cfg4 = micro.MicroConfig(phi, S, 4, 4.0, 1e-3, 1.0)
    split = micro.indistinguishability_check(cfg4, [0.2, 0.2, 0.35, 0.5], [1.0, 1.0, 1.0, 1.0],
                                             [1.7, 0.3, 1.0, 1.0], {0, 1}, tol=1e-8)
    cfg5 = micro.MicroConfig(phi, S, 5, 5.0, 1e-3, 1.0)
    merge = micro.indistinguishability_check(cfg5, [0.3, 0.45, 0.45, 0.45, 0.6], [1.0] * 5,
                                             [1.0, 2.8, 0.1, 0.1, 1.0], {1, 2, 3}, tol=1e-8)
    s = preset_state(20)
    perm = np.random.default_rng(9).permutation(20)
    gap = micro.permutation_check(micro.MicroConfig(phi, S, 20, s.M, 1e-3, 1.0), s, perm)
    secs = time.perf_counter() - t0
    ok = split.passed and merge.passed and gap <= 1e-8
    criterion(9, ok, f"split gaps {split.position_gap:.1e}/{split.group_sum_gap:.1e}, "
                     f"merge gaps {merge.position_gap:.1e}/{merge.group_sum_gap:.1e}, "
                     f"permutation gap {gap:.1e}", secs)
