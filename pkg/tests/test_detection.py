import json
import math

import networkx as nx
import numpy as np
import pytest
from conftest import cycle, from_nx

from powerlab.config import ExperimentConfig
from powerlab.detection import (
    CSV_COLUMNS,
    NULL,
    STRUCTURED,
    calibrate_threshold,
    cycle_count_test,
    decide,
    nb_test,
    overlap,
    powered_test,
    recover_communities,
    run_distinguish_experiment,
    run_trial,
)
from powerlab.graph import Graph, build_graph
from powerlab.models import ModelParams, apply_perturbation, gen_adversary_clique, gen_er, gen_rr, gen_rsbm, gen_sbm
from powerlab.seeding import derive_seed


def relabel(g: Graph, perm) -> Graph:
    perm = np.asarray(perm)
    edges = [(int(perm[u]), int(perm[v])) for u, v in g.edges()]
    labels = None
    if g.labels is not None:
        labels = np.empty_like(g.labels)
        labels[perm] = g.labels
    return build_graph(g.n, edges, labels)


# ---------------------------------------------------------------------------
# Exact cases


def test_decide_is_strict():
    assert decide(1.0, 1.0) == NULL
    assert decide(1.0 + 1e-12, 1.0) == STRUCTURED


def test_k4_triangles():
    out = cycle_count_test(from_nx(nx.complete_graph(4)), 3, threshold=10)
    assert out.statistic == 4
    assert out.decision == NULL
    assert out.method == "cycle_count" and out.r_or_m == 3


def test_cycle_eight_counts_itself():
    assert cycle_count_test(cycle(8), 8, threshold=0.5).statistic == 1


def test_cycle_length_guard():
    with pytest.raises(ValueError):
        cycle_count_test(cycle(8), 2, threshold=0)


def test_two_cliques_recovered_exactly():
    k = 8
    edges = [(u, v) for base in (0, k) for u in range(base, base + k) for v in range(u + 1, base + k)]
    edges.append((0, k))
    truth = np.array([1] * k + [2] * k, dtype=np.int8)
    labels, rep = recover_communities(build_graph(2 * k, edges, truth), 1)
    assert rep.overlap == 1.0
    assert rep.n_classified == 2 * k
    assert set(labels.tolist()) == {1, 2}


def test_recover_without_truth():
    labels, rep = recover_communities(cycle(12), 1)
    assert rep is None
    assert labels.shape == (12,)


def test_overlap_takes_best_flip():
    truth = np.array([1, 1, 2, 2])
    assert overlap([2, 2, 1, 1], truth) == 1.0
    assert overlap([1, 2, 1, 2], truth) == 0.5
    assert overlap([1, 1, 1, 2], truth) == 0.75


def test_overlap_empty():
    with pytest.raises(ValueError):
        overlap([], [])


def test_outcome_invariant():
    g = gen_er(300, 6, seed=3)
    for thr in (0.0, 1e9):
        out = powered_test(g, 2, thr)
        assert (out.decision == STRUCTURED) == (out.statistic > out.threshold)


def test_nb_test_threshold_is_factor():
    out = nb_test(gen_er(400, 8, seed=1), 1.2)
    assert out.threshold == 1.2 and out.method == "nonbacktracking"
    assert (out.decision == STRUCTURED) == (out.statistic > 1.2)


# ---------------------------------------------------------------------------
# Invariances


def test_statistics_are_label_blind():
    g = gen_sbm(600, 12, 2, seed=4)
    flipped = Graph(g.n, g.indptr, g.indices, 3 - g.labels)
    for fn in (lambda h: powered_test(h, 2, 0).statistic, lambda h: cycle_count_test(h, 4, 0).statistic):
        assert fn(g) == fn(flipped)
    assert math.isclose(nb_test(g).statistic, nb_test(flipped).statistic, rel_tol=1e-9)


def test_overlap_invariant_under_flip_and_permutation():
    g = gen_sbm(800, 16, 2, seed=5)
    _, base = recover_communities(g, 2)
    _, flipped = recover_communities(Graph(g.n, g.indptr, g.indices, 3 - g.labels), 2)
    perm = np.random.default_rng(0).permutation(g.n)
    _, permuted = recover_communities(relabel(g, perm), 2)
    assert base.overlap == flipped.overlap
    assert abs(base.overlap - permuted.overlap) < 1e-12
    assert base.overlap >= 0.5


# ---------------------------------------------------------------------------
# Calibration


def test_calibration_validates():
    params = ModelParams("ER", 200, d=5)
    with pytest.raises(ValueError):
        calibrate_threshold(params, 2, trials=5)
    with pytest.raises(ValueError):
        calibrate_threshold(params, 2, trials=10, quantile=1.0)


def test_calibration_deterministic_and_monotone():
    params = ModelParams("ER", 500, d=8)
    lo = calibrate_threshold(params, 2, trials=12, quantile=0.5, seed=9)
    hi = calibrate_threshold(params, 2, trials=12, quantile=0.95, seed=9)
    assert 0 < lo <= hi < math.inf
    assert hi == calibrate_threshold(params, 2, trials=12, quantile=0.95, seed=9)


@pytest.mark.slow
def test_calibration_er_2000():
    thr = calibrate_threshold(ModelParams("ER", 2000, d=13), 3, trials=50, seed=1)
    assert 0 < thr < math.inf


@pytest.mark.slow
@pytest.mark.parametrize("d", [3, 4])
def test_calibration_rr_band(d):
    r = 3
    thr = calibrate_threshold(ModelParams("RR", 2000, d=d), r, trials=10, seed=2)
    target = (r + 1) * math.sqrt(d) ** r
    assert 0.5 * target <= thr <= 1.5 * target


@pytest.mark.slow
def test_dense_rr_cube_falls_below_band():
    # at d = 13 the radius-3 balls cover most of the 2000 vertices, so the
    # cube is close to complete and its second eigenvalue collapses
    g = gen_rr(2000, 13, seed=5)
    h = nx.Graph(g.edges().tolist())
    M = np.eye(g.n)
    for u, dist in nx.all_pairs_shortest_path_length(h, cutoff=3):
        M[u, list(dist)] = 1
    want = np.linalg.eigvalsh(M)[-2]
    assert math.isclose(powered_test(g, 3, 0).statistic, want, rel_tol=1e-9)
    assert want < 0.5 * 4 * math.sqrt(13) ** 3


# ---------------------------------------------------------------------------
# Monte Carlo behaviour at n = 4000 (the acceptance suite covers the full experiments)

SEEDS = range(20)


@pytest.fixture(scope="module")
def er_threshold():
    return calibrate_threshold(ModelParams("ER", 4000, d=13), 3, trials=20, seed=11)


@pytest.fixture(scope="module")
def er_clique_threshold():
    return calibrate_threshold(ModelParams("ER", 4000, d=13), 3, trials=20, seed=12, c=30, adversary="targeted")


@pytest.mark.slow
def test_sbm_powered_structured(er_threshold):
    outs = [powered_test(gen_sbm(4000, 21, 5, seed=s), 3, er_threshold) for s in SEEDS]
    assert all(256 <= o.statistic <= 1024 for o in outs)
    assert sum(o.decision == STRUCTURED for o in outs) >= 18


@pytest.mark.slow
def test_er_powered_null(er_threshold):
    outs = [powered_test(gen_er(4000, 13, seed=100 + s), 3, er_threshold) for s in SEEDS]
    assert sum(o.decision == NULL for o in outs) >= 18


@pytest.mark.slow
def test_er_clique_powered_null(er_clique_threshold):
    hits = 0
    for s in SEEDS:
        g = gen_er(4000, 13, seed=200 + s)
        g = apply_perturbation(g, gen_adversary_clique(g, 30, seed=s, mode="targeted"))
        hits += powered_test(g, 3, er_clique_threshold).decision == NULL
    assert hits >= 16


@pytest.mark.slow
def test_nb_statistics():
    er = [nb_test(gen_er(4000, 13, seed=300 + s)) for s in range(10)]
    assert all(abs(o.statistic - 1) < 0.2 for o in er)
    assert sum(o.decision == NULL for o in er) >= 9
    sbm = nb_test(gen_sbm(4000, 21, 5, seed=1))
    assert abs(sbm.statistic - 8 / math.sqrt(13)) < 0.3
    assert sbm.decision == STRUCTURED


@pytest.mark.slow
def test_nb_fragile_under_clique():
    hits = 0
    for s in range(10):
        g = gen_er(4000, 13, seed=400 + s)
        g = apply_perturbation(g, gen_adversary_clique(g, 30, seed=s, mode="targeted"))
        hits += nb_test(g).decision == STRUCTURED
    assert hits >= 8


@pytest.mark.slow
def test_cycle_count_inflated_by_clique():
    g = gen_er(4000, 13, seed=7)
    base = cycle_count_test(g, 5, 0).statistic
    h = apply_perturbation(g, gen_adversary_clique(g, 30, seed=7, mode="targeted"))
    assert cycle_count_test(h, 5, 0).statistic - base > math.comb(30, 5) * 12 / 2


@pytest.mark.slow
def test_recovery_rsbm():
    good = sum(recover_communities(gen_rsbm(2000, 8, 2, seed=s), 2)[1].overlap >= 0.7 for s in SEEDS)
    assert good >= 16


@pytest.mark.slow
def test_recovery_sbm_and_growth_in_r():
    good = 0
    for s in range(10):
        g = gen_sbm(4000, 21, 5, seed=500 + s)
        good += recover_communities(g, 3)[1].overlap >= 0.6
        s2, s3 = powered_test(g, 2, 0).statistic, powered_test(g, 3, 0).statistic
        assert 0.5 * 8 <= s3 / s2 <= 2 * 8
    assert good >= 8


# ---------------------------------------------------------------------------
# Experiment harness


def small_config(**kw):
    base = dict(n=400, a=14, b=2, r=2, trials=6, calibration_trials=10, master_seed=5, threads=1, cycle_m=4)
    base.update(kw)
    return ExperimentConfig(**base)


def test_experiment_rows_and_summary(tmp_path):
    cfg = small_config(output=str(tmp_path / "out.csv"), json_output=str(tmp_path / "out.json"))
    rep = run_distinguish_experiment(cfg)
    assert len(rep.rows) == cfg.trials * len(cfg.methods)
    assert not rep.errors
    for row in rep.rows:
        assert (row["decision"] == STRUCTURED) == (row["statistic"] > row["threshold"])
        assert row["correct"] == (row["decision"] == row["truth"])
        assert row["wall_ms"] is None
        assert row["seed"] == derive_seed(cfg.master_seed, 0, row["trial"])
    text = (tmp_path / "out.csv").read_text()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert text == rep.to_csv()
    summary = rep.summary()
    assert set(summary) == set(cfg.methods)
    assert all(0 <= s["accuracy"] <= 1 for s in summary.values())


def test_experiment_deterministic_across_threads():
    a = run_distinguish_experiment(small_config(threads=1), write=False)
    b = run_distinguish_experiment(small_config(threads=2), write=False)
    assert a.to_csv() == b.to_csv()


def test_trial_replay_from_seed():
    cfg = small_config()
    thresholds = {"powered": 50.0, "nonbacktracking": 1.2, "cycle_count": 1e4}
    rows = run_trial(cfg, 3, thresholds)
    again = run_trial(cfg.model_copy(update={"master_seed": 999}), 3, thresholds, seed=rows[0]["seed"])
    assert rows == again


def test_overlap_recorded_for_labelled_graphs():
    rep = run_distinguish_experiment(small_config(methods=("powered",)), write=False)
    for row in rep.rows:
        assert (row["overlap"] is None) == (row["truth"] == NULL)


def test_timing_column_opt_in():
    rep = run_distinguish_experiment(small_config(methods=("nonbacktracking",), record_timing=True), write=False)
    assert all(row["wall_ms"] >= 0 for row in rep.rows)


def test_json_echo_replays(tmp_path):
    cfg = small_config(methods=("nonbacktracking",))
    rep = run_distinguish_experiment(cfg, write=False)
    echoed = json.loads(rep.to_json())["config"]
    again = run_distinguish_experiment(ExperimentConfig(**echoed, threads=1), write=False)
    assert again.to_csv() == rep.to_csv()
