"""Acceptance gate: one test per criterion, at the stated tolerance.

The terminal summary (see conftest) prints one PASS/FAIL line per criterion.
"""
import json
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

import corpus
from binsweep import (AcceptanceRule, QuadraticModel, SweepKernel, accept_prob,
                      check_ergodic, check_tie_condition, stationary_residual,
                      sweep_matrix, verify_induction_step)
from binsweep.cli import counterexample_setup
from binsweep.ergodicity import CLOSED_MASS_TOL
from binsweep.kernels import ALL_RULES
from binsweep.model import complement, flip
from binsweep.proofgraph import check_subsets, exhaustive_masks
from binsweep.rng import make_rng
from binsweep.sim import detect_period, parse_grid, run_chain

GOLDENS = Path(__file__).parent / "goldens"


def test_criterion_01_standard_rule_reducible_on_periodic_lattice():
    for J in corpus.J_GRID:
        for order in ("chessboard", "linear"):
            k = SweepKernel.build(corpus.ising(True, J), "standard", order)
            T, sr, erg = corpus.analysis(k)
            assert abs(sr.gap) <= 1e-9, (J, order, sr.gap)
            w = erg.closed_set_witness
            assert w is not None and 0 < len(w) < T.entries.shape[0], (J, order)
            mass = T.entries[np.ix_(w, w)].sum(axis=1)
            assert np.max(np.abs(mass - 1.0)) <= CLOSED_MASS_TOL
    print(f"checked {len(corpus.J_GRID)} J values x 2 orders")


def test_criterion_02_modified_rule_ergodic_with_positive_gap():
    failures = []
    n_lattice = 0
    for periodic in (True, False):
        for J in (0.0,) + corpus.J_GRID:
            for order in ("linear", "chessboard"):
                k = SweepKernel.build(corpus.ising(periodic, J), "modified", order)
                _, sr, erg = corpus.analysis(k)
                n_lattice += 1
                if not (erg.ergodic and sr.gap > 0):
                    failures.append((periodic, J, order, sr.gap, erg.to_json()))
    models = corpus.small_models()
    tied = sum(not check_tie_condition(m).tie_free for m in models)
    assert len(models) >= 200 and tied >= 50
    n_small = 0
    for m in models:
        for order in corpus.shifts(m.n):
            _, sr, erg = corpus.analysis(SweepKernel(m, AcceptanceRule.modified(), order))
            n_small += 1
            if not (erg.ergodic and sr.gap > 0):
                failures.append((repr(m), order.sites, sr.gap))
    print(f"lattice kernels {n_lattice}, small kernels {n_small} "
          f"({len(models)} models, {tied} with ties), failures {len(failures)}")
    assert not failures, failures[:5]


@pytest.mark.parametrize("periodic", [True, False])
def test_criterion_03_zero_coupling_mixes_in_one_sweep(periodic):
    for rule in ("gibbs", "modified"):
        for order in ("linear", "chessboard"):
            T, sr, _ = corpus.analysis(SweepKernel.build(corpus.ising(periodic, 0.0), rule, order))
            E = T.entries
            assert np.max(np.abs(E - 1.0 / E.shape[0])) <= 1e-15
            assert abs(sr.gap - 1.0) <= 1e-9, (rule, order, sr.gap)


@pytest.mark.parametrize("name", ["chessboard-stripes", "linear-triangle"])
def test_criterion_04_locking_trajectories_match_goldens(name):
    g = json.loads((GOLDENS / f"{name.replace('-', '_')}_4x4.json").read_text())
    kernel, x0 = counterexample_setup(name, g["rows"], g["cols"], g["J"], g["periodic_lattice"])
    assert list(kernel.order.sites) == g["order"] and x0 == g["start"]
    traj, _ = run_chain(kernel, g["sweeps"], burn_in=0, seed=g["seed"], start=x0,
                        record_substeps=True)
    assert traj.states.tolist() == g["states"]
    assert traj.substeps.tolist() == g["substeps"]
    panels = [parse_grid(p)[0] for p in g["panels"]]
    phases = traj.phase_states()
    assert phases == [panels[k % len(panels)] for k in range(len(phases))]
    assert detect_period(traj.full()) == 2
    assert len(set(traj.full().tolist())) == 2
    assert len(set(phases)) == len(panels)


def test_criterion_05_tie_free_models_make_both_rules_identical():
    rng = make_rng(77)
    worst = 0.0
    for k in range(100):
        m = QuadraticModel.random(1 + k % 4, rng, scale=1.0, bias_scale=1.0)
        assert check_tie_condition(m).tie_free
        Ts = sweep_matrix(SweepKernel.build(m, "standard")).entries
        Tm = sweep_matrix(SweepKernel.build(m, "modified")).entries
        worst = max(worst, float(np.max(np.abs(Ts - Tm))))
        assert check_ergodic(SweepKernel.build(m, "standard")).ergodic
    print(f"max |T_standard - T_modified| = {worst:.3e}")
    assert worst <= 1e-15


def test_criterion_06_stationarity_and_detailed_balance():
    kernels = [k for k in corpus.full_corpus() if k.model.n <= 9]
    worst_res = 0.0
    for k in kernels:
        T, _, _ = corpus.analysis(k)
        worst_res = max(worst_res, stationary_residual(T, k.model))
    worst_db = 0.0
    seen = set()
    for k in kernels:
        key = (id(k.model), k.rule.code)
        if key in seen:
            continue
        seen.add(key)
        p = k.model.probabilities()
        states = np.arange(p.size)
        for i in range(1, k.model.n + 1):
            fwd = accept_prob(k.rule, k.model.site_delta_logp(i))
            y = states ^ (1 << (i - 1))
            worst_db = max(worst_db, float(np.max(np.abs(p * fwd - p[y] * fwd[y]))))
    print(f"{len(kernels)} kernels: stationary residual {worst_res:.2e}, "
          f"detailed balance {worst_db:.2e}")
    assert worst_res <= 1e-10 and worst_db <= 1e-10


def _induction_pairs(n, count, rng):
    N = 1 << n
    pairs = []
    for t in range(count):
        x = int(rng.integers(N))
        kind = t % 3
        others = [y for y in range(N) if y != x]
        if kind < 2:
            # case 1: no single-flip neighbour of x' in S
            banned = {flip(x, i, n) for i in range(1, n + 1)} | {x, complement(x, n)}
            pool = [y for y in range(N) if y not in banned]
            S = {y for y in pool if rng.random() < 0.5}
            if kind == 0 or not S:
                S.add(complement(x, n))
        else:
            S = {y for y in others if rng.random() < 0.5} or {others[0]}
            S.add(flip(x, int(rng.integers(1, n + 1)), n))
        pairs.append((S, x))
    return pairs


def test_criterion_07_proof_graph_exhaustion_and_induction():
    t0 = time.perf_counter()
    for n, total in ((3, 254), (4, 65534)):
        bal, bal_set, cyc = check_subsets(exhaustive_masks(n), n)
        assert bal.size == total and bal.all() and cyc.all(), n
        print(f"n={n}: {total} subsets, balanced {bal.sum()}, cyclic {cyc.sum()}, "
              f"balanced as plain sets {bal_set.sum()}")
    elapsed = time.perf_counter() - t0
    assert elapsed < 120

    tally = Counter()
    for S, x in _induction_pairs(5, 1000, make_rng(5)):
        rep = verify_induction_step(S, x, 5)
        assert rep.agrees, (sorted(S), x, rep)
        if rep.case == 2:
            assert rep.reverse_pairing and rep.removals_contained, (sorted(S), x)
            tally["case2"] += 1
        else:
            tally["case1_complement_in" if rep.complement_in_subset else "case1_complement_out"] += 1
            tally[f"subsumed_{rep.complement_subsumed}"] += 1
    print(dict(tally), f"exhaustion {elapsed:.1f}s")
    assert tally["case1_complement_in"] and tally["case1_complement_out"] and tally["case2"]
    assert sum(v for k, v in tally.items() if k.startswith("case")) == 1000


def test_criterion_08_gap_threshold_matches_ergodicity():
    # literal threshold; the analysis of its failures is kept in the notes
    bad = []
    for k in corpus.full_corpus():
        _, sr, erg = corpus.analysis(k)
        if (sr.gap > 1e-9) != erg.ergodic:
            bad.append((repr(k.model), k.rule.name, k.order.name, sr.gap, erg.ergodic))
    print(f"{len(corpus.full_corpus())} kernels, {len(bad)} disagreements")
    for row in bad:
        print("  ", row)
    assert not bad


def test_criterion_08b_positive_gap_matches_ergodicity():
    bad = []
    for k in corpus.full_corpus():
        _, sr, erg = corpus.analysis(k)
        if (sr.gap > 0) != erg.ergodic:
            bad.append((repr(k.model), k.rule.name, k.order.name, sr.gap, erg.ergodic))
    assert not bad, bad[:5]


def test_criterion_09_rule_ranking_changes_with_coupling():
    best = {}
    for J in corpus.J_GRID:
        gaps = {r: corpus.analysis(SweepKernel.build(corpus.ising(False, J), r, "linear"))[1].gap
                for r in ALL_RULES}
        best[J] = max(gaps, key=gaps.get)
    print(best)
    lows = [J for J, r in best.items() if r == "gibbs"]
    mids = [J for J, r in best.items() if r == "modified"]
    highs = [J for J, r in best.items() if r == "standard"]
    assert any(a < b < c for a in lows for b in mids for c in highs)


def test_criterion_10_sampling_matches_exact_distribution():
    k = SweepKernel.build(corpus.ising(True, 0.5), "modified", "linear")
    _, summary = run_chain(k, 1_000_000, seed=1)
    print(f"TV = {summary.tv_distance:.5f}")
    assert summary.tv_distance < 0.01
