import os
import subprocess
import sys

import numpy as np
import pytest

import binsweep.sim as sim
from binsweep import (InvalidInputError, IsingLattice, SweepKernel, SweepOrder, TableModel,
                      sweep_matrix)
from binsweep.sim import (EmpiricalSummary, detect_period, empirical_transitions,
                          horizontal_stripes, parse_grid, render_grid, run_chain, start_state,
                          triangle, tv_distance)


def _kernel(J=0.5, periodic=True, rule="modified", order="linear"):
    return SweepKernel.build(IsingLattice(3, 3, periodic, J), rule, order)


def test_seed_determinism():
    k = _kernel()
    a, _ = run_chain(k, 500, seed=7, record_substeps=True)
    b, _ = run_chain(k, 500, seed=7, record_substeps=True)
    c, _ = run_chain(k, 500, seed=8)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.substeps, b.substeps)
    assert not np.array_equal(a.states, c.states)


def test_chunking_does_not_change_the_stream(monkeypatch):
    k = _kernel(rule="gibbs")
    ref, _ = run_chain(k, 1000, seed=2)
    monkeypatch.setattr(sim, "CHUNK", 37)
    again, _ = run_chain(k, 1000, seed=2)
    assert np.array_equal(ref.states, again.states)


def test_fallback_path_gives_identical_trajectories():
    k = _kernel(rule="standard", order="chessboard")
    a, sa = run_chain(k, 300, seed=4, record_substeps=True, use_numba=True)
    b, sb = run_chain(k, 300, seed=4, record_substeps=True, use_numba=False)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.substeps, b.substeps)
    assert sa.counts == sb.counts


def test_env_flag_selects_pure_python():
    code = ("import binsweep._accel as a, binsweep.kernels as k;"
            "print(a.USE_NUMBA, hasattr(k._run_sweeps, 'py_func'));"
            "from binsweep import SweepKernel, IsingLattice; from binsweep.sim import run_chain;"
            "t, _ = run_chain(SweepKernel.build(IsingLattice(3, 3, True, 0.5), 'modified'), 200, seed=11);"
            "print(t.states.tolist())")
    env = dict(os.environ, BINSWEEP_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.splitlines()
    assert out[0] == "False False"
    t, _ = run_chain(_kernel(), 200, seed=11)
    assert out[1] == str(t.states.tolist())


def test_env_flag_exact_analysis_still_works():
    code = ("from binsweep import SweepKernel, IsingLattice, check_ergodic;"
            "from binsweep.proofgraph import check_subsets, exhaustive_masks;"
            "r = check_ergodic(SweepKernel.build(IsingLattice(2, 3, True, 1.0), 'standard'));"
            "b, s, c = check_subsets(exhaustive_masks(3), 3);"
            "print(r.ergodic, r.scc_count, int(b.sum()), int(s.sum()), int(c.sum()))")
    env = dict(os.environ, BINSWEEP_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    from binsweep import check_ergodic
    r = check_ergodic(SweepKernel.build(IsingLattice(2, 3, True, 1.0), "standard"))
    assert out == [str(r.ergodic), str(r.scc_count), "254", "158", "254"]


def test_summary_invariants():
    _, s = run_chain(_kernel(), 1000, seed=1)
    assert s.burn_in == 100 and sum(s.counts.values()) == 900
    _, s = run_chain(_kernel(), 1000, burn_in=0, seed=1)
    assert sum(s.counts.values()) == 1000
    with pytest.raises(InvalidInputError):
        run_chain(_kernel(), 10, burn_in=10)


def test_tv_trivial_cases():
    m = TableModel.from_probabilities([0.25, 0.75])
    assert tv_distance(EmpiricalSummary({0: 1, 1: 3}, 4, 0), m) == pytest.approx(0.0, abs=1e-15)
    u = TableModel.uniform(1)
    assert tv_distance(EmpiricalSummary({1: 10}, 10, 0), u) == pytest.approx(0.5)


def test_gibbs_at_zero_coupling_samples_exactly():
    k = SweepKernel.build(IsingLattice(2, 2, True, 0.0), "gibbs")
    _, s = run_chain(k, 100_000, seed=3)
    assert s.tv_distance < 0.01


def test_gibbs_at_zero_coupling_matches_iid_noise_floor():
    # 512 states: even exact iid draws leave TV near 0.03 at this sample size
    _, s = run_chain(_kernel(J=0.0, rule="gibbs"), 100_000, seed=3)
    rng = np.random.default_rng(0)
    iid = []
    for _ in range(20):
        counts = np.bincount(rng.integers(0, 512, size=90_000), minlength=512)
        iid.append(0.5 * np.abs(counts / 90_000 - 1 / 512).sum())
    assert s.tv_distance < max(iid) * 1.1


def test_trapped_chain_stays_far_from_target():
    m = IsingLattice(2, 2, True, 1.0)
    k = SweepKernel.build(m, "standard", SweepOrder.chessboard(2, 2))
    t, s = run_chain(k, 10_000, seed=5, start=horizontal_stripes(2, 2))
    assert len(s.counts) <= 2 and s.tv_distance > 0.5


def test_tv_shrinks_with_more_sweeps():
    for periodic in (True, False):
        k = _kernel(J=0.5, periodic=periodic)
        short = np.mean([run_chain(k, 1_000, seed=s)[1].tv_distance for s in range(10)])
        long = np.mean([run_chain(k, 1_000_000, seed=s)[1].tv_distance for s in range(10)])
        assert long < short


def test_empirical_transitions_approach_exact_matrix():
    k = SweepKernel.build(TableModel([0.0, 0.3, -0.2, 0.9]), "gibbs")
    t, _ = run_chain(k, 200_000, seed=9)
    assert np.allclose(empirical_transitions(t), sweep_matrix(k).entries, atol=0.01)


def test_stripes_lock_forever_on_torus_but_escape_on_open_lattice():
    m = IsingLattice(4, 4, True, 1.0)
    k = SweepKernel.build(m, "standard", SweepOrder.chessboard(4, 4))
    t, _ = run_chain(k, 1000, seed=0, start=horizontal_stripes(4, 4))
    assert detect_period(t.full()) == 2 and len(set(t.full().tolist())) == 2
    k = SweepKernel.build(IsingLattice(4, 4, False, 0.5), "standard", SweepOrder.chessboard(4, 4))
    t, _ = run_chain(k, 1000, seed=0, start=horizontal_stripes(4, 4))
    assert detect_period(t.full()) is None and len(set(t.full().tolist())) > 2


def test_detect_period():
    assert detect_period([1, 2, 1, 2, 1]) == 2
    assert detect_period([5, 5, 5]) == 1
    assert detect_period([1, 2, 3, 1]) is None


def test_grid_round_trip_and_patterns():
    assert render_grid(horizontal_stripes(2, 3), 2, 3) == "+ + +\n- - -"
    assert render_grid(triangle(3), 3, 3) == "+ + +\n- + +\n- - +"
    x, r, c = parse_grid("+ -\n- +\n+ +")
    assert (r, c) == (3, 2) and render_grid(x, 3, 2) == "+ -\n- +\n+ +"
    with pytest.raises(InvalidInputError):
        parse_grid("+ -\n+")
    with pytest.raises(InvalidInputError):
        parse_grid("+ x")


def test_start_state_parsing():
    m = IsingLattice(2, 2)
    assert start_state("h-stripes", m) == horizontal_stripes(2, 2)
    assert start_state("triangle", m) == triangle(2)
    assert start_state("1000", m) == 1
    assert start_state("5", m) == 5
    with pytest.raises(InvalidInputError):
        start_state("triangle", IsingLattice(2, 3))
    with pytest.raises(InvalidInputError):
        start_state("h-stripes", TableModel.uniform(2))
    with pytest.raises(InvalidInputError):
        start_state("abc", m)


def test_phase_states_need_substeps():
    t, _ = run_chain(_kernel(), 5, burn_in=0)
    with pytest.raises(InvalidInputError):
        t.phase_states()


def test_large_model_has_no_exact_tv():
    k = SweepKernel.build(IsingLattice(4, 4, True, 0.3), "gibbs")
    _, s = run_chain(k, 2000, seed=1)
    assert s.tv_distance is None and sum(s.counts.values()) == 1800
