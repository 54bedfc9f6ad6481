import math

import numpy as np
import pytest

from seedmin.exact import enumerate_realizations, estimator_mean
from seedmin.sampler import SampleSet, extend
from seedmin.selection import (batch_guarantee, compute_params,
                               coverage_lower_bound, coverage_upper_bound,
                               greedy_max_cover, log_comb, select_batch,
                               select_seed)


def test_compute_params_known_values():
    p = compute_params(100, 10, 0.3)
    # closed forms, recomputed here from scratch
    eps_i = 99 * 0.3 / (100 - 0.3)
    delta = 0.3 / (100 * (1 - 1 / math.e) * 0.7 * 10)
    assert p.eps_inner == pytest.approx(eps_i)
    assert p.fail_prob == pytest.approx(delta)
    assert p.batch_factor == 1.0
    assert p.max_iterations == max(1, math.ceil(math.log2(100 / eps_i**2)) + 1)
    assert 1 <= p.initial_samples <= p.max_samples
    assert p.lower_tail_weight == pytest.approx(math.log(3 * p.max_iterations / delta)
                                                + math.log(100))
    assert p.upper_tail_weight == pytest.approx(math.log(3 * p.max_iterations / delta))


def test_compute_params_batch_widens_union_bound():
    single = compute_params(100, 10, 0.3, b=1)
    batch = compute_params(100, 10, 0.3, b=4)
    assert batch.batch_factor == pytest.approx(1 - (3 / 4) ** 4)
    assert batch.lower_tail_weight > single.lower_tail_weight
    # more candidate sets to union over, so the cap can only grow
    assert batch.max_samples >= single.max_samples / 4


def test_compute_params_validation():
    with pytest.raises(ValueError):
        compute_params(10, 0, 0.5)
    with pytest.raises(ValueError):
        compute_params(10, 11, 0.5)
    with pytest.raises(ValueError):
        compute_params(10, 5, 0.0)
    with pytest.raises(ValueError):
        compute_params(10, 5, 1.0)
    with pytest.raises(ValueError):
        compute_params(10, 5, 0.5, b=0)
    with pytest.raises(ValueError):
        compute_params(10, 5, 0.5, b=11)


def test_tail_bounds_bracket_observation():
    a = 5.0
    assert coverage_lower_bound(0, a) == 0.0
    assert coverage_upper_bound(0, a) == 2 * a
    for lam in (1.0, 10.0, 250.0, 1e6):
        lo = coverage_lower_bound(lam, a)
        hi = coverage_upper_bound(lam, a)
        assert lo <= lam <= hi
    # monotone in the observation
    xs = [coverage_lower_bound(x, a) for x in (1, 5, 20, 100)]
    assert xs == sorted(xs)


def test_bounds_stay_valid_after_doubling(diamond):
    # the certificate is recomputed from the grown pool, never carried over;
    # both recomputations must bracket the true expected hit count
    table = enumerate_realizations(diamond)
    p = estimator_mean(diamond, table, [0], 2) / 2
    params = compute_params(diamond.n, 2, 0.3)
    rng = np.random.default_rng(7)
    samples = SampleSet(diamond.n)

    extend(samples, diamond, 2, 256, rng)
    lam1 = int(samples.coverage[0])
    lo1 = coverage_lower_bound(lam1, params.lower_tail_weight)
    hi1 = coverage_upper_bound(lam1, params.upper_tail_weight)
    assert lo1 <= 256 * p <= hi1

    extend(samples, diamond, 2, 512, rng)  # same stream, strict superset
    lam2 = int(samples.coverage[0])
    assert lam2 >= lam1
    lo2 = coverage_lower_bound(lam2, params.lower_tail_weight)
    hi2 = coverage_upper_bound(lam2, params.upper_tail_weight)
    assert lo2 <= 512 * p <= hi2
    assert (lo2, hi2) != (lo1, hi1)
    # relative width shrinks as the pool grows
    assert lo2 / hi2 > lo1 / hi1


def test_log_comb_matches_exact():
    for n, b in [(5, 2), (64, 8), (200, 64), (10**6, 3)]:
        assert log_comb(n, b) == pytest.approx(math.log(math.comb(n, b)), rel=1e-9)
    assert log_comb(7, 0) == 0.0


def test_batch_guarantee_endpoints():
    assert batch_guarantee(1) == 1.0
    assert batch_guarantee(2) == pytest.approx(0.75)
    assert batch_guarantee(10**6) == pytest.approx(1 - 1 / math.e, rel=1e-5)


def _sample_set(n, sets):
    ss = SampleSet(n)
    for nodes in sets:
        ss._add(np.asarray(nodes, dtype=np.int64), 1, 0)
    return ss


def test_greedy_max_cover_hand_instance():
    # node 0 covers three sets but 1+2 together cover all five
    ss = _sample_set(4, [[0, 1], [0, 2], [0], [1], [2]])
    picked, covered = greedy_max_cover(ss, 2)
    assert list(picked) == [0, 1] and covered == 4
    picked, covered = greedy_max_cover(ss, 3)
    assert list(picked) == [0, 1, 2] and covered == 5


def test_greedy_max_cover_tie_breaks_to_smallest_id():
    ss = _sample_set(3, [[1, 2], [1, 2]])
    picked, covered = greedy_max_cover(ss, 1)
    assert list(picked) == [1] and covered == 2
    # nothing left to cover: remaining picks are smallest unselected ids
    picked, covered = greedy_max_cover(ss, 3)
    assert list(picked) == [1, 0, 2] and covered == 2


def test_greedy_max_cover_validation():
    ss = _sample_set(3, [[0]])
    with pytest.raises(ValueError):
        greedy_max_cover(ss, 0)
    with pytest.raises(ValueError):
        greedy_max_cover(ss, 4)


def test_select_seed_certifies_strongest_node(diamond):
    out = select_seed(diamond, 2, 0.1, rng=np.random.default_rng(0))
    # node 0 maximizes the truncated objective estimate on this instance
    assert out.selected == (0,)
    assert out.stop == "certified"
    threshold = out.params.batch_factor * (1 - out.params.eps_inner)
    assert out.ratio >= threshold
    assert out.samples_used <= 2 * out.params.max_samples
    assert out.iterations == len(out.detail)
    sizes = [d.num_samples for d in out.detail]
    assert sizes == sorted(sizes)


def test_select_seed_reproducible(diamond):
    a = select_seed(diamond, 2, 0.3, rng=np.random.default_rng(11))
    b = select_seed(diamond, 2, 0.3, rng=np.random.default_rng(11))
    assert a.selected == b.selected
    assert a.samples_used == b.samples_used
    assert a.ratio == b.ratio


def test_select_batch_matches_single_when_b_is_one(diamond):
    a = select_seed(diamond, 2, 0.2, rng=np.random.default_rng(5))
    b = select_batch(diamond, 2, 0.2, 1, rng=np.random.default_rng(5))
    assert a.selected == b.selected
    assert a.coverage == b.coverage
    assert a.samples_used == b.samples_used
    assert a.ratio == b.ratio
    assert [d.num_samples for d in a.detail] == [d.num_samples for d in b.detail]


def test_select_batch_returns_distinct_nodes(diamond):
    out = select_batch(diamond, 3, 0.3, 2, rng=np.random.default_rng(6))
    assert len(out.selected) == 2
    assert len(set(out.selected)) == 2
    assert out.stop in ("certified", "cap")
