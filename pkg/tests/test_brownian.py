import numpy as np
import pytest
from scipy.stats import kstest

from sclhom.brownian import BrownianPath, increment, refine, sample_path
from sclhom.errors import IndexOutOfRange, LevelTooDeep


def test_w0_is_zero_and_deterministic():
    p = sample_path(1, 0, 1.0, 0)
    q = sample_path(1, 0, 1.0, 0)
    assert p.values[0] == 0.0
    assert np.array_equal(p.values, q.values)
    assert p.values[-1] != sample_path(2, 0, 1.0, 0).values[-1]


def test_refinement_consistency_bit_identical():
    p0 = sample_path(123, 7, 2.0, 0)
    p3 = sample_path(123, 7, 2.0, 3)
    assert p3.values[::8][0] == p0.values[0]
    assert p3.values[::8][1] == p0.values[1]
    chain = refine(refine(refine(p0)))
    assert np.array_equal(chain.values, p3.values)
    # coarsening a fine path is a strided subset
    assert np.array_equal(p3.at_level(1).values, sample_path(123, 7, 2.0, 1).values)


def test_refine_preserves_endpoints_exactly():
    p = sample_path(5, 0, 1.0, 4)
    q = refine(p)
    assert np.array_equal(q.values[::2], p.values)


def test_increment_telescoping_and_bounds():
    p = sample_path(11, 3, 1.5, 6)
    total = sum(increment(p, j) for j in range(2**6))
    assert total == pytest.approx(p.values[-1], abs=1e-12)
    p0 = sample_path(11, 3, 1.5, 0)
    assert increment(p0, 0) == p0.values[-1]
    with pytest.raises(IndexOutOfRange):
        increment(p0, 1)


def test_increments_across_levels():
    # nodes shared between levels are bit-identical; increment pair sums agree
    # up to one rounding of the shared node values
    p = sample_path(9, 2, 1.0, 5)
    q = p.refine()
    assert np.array_equal(q.values[::2], p.values)
    pair_sums = q.increments()[0::2] + q.increments()[1::2]
    assert np.max(np.abs(pair_sums - p.increments())) <= 4e-16


def test_level_too_deep():
    with pytest.raises(LevelTooDeep):
        sample_path(1, 0, 1.0, 31)


def test_monte_carlo_mean_and_variance():
    # oracle: W(1) ~ N(0,1); 1e5 streams, 3-sigma bands
    vals = np.array([sample_path(42, s, 1.0, 0).values[-1] for s in range(100_000)])
    assert abs(vals.mean()) <= 0.01
    assert abs(vals.var() - 1.0) <= 0.015


def test_bridge_midpoint_conditional_variance():
    # oracle: midpoint deviation from the conditional mean has variance dt/4
    devs = np.empty(100_000)
    for s in range(100_000):
        p = sample_path(7, s, 1.0, 1)
        devs[s] = p.values[1] - 0.5 * (p.values[0] + p.values[2])
    assert abs(devs.var() - 0.25) <= 0.005


def test_normalized_increments_pass_ks():
    p = sample_path(3, 0, 1.0, 14)
    z = p.increments()[:10_000] / np.sqrt(p.dt)
    assert kstest(z, "norm").pvalue > 0.01


def test_csv_dump(tmp_path):
    p = sample_path(1, 0, 1.0, 2)
    f = tmp_path / "w.csv"
    with open(f, "w") as fh:
        p.dump_csv(fh)
    lines = f.read_text().splitlines()
    assert lines[0] == "t,W"
    assert len(lines) == 2**2 + 2
