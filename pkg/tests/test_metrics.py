import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from solarcast.errors import ConstantVector, EmptyInput, LengthMismatch, ZeroDenominator
from solarcast.metrics import EvalReport, cc2, evaluate, mae, rmse, smape


# deliberately naive references, one loop per formula
def naive_rmse(D, O):
    acc = 0.0
    for d, o in zip(D, O):
        acc += (d - o) ** 2
    return math.sqrt(acc / len(D))


def naive_mae(D, O):
    acc = 0.0
    for d, o in zip(D, O):
        acc += abs(d - o)
    return acc / len(D)


def naive_smape(D, O):
    num = den = 0.0
    for d, o in zip(D, O):
        num += abs(d - o)
        den += d + o
    return num / den * 100


def naive_cc2(D, O):
    S = len(D)
    so = sd = sod = soo = sdd = 0.0
    for d, o in zip(D, O):
        so += o
        sd += d
        sod += o * d
        soo += o * o
        sdd += d * d
    return (S * sod - so * sd) ** 2 / ((S * soo - so**2) * (S * sdd - sd**2))


def test_rmse_examples():
    assert rmse([0.3, 0.6], [0.3, 0.6]) == 0
    assert rmse([0, 1], [1, 0]) == 1.0
    assert rmse([0.5], [0.0]) == 0.5


def test_mae_examples():
    assert mae([0.3, 0.6], [0.3, 0.6]) == 0
    assert mae([0, 1], [1, 0]) == 1.0
    assert mae([0.2, 0.4], [0.1, 0.5]) == pytest.approx(0.1, abs=1e-15)


def test_smape_examples():
    assert smape([0.2, 0.7], [0.2, 0.7]) == 0
    assert smape([1, 1], [0, 2]) == 50.0
    with pytest.raises(ZeroDenominator):
        smape([0, 0], [0, 0])


def test_smape_is_aggregate_not_pointwise():
    D, O = [0.0, 1.0], [0.1, 1.0]
    assert smape(D, O) == pytest.approx(100 * 0.1 / 2.1)
    # the per-point mean form would give 100 here from the single zero target
    pointwise = 100 * np.mean([abs(d - o) / (d + o) for d, o in zip(D, O)])
    assert pointwise == pytest.approx(50.0)


def test_cc2_examples():
    D = np.array([0.1, 0.5, 0.2, 0.9])
    assert cc2(D, D) == pytest.approx(1.0, abs=1e-12)
    assert cc2(D, 2 * D + 3) == pytest.approx(1.0, abs=1e-12)
    assert cc2([1, 2, 3], [3, 2, 1]) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ConstantVector):
        cc2([1, 1, 1], [1, 2, 3])
    with pytest.raises(ConstantVector):
        cc2([1, 2, 3], [2, 2, 2])
    with pytest.raises(EmptyInput):
        cc2([1.0], [1.0])


def test_length_and_empty_errors():
    for f in (rmse, mae, smape, cc2):
        with pytest.raises(LengthMismatch):
            f([1, 2], [1, 2, 3])
        with pytest.raises(EmptyInput):
            f([], [])


def test_evaluate_examples():
    D = np.array([[0.1], [0.4], [0.8]])
    r = evaluate(D, D, training_time=0.25)
    assert (r.rmse, r.mae, r.smape) == (0, 0, 0)
    assert r.cc2 == pytest.approx(1.0)
    assert r.n_points == 3 and r.training_time == 0.25
    r = evaluate([0, 1], [1, 0])
    assert (r.rmse, r.mae) == (1.0, 1.0)
    assert r.cc2 == pytest.approx(1.0)
    with pytest.raises(EmptyInput):
        evaluate([], [])
    with pytest.raises(LengthMismatch):
        evaluate(np.zeros((2, 1)), np.zeros(2))
    assert set(r.to_dict()) == {"rmse", "mae", "smape", "cc2", "n_points", "training_time"}


def test_raw_moment_form_matches_centered():
    rng = np.random.default_rng(0)
    for _ in range(100):
        D = rng.random(rng.integers(2, 300))
        O = D + 0.1 * rng.standard_normal(D.size)
        assert cc2(D, O) == pytest.approx(naive_cc2(D, O), abs=1e-10)


vec = st.lists(st.floats(0, 1, allow_subnormal=False), min_size=2, max_size=60)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_permutation_symmetry(data):
    D = np.array(data.draw(vec))
    O = np.array(data.draw(st.lists(st.floats(0, 1, allow_subnormal=False), min_size=len(D), max_size=len(D))))
    assume(D.sum() + O.sum() > 0 and np.ptp(D) > 1e-3 and np.ptp(O) > 1e-3)
    perm = np.random.default_rng(len(D)).permutation(len(D))
    for f in (rmse, mae, smape, cc2):
        assert f(D[perm], O[perm]) == pytest.approx(f(D, O), rel=1e-12, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.data(), st.floats(0.01, 100))
def test_scaling_laws(data, c):
    D = np.array(data.draw(vec))
    O = np.array(data.draw(st.lists(st.floats(0, 1, allow_subnormal=False), min_size=len(D), max_size=len(D))))
    assume(D.sum() + O.sum() > 1e-3)
    assert rmse(c * D, c * O) == pytest.approx(c * rmse(D, O), rel=1e-12, abs=1e-300)
    assert mae(c * D, c * O) == pytest.approx(c * mae(D, O), rel=1e-12, abs=1e-300)
    assert smape(c * D, c * O) == pytest.approx(smape(D, O), rel=1e-9, abs=1e-12)


def test_rmse_tiny_residuals_do_not_underflow():
    tiny = np.finfo(float).tiny
    assert rmse([0.0], [tiny]) == tiny
    assert rmse([0.0, 0.0], [tiny, tiny]) >= mae([0.0, 0.0], [tiny, tiny])
    assert rmse([0.0, 3e200], [4e200, 3e200]) == pytest.approx(4e200 / math.sqrt(2))
