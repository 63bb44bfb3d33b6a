import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from approx_olo.oracles import (FiniteOracle, GreedySetCover, NotEnumerable, OracleContractError,
                                OracleMeter, extended_oracle_query, finite_instance,
                                instance_from_dict, load_instance, min_over_scaled, oracle_query,
                                save_instance, setcover_instance, split_signs)

from conftest import two_hot

directions = arrays(float, 4, elements=st.floats(-2, 2, allow_nan=False))


def test_extended_oracle_loss_frozen(simplex2):
    out = extended_oracle_query(simplex2, [1.0, -2.0])
    np.testing.assert_allclose(out.s, [0.0, 1.0])
    np.testing.assert_allclose(out.v, [0.0, 2.0])


def test_extended_oracle_payoff_frozen(d4_payoff):
    out = extended_oracle_query(d4_payoff, [1.0, -2.0, 3.0, -4.0])
    np.testing.assert_allclose(out.s, [0, 0, 1, 1])
    np.testing.assert_allclose(out.v, [-0.4472135955, 0.0, -0.3416407865, 1.0], atol=1e-9)


def test_degraded_oracles_frozen():
    pts = two_hot(4)
    c = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(FiniteOracle(pts).query(c), [1, 1, 0, 0])
    # optimum 3, alpha bound 6: the worst admissible point has value 6
    np.testing.assert_array_equal(FiniteOracle(pts, 2.0).query(c), [0, 1, 0, 1])
    # optimum 7, bound 3.5: worst admissible has value 4
    np.testing.assert_array_equal(FiniteOracle(pts, 0.5).query(c), [1, 0, 1, 0])


def test_degraded_oracle_ties_lowest_index():
    pts = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    assert FiniteOracle(pts, 3.0).query_index(np.array([1.0, 1.0])) == 0


def test_setcover_greedy_frozen(setcover):
    assert setcover.alpha == pytest.approx(1 + np.log(4))
    np.testing.assert_array_equal(setcover.oracle.query(np.array([1, 1, 1, 1, 1.5])), [0, 0, 0, 0, 1])
    np.testing.assert_array_equal(setcover.oracle.query(np.array([1, 1, 1, 1, 3.0])), [1, 1, 0, 0, 0])
    assert len(setcover.points()) == 23


def test_setcover_rejects_bad_sets():
    with pytest.raises(ValueError):
        GreedySetCover(3, [[0, 1]])
    with pytest.raises(ValueError):
        GreedySetCover(2, [[0, 5]])


def test_setcover_not_enumerable():
    sc = setcover_instance(2, [[0, 1]] * 21)
    with pytest.raises(NotEnumerable):
        sc.points()


def test_raw_oracle_rejects_negative(simplex2):
    with pytest.raises(OracleContractError):
        oracle_query(simplex2, [1.0, -1e-3])


def test_meter_counts_one_per_extended_query(d4_exact):
    m = OracleMeter()
    for c in np.random.default_rng(0).normal(size=(7, 4)):
        extended_oracle_query(d4_exact, c, m)
    assert m.calls == 7


def test_split_signs():
    parts = split_signs([1.0, -2.0, 0.0])
    np.testing.assert_array_equal(parts.plus, [1, 0, 0])
    np.testing.assert_array_equal(parts.minus, [0, -2, 0])


def test_zero_direction_gives_feasible_v(d4_exact):
    out = extended_oracle_query(d4_exact, np.zeros(4))
    np.testing.assert_array_equal(out.v, out.s)


@pytest.mark.parametrize("name", ["d4_exact", "d4_degraded", "d4_payoff", "setcover"])
@given(c=directions)
def test_extended_oracle_properties(name, request, c):
    inst = request.getfixturevalue(name)
    if inst.dimension != 4:
        c = np.append(c, c[0])
    out = extended_oracle_query(inst, c)
    assert np.linalg.norm(out.v) <= (inst.alpha + 2) * inst.R + 1e-9
    assert out.v @ c <= min_over_scaled(inst, c) + 1e-9
    gap = out.s - out.v if inst.loss else out.v - out.s
    assert gap.max() <= 1e-9
    assert np.isclose(inst.points(), out.s).all(axis=1).any()


def test_instance_validation():
    with pytest.raises(ValueError):
        finite_instance([[-1.0, 0.0]])
    with pytest.raises(ValueError):
        finite_instance([[1.0, 0.0]], R=0.5)
    inst = finite_instance(np.eye(2), alpha=0.5)
    assert inst.mode == "payoff"


def test_instance_json_roundtrip(tmp_path, d4_degraded, setcover):
    for inst in (d4_degraded, setcover):
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        back = load_instance(path)
        assert back.to_dict() == inst.to_dict()


def test_instance_json_alpha_mismatch():
    doc = {"setcover": {"n": 2, "sets": [{"elements": [0, 1], "cost_index": 0}]}, "alpha": 3.0}
    with pytest.raises(ValueError):
        instance_from_dict(doc)


def test_config_instances_load(configs_dir):
    for name in ("d4_exact", "d4_degraded", "d4_payoff", "d3_bandit", "setcover_small"):
        inst = load_instance(configs_dir / f"{name}.json")
        assert inst.dimension == len(json.loads((configs_dir / f"{name}.json").read_text())
                                     .get("points", [[0] * inst.dimension])[0])
