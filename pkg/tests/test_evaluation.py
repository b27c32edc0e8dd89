import math

import numpy as np
import pytest

from conftest import mu_alpha
from kersize.decoder import SetValuedDecoder, decoder_from_dict
from kersize.ensemble import random_additive_problem
from kersize.evaluation import (
    RnspCertificate, check_rnsp_bound, evaluate_decoder, forward_model_sweep, make_baseline,
    rnsp_falsify,
)
from kersize.measure import DiscreteMeasure, err_a, residual
from kersize.problem import ForwardModel, Problem, ProblemError, build_measurement_table
from kersize.worst_case import kersize_worst, optimal_decoder_worst, worst_case_error


def test_baselines_on_two_point(two_point):
    t = build_measurement_table(two_point)
    k = t.keys[0]
    assert make_baseline("first_feasible", two_point, t).output(k) == ((0.0, 0.0),)
    assert make_baseline("full_feasible", two_point, t).output(k) == ((0.0, 0.0), (0.0, 1.0))
    const = make_baseline("constant", two_point, t, point=[0, 0])
    assert worst_case_error(two_point, t, const) == 1.0
    full = make_baseline("full_feasible", two_point, t)
    assert worst_case_error(two_point, t, full) == kersize_worst(two_point, t) == 1.0
    with pytest.raises(ValueError):
        make_baseline("oracle", two_point, t)
    with pytest.raises(ValueError):
        make_baseline("constant", two_point, t)


def test_random_feasible_is_seeded():
    p = random_additive_problem(4)
    t = build_measurement_table(p)
    a = make_baseline("random_feasible", p, t, seed=3)
    b = make_baseline("random_feasible", p, t, seed=3)
    assert a.outputs == b.outputs
    for g in t.groups:
        assert a.select(g.key) in set(map(tuple, t.feasible_points(g).tolist()))


def test_evaluate_examples(two_point, injective):
    t = build_measurement_table(two_point)
    rep = evaluate_decoder(two_point, None, optimal_decoder_worst(two_point, t))
    gap = rep.decoders[0]
    assert gap.worst_error == 0.5 and gap.ratio_worst_to_floor == 1.0
    rep = evaluate_decoder(two_point, None, make_baseline("first_feasible", two_point, t))
    assert rep.decoders[0].worst_error == 1.0 and rep.lower_bound_ok
    t = build_measurement_table(injective)
    exact = SetValuedDecoder({g.key: [tuple(t.feasible_points(g)[0])] for g in t.groups})
    rep = evaluate_decoder(injective, None, exact, orders=[1, 2, "inf"])
    gap = rep.decoders[0]
    assert gap.worst_error == 0.0 and set(gap.err_a.values()) == {0.0}
    assert gap.ratio_worst_to_kersize is None


def test_evaluate_missing_group(two_point):
    with pytest.raises(ProblemError):
        evaluate_decoder(two_point, None, SetValuedDecoder({(7,): [(0.0, 0.0)]}))


def test_evaluate_multiple_decoders_prefix_columns(two_point):
    t = build_measurement_table(two_point)
    decs = [make_baseline("first_feasible", two_point, t), optimal_decoder_worst(two_point, t)]
    rep = evaluate_decoder(two_point, mu_alpha(0.5), decs, orders=[2])
    row = rep.group_rows[0]
    assert row["first_feasible:worst_error"] == 1.0
    assert row["optimal_worst:worst_error"] == 0.5
    assert "optimal_worst:err_p2.0_contribution" in row


def test_ess_sup_error_bounded_by_worst_error():
    for seed in range(15):
        p = random_additive_problem(seed)
        t = build_measurement_table(p)
        mu = DiscreteMeasure.uniform(p)
        for kind in ("first_feasible", "full_feasible", "random_feasible"):
            dec = make_baseline(kind, p, t, seed=seed)
            r = residual(p, t, dec)
            assert err_a(r, mu, math.inf) == worst_case_error(p, t, dec)
            sparse = DiscreteMeasure(np.where(np.arange(mu.weights.size).reshape(
                mu.weights.shape) % 2 == 0, 1.0, 0.0))
            assert err_a(r, sparse, math.inf) <= worst_case_error(p, t, dec)


def test_lower_bound_universal():
    for seed in range(30):
        p = random_additive_problem(seed)
        t = build_measurement_table(p)
        ks = kersize_worst(p, t)
        for kind in ("first_feasible", "full_feasible", "random_feasible"):
            assert worst_case_error(p, t, make_baseline(kind, p, t, seed=seed)) >= ks / 2 - 1e-9


def test_rnsp_consequence_examples():
    inj = Problem.linear(np.eye(2), [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    v = check_rnsp_bound(inj, RnspCertificate(1.0, 1.0))
    assert v.ok and v.kersize == 0.0 and v.eta == 0.0
    p = Problem.linear([[1.0]], [[0.0], [1.0]], [[-0.4], [0.0], [0.4]])
    v = check_rnsp_bound(p, RnspCertificate(1.0, 1.0))
    assert v.ok and v.kersize == 0.0 and math.isclose(v.eta, 0.8)
    z = Problem.linear([[0.0, 0.0]], [[0.0, 0.0], [3.0, 4.0]])
    v = check_rnsp_bound(z, RnspCertificate(1.0, 10.0))
    assert not v.ok and v.kersize == 5.0
    mult = Problem.linear([[1.0]], [[0.0], [1.0]], [[1.0]], kind="linear_multiplicative")
    with pytest.raises(ProblemError):
        check_rnsp_bound(mult, RnspCertificate(1.0, 1.0))
    with pytest.raises(ValueError):
        RnspCertificate(0.0, 1.0)


def test_rnsp_falsifier():
    M1 = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    assert rnsp_falsify(np.eye(2), M1, RnspCertificate(1e3, 1e3), probes=10_000) is None
    h = rnsp_falsify(np.zeros((1, 2)), M1, RnspCertificate(1e-6, 1e-6), probes=10_000)
    assert h is not None and np.linalg.norm(h) > 0


def test_sweep_examples():
    base = Problem.linear([[1.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]])
    fam = [ForwardModel.linear([[1.0, 0.0]]), ForwardModel.linear([[0.0, 1.0]])]
    res = forward_model_sweep(fam, base)
    assert res.kersizes == (("0000", 1.0), ("0001", 0.0)) and res.best == ("0001",)
    res = forward_model_sweep(fam[:1], base, ids=["only"])
    assert res.best == ("only",)
    res = forward_model_sweep([fam[0], fam[0]], base, ids=["b", "a"])
    assert res.best == ("a", "b") and res.best_kersize == 1.0
    with pytest.raises(ValueError):
        forward_model_sweep([], base)
    with pytest.raises(ProblemError):
        forward_model_sweep([ForwardModel.linear([[1.0, 0.0, 0.0]])], base)


def test_decoder_from_dict(two_point):
    t = build_measurement_table(two_point)
    dec = decoder_from_dict({"outputs": [{"y": [0.0], "points": [[0.0, 0.5]]}]}, t)
    assert dec.output(t.keys[0]) == ((0.0, 0.5),)
    dec = decoder_from_dict({"outputs": [{"key": list(t.keys[0]), "points": [[0, 1], [0, 0]]}]})
    assert dec.output(t.keys[0]) == ((0.0, 0.0), (0.0, 1.0))
    with pytest.raises(ProblemError):
        decoder_from_dict({"outputs": [{"key": [0]}]})
