import math

import numpy as np
import pytest

import conederiv as cd


def test_catalog_and_eval():
    names = cd.fixture_names()
    assert "kernel_singular_m2_a0.5" in names
    # f(x) = x_2 / |x|^0.5 at (3, 4): 4 / sqrt(5).
    y = cd.fixture_eval("kernel_singular_m2_a0.5", [3.0, 4.0])
    assert y[0] == pytest.approx(4 / math.sqrt(5), rel=1e-14)
    with pytest.raises(cd.UnknownFixture):
        cd.fixture_info("no_such_fixture")


def test_kernel_separation():
    d = cd.estimate_fixture("kernel_singular_m2_a0.5", "directional")
    t = cd.estimate_fixture("kernel_singular_m2_a0.5", "tangential")
    assert d["verdict"] == "Differentiable"
    assert np.abs(np.asarray(d["L"]["matrix"])).max() < 1e-6
    assert t["verdict"] == "Divergent"


def test_callable_matches_symbolic_derivative():
    # f = sin(x1) + x2^2 at 0 along e1: derivative 1.
    est = cd.estimate(lambda x: math.sin(x[0]) + x[1] ** 2, [0.0, 0.0], [[1.0], [0.0]])
    assert est["verdict"] == "Differentiable"
    assert est["L"]["matrix"][0][0] == pytest.approx(1.0, abs=1e-5)


def test_cone_growth_slope():
    g = cd.cone_growth("kernel_singular_m2_a0.25")
    assert g["slope"] == pytest.approx(-0.25, abs=0.1)


def test_chain_pair_fails_and_abs_holds():
    bad = cd.compose_case("chain_pair_b2")
    good = cd.compose_case("chain_abs_b2")
    assert bad["chain"]["verdict"] == "Fails"
    assert good["chain"]["verdict"] == "Holds"


def test_path_roundtrip():
    a = np.zeros(2)
    v = np.array([1.0, 0.0])
    ts = [2.0**-n for n in range(24)]
    xs = [np.array([t, t * t]) for t in ts]
    p = cd.build_path(a, ts, xs, v)
    for t, x in zip(ts, xs):
        assert np.allclose(p.eval(t), x, atol=1e-15)
        assert np.array_equal(p.deriv(t), v)
    # x1 x2 / |x| along (t, t^2) is about t^2, so the pullback derivative is 0.
    r = cd.pullback("lipschitz_homogeneous", p, [[0.0]], schedule={"levels": 12})
    assert r["verdict"] == "Differentiable"


def test_suite_is_deterministic():
    cfg = {"kind": "suite", "experiments": [{"kind": "estimate", "fixture": "lipschitz_homogeneous"}]}
    a = cd.run_suite(cfg, wall_clock=False)
    b = cd.run_suite(cfg, wall_clock=False)
    assert a == b
    assert a["all_passed"]
