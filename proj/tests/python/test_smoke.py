import math

import numpy as np
import pytest

import volvar


def test_kernel_normalized():
    k = volvar.KernelPair.natural(2, 1)
    assert k.c_rho == pytest.approx(1.0, abs=1e-12)
    assert k.c_xi == pytest.approx(1.0, abs=1e-12)
    assert k.is_natural


def test_discretized_mass_matches_sample():
    total, sampled, cells = volvar.discretized_mass(volvar.Shape.circle(1.0), 0.05)
    assert total == pytest.approx(sampled, rel=1e-12)
    assert sampled == pytest.approx(2 * math.pi, rel=1e-12)
    assert cells > 0


def test_mean_curvature_on_circle():
    shape = volvar.Shape.circle(1.0)
    pts = shape.probe_points(8)
    H = volvar.mean_curvature(shape, volvar.KernelPair.natural(2, 1), 0.1, pts)
    assert H.shape == (8, 2)
    # inward unit normal times 1/r
    np.testing.assert_allclose(H, -pts, atol=1e-3)


def test_far_point_raises():
    shape = volvar.Shape.circle(1.0)
    with pytest.raises(volvar.DenominatorTooSmall):
        volvar.mean_curvature(shape, volvar.KernelPair.natural(2, 1), 0.1, np.array([[3.0, 0.0]]))


def test_two_atom_distance():
    r = volvar.bounded_lipschitz_distance(
        np.array([[0.0, 0.0]]), np.array([1.0]), np.array([[1.0, 0.0]]), np.array([1.0])
    )
    assert r["value"] == pytest.approx(2 / 3, abs=1e-9)


def test_ahlfors_circle():
    c0 = volvar.ahlfors_constant(volvar.Shape.circle(1.0), [0.1, 0.25, 0.5, 1.0])
    assert 2.0 <= c0 <= 2.2


def test_ledger_positive():
    led = volvar.constants_ledger(
        volvar.KernelPair.natural(2, 1), 2.1, 0.03, math.sqrt(2), 1.0, 2 * math.pi, 0.125
    )
    for key in ("c3", "c4", "c5", "c6", "c7", "c8", "c9", "c10", "C", "C_prime"):
        assert led[key] > 0
    assert led["C_prime"] == pytest.approx(led["mass0"] * (2 + led["C1"]) + led["C"] * led["T"])


def test_sphere_flow():
    assert volvar.sphere_flow_radius(1.0, 1, 2, 0.25) == pytest.approx(math.sqrt(0.5))
    with pytest.raises(volvar.PreconditionViolated):
        volvar.sphere_flow_radius(1.0, 1, 2, 0.5)


def test_validate_and_run(tmp_path):
    bad = "[experiment]\nkind = brakke-residual\n[sweep]\nepsilons = 0.2\nh = 0.2\n[ledger]\nc0 = 2.1\n"
    diags = volvar.validate(bad)
    assert diags and diags[0][0] and "2h > gamma eps" in diags[0][1]
    with pytest.raises(volvar.ConfigError):
        volvar.validate("[experiment]\nkind = nope\n")
    cfg = "[experiment]\nkind = curvature-convergence\nseed = 1\n"
    assert volvar.validate(cfg) == []
    a = volvar.run_experiment(cfg, str(tmp_path / "a"))
    b = volvar.run_experiment(cfg, str(tmp_path / "b"))
    assert a["passed"]
    for name in a["files"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
