import json
import math

import numpy as np
import pytest

from choquard_lab.errors import DomainError, RegionError
from choquard_lab.experiments import (PERTURBATIONS, centered_scales, check_region,
                                      envelope_constants, interaction_slopes, perturbation,
                                      profile_decomposition_demo, run_config,
                                      sweep_deficit_bound, sweep_stability)
from choquard_lab.radial import RadialGrid, grad_norm_sq
from choquard_lab.special_fn import ground_state_energy


@pytest.fixture(scope="module")
def deficit_sweep():
    return sweep_deficit_bound(3, 1.0, PERTURBATIONS, (1e-3, 1e-2, 1e-1))


def test_deficit_sweep_envelope_holds(deficit_sweep):
    K, L = deficit_sweep.constants["K_hat"], deficit_sweep.constants["L_hat"]
    assert math.isfinite(K) and math.isfinite(L) and K >= 0 and L >= 0
    for r in deficit_sweep.rows:
        assert r.lhs <= K * r.deficit + L * r.nlprod


@pytest.mark.parametrize("name", PERTURBATIONS)
def test_deficit_sweep_second_order(deficit_sweep, name):
    rows = [r for r in deficit_sweep.rows if r.perturbation == name]
    eps = np.array([r.eps for r in rows])
    for attr in ("lhs", "deficit"):
        y = np.array([getattr(r, attr) for r in rows])
        slope = np.polyfit(np.log(eps[:2]), np.log(y[:2]), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.1)


def test_deficit_sweep_zero_eps():
    s = sweep_deficit_bound(3, 1.0, ("bump",), (0.0,))
    r = s.rows[0]
    assert r.lhs < 1e-20 and abs(r.deficit) < 1e-6 and r.nlprod < 1e-8


def test_deficit_sweep_rejects_large_eps():
    with pytest.raises(DomainError):
        sweep_deficit_bound(3, 1.0, ("bump",), (0.5,))


def test_envelope_constants_synthetic():
    d = np.array([1.0, 0.0, 2.0])
    nl = np.array([0.0, 1.0, 1.0])
    lhs = np.array([2.0, 3.0, 7.0])
    K, L = envelope_constants(lhs, d, nl)
    assert np.all(lhs <= K * d + L * nl)
    assert K + L == pytest.approx(5.0, rel=1e-9)
    assert envelope_constants([0.0], [0.0], [0.0]) == (0.0, 0.0)
    assert envelope_constants([1.0], [0.0], [0.0]) == (math.inf, math.inf)


def test_region_check():
    check_region(4, 1.0, 2)
    check_region(5, 2.0, 1)
    with pytest.raises(RegionError):
        check_region(5, 2.0, 2)
    with pytest.raises(RegionError):
        sweep_stability(5, 2.0, 2)


def test_centered_scales():
    s = centered_scales(2, 1e4)
    assert s[0] == pytest.approx(1e-2) and s[1] == pytest.approx(1e2)
    assert centered_scales(1, 10.0) == (1.0,)
    s3 = centered_scales(3, 10.0)
    assert s3[1] == pytest.approx(1.0) and s3[2] / s3[1] == pytest.approx(10.0)


def test_stability_single_bubble_unperturbed():
    s = sweep_stability(3, 1.0, 1, eps_list=(0.0,))
    r = s.rows[0]
    assert r.dist_kappa < 1e-8 and r.residual_dual_norm < 1e-4


def test_stability_sweep_grid_doubling():
    grid = RadialGrid(3, 2048)
    kw = dict(lambda_ratios=(1e3,), eps_list=(1e-3, 1e-2))
    a = sweep_stability(3, 1.0, 2, grid=grid, **kw).constants["C_hat"]
    b = sweep_stability(3, 1.0, 2, grid=grid.refined(), **kw).constants["C_hat"]
    assert math.isfinite(a) and 0 < a
    assert 0.5 < b / a < 2.0


def test_stability_rows_record_interactions():
    s = sweep_stability(3, 1.0, 2, lambda_ratios=(1e2,), eps_list=(1e-2,))
    r = s.rows[0]
    assert r.max_Q == pytest.approx((1e2 + 1e-2) ** -0.5)
    assert len(r.two_center) == 2 and all(v > 0 for v in r.two_center)
    assert r.dist_kappa <= r.dist_single
    flat = r.flat()
    assert isinstance(flat["lambdas"], str)


def test_parallel_matches_serial():
    kw = dict(lambda_ratios=(1e2,), eps_list=(1e-3, 1e-2))
    a = sweep_stability(3, 1.0, 2, jobs=1, **kw).to_dict()
    b = sweep_stability(3, 1.0, 2, jobs=2, **kw).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


@pytest.mark.parametrize("N,p,q", [(3, 5.0, 1.0), (4, 3.0, 1.0), (3, 4.0, 2.0), (5, 7 / 3, 1.0)])
def test_interaction_slopes_unequal(N, p, q):
    out = interaction_slopes(N, p, q)
    assert out["expected"] == min(p, q)
    assert out["relative_error"] < 0.05


@pytest.mark.parametrize("N", [3, 4])
def test_interaction_slopes_equal(N):
    two = 2 * N / (N - 2)
    out = interaction_slopes(N, two / 2, two / 2)
    assert out["expected"] == pytest.approx(N / (N - 2))
    assert out["relative_error"] < 0.05
    assert out["log_coefficient"] > 0


def test_interaction_slopes_validation():
    with pytest.raises(DomainError):
        interaction_slopes(3, 2.0, 2.0)
    with pytest.raises(DomainError):
        interaction_slopes(3, 5.0, 1.0, ratios=[10.0, 100.0])


def test_two_center_over_Q_bounded():
    # N = 4, p = 2* - 1, q = 1: value / Q stays within a fixed band
    from choquard_lab.bubbles import Bubble, interaction_Q
    from choquard_lab.riesz import two_center_integral
    vals = []
    for lam in (10.0, 100.0, 1000.0):
        b1, b2 = Bubble(4, 2.0, 1.0), Bubble(4, 2.0, lam)
        vals.append(two_center_integral(3.0, 1.0, b1, b2) / interaction_Q(b1, b2))
    assert max(vals) / min(vals) < 3.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_decomposition_demo_two_bubbles(seed):
    out = profile_decomposition_demo(3, 1.0, 2, seed=seed)
    assert out["grad_sq"] == pytest.approx(2 * ground_state_energy(3, 1.0), rel=0.05)
    assert out["in_window"]
    assert max(out["lambda_rel_errors"]) < 0.02


def test_decomposition_demo_exact_bubble():
    out = profile_decomposition_demo(3, 1.0, 1, seed=3, rho_norm=0.0)
    assert out["in_window"]
    assert max(out["lambda_rel_errors"]) < 1e-8


@pytest.mark.parametrize("name", PERTURBATIONS)
def test_perturbations_normalised(grids, name):
    g = perturbation(name, grids(4))
    assert grad_norm_sq(g) == pytest.approx(1.0, rel=1e-12)


def test_unknown_perturbation(grids):
    with pytest.raises(DomainError):
        perturbation("spike", grids(3))


def test_run_config_dispatch():
    s = run_config({"N": 3, "mu": 1.0, "kappa": 1, "eps": [1e-2], "perturbations": ["gauss"],
                    "grid": {"n": 1024}})
    assert s.kind == "deficit_bound" and len(s.rows) == 1
    s = run_config({"N": 3, "mu": 1.0, "kappa": 2, "eps": [1e-2], "lambdas": [0.1, 10.0],
                    "grid": {"n": 1024}})
    assert s.kind == "multi_bubble" and s.rows[0].lambdas == (0.1, 10.0)


@pytest.mark.parametrize("cfg", [{"mu": 1.0}, {"N": 3, "mu": 1.0, "perturbations": ["nope"]},
                                 {"N": 3, "mu": 1.0, "kind": "other"},
                                 {"N": 3, "mu": 1.0, "kappa": 2, "lambdas": [1.0]}])
def test_run_config_rejects(cfg):
    with pytest.raises(DomainError):
        run_config(cfg)
