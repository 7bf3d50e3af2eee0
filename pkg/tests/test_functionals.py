import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from choquard_lab.bubbles import BubbleFamily, exact_riesz_of_bubble, family_profile
from choquard_lab.errors import DomainError
from choquard_lab.experiments import perturbation
from choquard_lab.functionals import (clarkson_check, deficit, deficit_bound_sides, el_residual,
                                      energy, nl_integral, nl_norm, nonlinearity,
                                      residual_dual_norm, residual_dual_norm_strong)
from choquard_lab.radial import (RadialGrid, RadialProfile, dual_norm, grad_norm_sq,
                                 laplacian, lp_norm, poisson_solve)
from choquard_lab.riesz import double_integral
from choquard_lab.special_fn import hls_constant, nl_exponent, nonlocal_sobolev_constant

from conftest import PAIRS, bubble_on


@pytest.mark.parametrize("N,mu", PAIRS)
@pytest.mark.parametrize("lam", [0.5, 1.0, 4.0])
def test_equality_case(grids, N, mu, lam):
    _, W = bubble_on(grids(N), mu, lam)
    rep = deficit(W, mu)
    assert abs(rep.relative) < 1e-7
    assert residual_dual_norm(W, mu) < 1e-5


@pytest.mark.parametrize("N,mu", PAIRS)
def test_residual_routes_agree(grids, N, mu):
    _, W = bubble_on(grids(N), mu)
    u = W * 1.1
    weak = residual_dual_norm(u, mu)
    strong = residual_dual_norm_strong(u, mu)
    assert weak > 0.1
    assert strong == pytest.approx(weak, rel=1e-5)


@pytest.mark.parametrize("N,mu", PAIRS)
def test_nl_integral_equals_gradient_energy(grids, N, mu):
    # multiply the equation by W: ||grad W||^2 = int int W^p W^p |x-y|^{-mu}
    _, W = bubble_on(grids(N), mu)
    p = nl_exponent(N, mu)
    Wp = W.abs_power(p)
    assert nl_integral(W, mu) == pytest.approx(grad_norm_sq(W), rel=1e-7)
    assert double_integral(Wp, Wp, mu) == pytest.approx(grad_norm_sq(W), rel=1e-7)


@pytest.mark.parametrize("N,mu", PAIRS)
def test_hls_extremal_attains_constant(grids, N, mu):
    grid = grids(N)
    a = (2 * N - mu) / 2
    f = RadialProfile.from_function(grid, lambda r: (1 + r * r) ** (-a), 0.0, -2 * a)
    lhs = double_integral(f, f, mu)
    rhs = hls_constant(N, mu) * lp_norm(f, 2 * N / (2 * N - mu)) ** 2
    assert lhs / rhs == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("N,mu", PAIRS)
def test_nl_norm_equality_and_homogeneity(grids, N, mu):
    _, W = bubble_on(grids(N), mu)
    n = nl_norm(W, mu)
    assert n ** 2 == pytest.approx(grad_norm_sq(W) / nonlocal_sobolev_constant(N, mu), rel=1e-7)
    assert nl_norm(W * -2.5, mu) == pytest.approx(2.5 * n, rel=1e-10)
    assert nl_norm(RadialProfile.zeros(grids(N)), mu) == 0.0


@pytest.mark.parametrize("N,mu", PAIRS)
def test_deficit_scale_invariant_and_positive_off_manifold(grids, N, mu):
    grid = grids(N)
    b, W = bubble_on(grid, mu)
    assert abs(deficit(W * 2.0, mu).relative) < 1e-7
    g = perturbation("bump", grid, BubbleFamily((b,)))
    assert deficit(W + g * 0.1, mu).deficit > 1e-4


@pytest.mark.parametrize("N,mu", PAIRS)
def test_energy_of_ground_state(grids, N, mu):
    _, W = bubble_on(grids(N), mu)
    p = nl_exponent(N, mu)
    S = nonlocal_sobolev_constant(N, mu)
    ref = (0.5 - 1 / (2 * p)) * S ** ((2 * N - mu) / (N + 2 - mu))
    assert energy(W, mu) == pytest.approx(ref, rel=1e-7)
    assert energy(RadialProfile.zeros(grids(N)), mu) == 0.0


@pytest.mark.parametrize("N,mu", PAIRS)
def test_poisson_solve_of_nonlinearity_recovers_W(grids, N, mu):
    _, W = bubble_on(grids(N), mu)
    phi = poisson_solve(nonlinearity(W, mu))
    m = (W.grid.r > 1e-3) & (W.grid.r < 1e3)
    assert np.max(np.abs(phi.values[m] / W.values[m] - 1)) < 1e-5


def test_residual_from_closed_form_riesz(grids):
    N, mu = 3, 1.0
    b, W = bubble_on(grids(N), mu)
    p = nl_exponent(N, mu)
    F = exact_riesz_of_bubble(b, W.grid) * W.abs_power(p - 1)
    phi = poisson_solve(F)
    assert math.sqrt(grad_norm_sq(phi - W)) < 1e-5


def test_dual_norm_of_minus_laplacian(grids):
    grid = grids(3)
    h = RadialProfile.from_function(grid, lambda r: np.exp(-r * r), 0.0, None)
    g = laplacian(h) * -1.0
    assert dual_norm(g) == pytest.approx(math.sqrt(grad_norm_sq(h)), rel=1e-5)
    assert dual_norm(g * -3.0) == pytest.approx(3.0 * dual_norm(g), rel=1e-10)


def test_two_far_bubbles_residual_tracks_interaction():
    # for N = 3 the cross terms, hence the residual, are of order Q
    from choquard_lab.bubbles import max_interaction
    grid = RadialGrid(3, 4096, 1e-6, 1e6)
    ratios = []
    for R in (1e4, 1e5, 1e6):
        fam = BubbleFamily.concentric(3, 1.0, [R ** -0.5, R ** 0.5])
        ratios.append(residual_dual_norm(family_profile(fam, grid), 1.0) / max_interaction(fam))
    assert max(ratios) / min(ratios) < 1.5


def test_el_residual_small_for_W(grids):
    _, W = bubble_on(grids(4), 2.0)
    assert dual_norm(el_residual(W, 2.0)) < 1e-4


# -- Clarkson / parallelogram ------------------------------------------------------

def test_clarkson_equality_cases(grids):
    _, W = bubble_on(grids(3), 1.0)
    a, b = clarkson_check(W, W)
    assert a == pytest.approx(grad_norm_sq(W), rel=1e-14) and b == pytest.approx(a, rel=1e-14)
    a, b = clarkson_check(W, W * -1.0)
    assert a == pytest.approx(b, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_clarkson_on_random_fields(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((200, 3))
    Y = rng.standard_normal((200, 3))
    w = rng.uniform(0, 1, 200)
    lhs, rhs = clarkson_check(X, Y, w)
    assert lhs <= rhs + 1e-10
    assert abs(lhs - rhs) < 1e-10


def test_clarkson_shape_mismatch():
    with pytest.raises(DomainError):
        clarkson_check(np.zeros((3, 2)), np.zeros((4, 2)))


# -- deficit bound sides ------------------------------------------------------------

def test_deficit_bound_sides_at_bubble(grids):
    _, W = bubble_on(grids(3), 1.0)
    lhs, d, nlp = deficit_bound_sides(W, W, 1.0)
    assert lhs == 0.0 and nlp == 0.0
    assert abs(d) < 1e-7 * grad_norm_sq(W)


def test_deficit_bound_sides_rejects_unmatched_norms(grids):
    _, W = bubble_on(grids(3), 1.0)
    with pytest.raises(DomainError):
        deficit_bound_sides(W, W * 1.01, 1.0)


def test_deficit_bound_sides_far_from_manifold(grids):
    from choquard_lab.manifold_fit import match_nl_norm, project_single
    grid = grids(3)
    u = family_profile(BubbleFamily.concentric(3, 1.0, [0.1, 10.0]), grid)
    fit = project_single(u, 1.0)
    v = match_nl_norm(family_profile(fit.config, grid), nl_norm(u, 1.0), 1.0)
    lhs, d, nlp = deficit_bound_sides(u, v, 1.0)
    assert lhs > 0 and d > 0 and nlp > 0
