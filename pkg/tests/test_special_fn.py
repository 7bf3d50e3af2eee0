import math

import pytest
from hypothesis import given, settings, strategies as st

from choquard_lab.errors import DomainError
from choquard_lab.special_fn import (best_sobolev_constant, critical_exponent, gamma,
                                     ground_state_energy, hls_constant, nl_exponent,
                                     nonlocal_sobolev_constant, riesz_identity_constant,
                                     sharp_constants, sphere_area)

# frozen mpmath values (50 digits, rounded)
GAMMA_REF = {0.1: 9.5135076986687312858, 2.5: 1.3293403881791370205,
             7.3: 1271.4236336639088399, 33.7: 3.0321626547398717871e36}
HLS_REF = {(3, 1): 2.294010703541599, (3, 2): 7.3038721193751092, (4, 2): 3.8476494904855923,
           (5, 2): 2.6332287502232772, (5, 1): 1.5423776278170407, (4, 1): 1.8119954650093284,
           (6, 3): 3.286253957782813}
SHL_REF = {(3, 1): 4.639758073147546, (3, 2): 3.3321622036187747, (4, 2): 6.5478552041828741,
           (5, 2): 10.302150603633689, (5, 1): 12.81978896122579, (4, 1): 8.6577504027850835,
           (6, 3): 11.35008431584789}
SOB_REF = {3: 5.4779040895313319, 4: 10.260398641294913, 5: 14.811911720005934,
           6: 19.259456665473206}
ENERGY_REF = {(3, 1): 6.8095618701170432, (3, 2): 4.977006163323388, (4, 2): 16.755160819145564,
              (5, 2): 41.752706346051798}


@pytest.mark.parametrize("x,ref", sorted(GAMMA_REF.items()))
def test_gamma_against_mpmath(x, ref):
    assert gamma(x) == pytest.approx(ref, rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.05, max_value=50.0))
def test_gamma_matches_math_gamma(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=50.0, max_value=170.0))
def test_gamma_large_arguments(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=5e-13)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.1, max_value=40.0))
def test_gamma_recurrence(x):
    assert gamma(x + 1.0) == pytest.approx(x * gamma(x), rel=1e-12)


def test_gamma_small_integers_exact():
    for k in range(1, 15):
        assert gamma(k) == math.factorial(k - 1)


@pytest.mark.parametrize("x", [0.0, -0.5, -1.0, -3.0, math.inf, math.nan])
def test_gamma_rejects_nonpositive_and_nonfinite(x):
    with pytest.raises(DomainError):
        gamma(x)


def test_gamma_reflection_branch():
    # x < 1/2 goes through Gamma(x) Gamma(1-x) = pi / sin(pi x)
    for x in (0.01, 0.2, 0.49):
        assert gamma(x) * gamma(1 - x) == pytest.approx(math.pi / math.sin(math.pi * x), rel=1e-13)


@pytest.mark.parametrize("N,ref", [(2, 2 * math.pi), (3, 4 * math.pi), (4, 2 * math.pi ** 2),
                                   (5, 8 * math.pi ** 2 / 3)])
def test_sphere_area(N, ref):
    assert sphere_area(N) == pytest.approx(ref, rel=1e-14)


@pytest.mark.parametrize("N", [3, 4, 5, 6, 7])
def test_exponents(N):
    assert critical_exponent(N) == pytest.approx(2 * N / (N - 2))
    for mu in (0.5, 1.0, N - 0.5):
        assert nl_exponent(N, mu) == pytest.approx((2 * N - mu) / (N - 2))


@pytest.mark.parametrize("pair,ref", sorted(HLS_REF.items()))
def test_hls_constant(pair, ref):
    assert hls_constant(*pair) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("N,ref", sorted(SOB_REF.items()))
def test_sobolev_constant(N, ref):
    assert best_sobolev_constant(N) == pytest.approx(ref, rel=1e-12)


def test_sobolev_constant_in_four_dimensions_closed_form():
    assert best_sobolev_constant(4) == pytest.approx(8 * math.pi / math.sqrt(6), rel=1e-14)


@pytest.mark.parametrize("pair,ref", sorted(SHL_REF.items()))
def test_nonlocal_sobolev_constant(pair, ref):
    assert nonlocal_sobolev_constant(*pair) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("pair,ref", sorted(ENERGY_REF.items()))
def test_ground_state_energy(pair, ref):
    assert ground_state_energy(*pair) == pytest.approx(ref, rel=1e-12)


def test_riesz_identity_constant_positive_and_symmetric_point():
    # I(gamma) at gamma = N/2 ... only defined for 0 < gamma < N/2
    for N in (3, 4, 5):
        for g in (0.25, 0.5, 1.0):
            assert riesz_identity_constant(N, g) > 0
    with pytest.raises(DomainError):
        riesz_identity_constant(3, 1.5)


def test_sharp_constants_bundle():
    c = sharp_constants(4, 2.0)
    d = c.to_dict()
    assert set(d) >= {"N", "mu", "C_hls", "S_sob", "S_hl", "two_star", "two_star_mu"}
    assert d["S_hl"] == pytest.approx(SHL_REF[(4, 2)], rel=1e-12)
    assert d["two_star"] == 4.0 and d["two_star_mu"] == 3.0


@pytest.mark.parametrize("N,mu", [(2, 1.0), (3, 0.0), (3, 3.0), (3, -1.0), (4, 4.5)])
def test_constants_reject_bad_parameters(N, mu):
    with pytest.raises(DomainError):
        nonlocal_sobolev_constant(N, mu)
