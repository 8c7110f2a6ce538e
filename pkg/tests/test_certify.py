import math

import numpy as np
import pytest

import hamsys as hs
from hamsys.certify import (
    CONVERGES,
    DIVERGES,
    SpeedFunction,
    bump_profile,
    check_gradient_bound,
    cutoff_sequence,
    divergence_test,
    verify_energy_bound,
)

from conftest import random_unitary


def test_speed_constant_one(canonical_h_eye):
    c = SpeedFunction.for_system(canonical_h_eye)
    for x in (-3.0, 0.0, 5.0):
        assert c(x) == pytest.approx(1.0, abs=1e-12)


def test_speed_exponential_weight():
    # H = diag(1, e^{2x}) gives H^{-1/2} J H^{-1/2} = e^{-x} * rotation
    s = hs.SymmetricSystem(
        hs.parse_matrix_function("[[0, 1], [-1, 0]]"),
        hs.parse_matrix_function("[[0, 0], [0, 0]]"),
        hs.parse_matrix_function("[[1, 0], [0, exp(2*x)]]"),
        hs.Interval.real_line(),
    )
    c = SpeedFunction.for_system(s)
    for x in (-1.0, 0.0, 2.0):
        assert c(x) == pytest.approx(math.exp(-x), rel=1e-10)


def test_speed_infinite_for_singular_weight(example13):
    c = SpeedFunction.for_system(example13)
    assert math.isinf(c(0.0)) and math.isinf(c(13.7))


def test_speed_unitary_gauge_covariance(canonical_h_eye):
    rng = np.random.default_rng(17)
    u = random_unitary(rng, 2)
    gauged = hs.gauge_apply(canonical_h_eye, hs.GaugeTransform(hs.constant_field(u)))
    c0 = SpeedFunction.for_system(canonical_h_eye)
    c1 = SpeedFunction.for_system(gauged)
    for x in (-2.0, 0.3):
        assert c1(x) == pytest.approx(c0(x), rel=1e-10)


def test_divergence_constant():
    assert divergence_test(lambda x: 1.0, "+inf").verdict == DIVERGES
    assert divergence_test(lambda x: 1.0, "-inf").verdict == DIVERGES


def test_divergence_exponential_decay():
    res = divergence_test(lambda x: math.exp(-abs(x)), "+inf")
    assert res.verdict == CONVERGES
    assert res.tail_estimate is not None and res.tail_estimate <= 1e-4


def test_divergence_logarithmic():
    # F(T) ~ arcsinh(T): needs the schedule to reach 1e6 to resolve
    res = divergence_test(lambda x: 1.0 / math.sqrt(1 + x * x), "+inf")
    assert res.verdict == DIVERGES


def test_divergence_quartic_tail():
    res = divergence_test(lambda x: 1.0 / math.sqrt(1 + x ** 4), "+inf")
    assert res.verdict == CONVERGES


def test_divergence_zero_integrand():
    assert divergence_test(lambda x: 0.0, "+inf").verdict == CONVERGES


def test_divergence_ambiguous_slow_tail_is_unknown():
    # x^{-1.05} converges, but too slowly for the schedule to resolve the
    # extrapolated tail; x^{-0.999} diverges; neither may claim certainty
    # beyond what the increments show
    from hamsys.certify import UNKNOWN

    res = divergence_test(lambda x: (1.0 + abs(x)) ** -1.05, "+inf")
    assert res.verdict == UNKNOWN


def test_certificate_inconclusive_on_unknown_divergence():
    # scalar weight h = (1+x^2)^{-0.525} gives reciprocal speed ~ x^{-1.05}:
    # the divergence test cannot decide, so no certificate may be issued
    h = "exp(-0.525*log(1 + x^2))"
    s = hs.SymmetricSystem(
        hs.parse_matrix_function("[[0, 1], [-1, 0]]"),
        hs.parse_matrix_function("[[0, 0], [0, 0]]"),
        hs.parse_matrix_function(f"[[{h}, 0], [0, {h}]]"),
        hs.Interval.real_line(),
    )
    cert = hs.certify_selfadjoint(s)
    assert cert.verdict == "inconclusive"
    assert not cert.failed


def test_cutoff_unit_integrand():
    for n in (1, 4, 16):
        cn = cutoff_sequence(lambda x: 1.0, n)
        for x in np.linspace(-3 * n, 3 * n, 41):
            assert cn.value(x) == pytest.approx(bump_profile(x / n), abs=1e-12)
            assert abs(cn.derivative(x)) <= 1.0 / n + 1e-15


def test_cutoff_pointwise_limit():
    x = 5.0
    vals = [cutoff_sequence(lambda t: 1.0, n).value(x) for n in (1, 2, 4, 8, 16, 32)]
    assert vals[-1] == pytest.approx(1.0, abs=1e-12)
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))  # monotone approach


def test_cutoff_exponential_support():
    # inner integral e^x - 1 crosses 1.5 n at log(1 + 1.5 n)
    for n in (1, 3, 10):
        cn = cutoff_sequence(lambda x: math.exp(abs(x)), n)
        edge = cn.support_edge(+1)
        assert edge == pytest.approx(math.log(1 + 1.5 * n), abs=1e-6)
        assert cn.value(edge + 0.1) == 0.0


def test_cutoff_one_sided_integrability():
    # f = e^x: the cumulative integral toward -inf stalls at -1, so there is
    # no left support edge, while the right edge is finite
    cn = cutoff_sequence(lambda x: math.exp(x), 2)
    assert cn.support_edge(+1) is not None
    assert cn.support_edge(-1) is None


def test_cutoff_rejects_negative_integrand():
    cn = cutoff_sequence(lambda x: -1.0, 1)
    with pytest.raises(ValueError):
        cn.value(1.0)


def test_gradient_bound_trivial_weight():
    q = hs.parse_scalar("1")
    res = check_gradient_bound(q, lambda x: 1.0, np.linspace(-10, 10, 101))
    assert res.ok and res.C == pytest.approx(0.0, abs=1e-15)


def test_gradient_bound_quadratic_weight():
    # |d/dx (1+x^2)^{-1/2}| peaks at 2 / (3 sqrt(3)) at x = 1/sqrt(2)
    q = hs.parse_scalar("1 + x^2")
    grid = np.linspace(-3, 3, 2001)
    res = check_gradient_bound(q, lambda x: 1.0, grid)
    assert res.ok
    assert res.C == pytest.approx(2.0 / (3.0 * math.sqrt(3.0)), abs=1e-5)


def test_gradient_bound_exponential_weight_halfline():
    q = hs.parse_scalar("exp(2*x)")
    res = check_gradient_bound(q, lambda x: 1.0, np.linspace(0, 20, 401))
    assert res.ok
    assert res.C == pytest.approx(1.0, abs=1e-9)


def test_gradient_bound_fails_on_infinite_speed():
    q = hs.parse_scalar("1 + x^2")
    res = check_gradient_bound(q, lambda x: math.inf, np.linspace(-2, 2, 21))
    assert not res.ok and res.offending_x is not None


def test_certify_free_particle(free_particle_spec):
    cert = hs.certify_selfadjoint(free_particle_spec, route="sturm-liouville")
    assert cert.verdict == "certified"
    assert cert.evidence["gradient_C"] == pytest.approx(0.0, abs=1e-12)
    assert cert.evidence["divergence_+inf"]["verdict"] == DIVERGES
    assert cert.evidence["divergence_-inf"]["verdict"] == DIVERGES
    assert cert.evidence["definite"] is True


def test_certify_oscillator(oscillator_spec):
    cert = hs.certify_selfadjoint(oscillator_spec)
    assert cert.verdict == "certified"


def test_certify_unbounded_below_potential(one, zero1):
    spec = hs.sl_square_spec(one, hs.parse_matrix_function("[[-x^4]]"), one, hs.parse_scalar("1"))
    cert = hs.certify_selfadjoint(spec)
    assert cert.verdict == "hypotheses_failed"
    assert "potential_bound" in cert.failed


def test_certify_quartic_weight_converging_speed(one):
    spec = hs.sl_square_spec(
        one, hs.parse_matrix_function("[[-x^4]]"), one, hs.parse_scalar("1 + x^4")
    )
    cert = hs.certify_selfadjoint(spec)
    assert cert.verdict == "hypotheses_failed"
    assert "speed_integral_+inf" in cert.failed and "speed_integral_-inf" in cert.failed
    assert cert.evidence["divergence_+inf"]["verdict"] == CONVERGES
    assert cert.evidence["gradient_C"] == pytest.approx(2 ** -0.5, abs=1e-4)


def test_certify_bare_route(canonical_h_eye):
    cert = hs.certify_selfadjoint(canonical_h_eye)
    assert cert.route == "bare" and cert.verdict == "certified"


def test_certify_bare_route_one_sided_failure():
    s = hs.SymmetricSystem(
        hs.parse_matrix_function("[[0, 1], [-1, 0]]"),
        hs.parse_matrix_function("[[0, 0], [0, 0]]"),
        hs.parse_matrix_function("[[exp(-2*x), 0], [0, exp(-2*x)]]"),
        hs.Interval.real_line(),
    )
    # c = e^{x}: the reciprocal integral converges toward +inf
    cert = hs.certify_selfadjoint(s)
    assert cert.verdict == "hypotheses_failed"
    assert "speed_integral_+inf" in cert.failed


def test_certify_requires_whole_line(free_particle_halfline):
    with pytest.raises(ValueError):
        hs.certify_selfadjoint(free_particle_halfline)


def test_energy_bound_free_particle(free_particle_spec):
    f1 = hs.parse_vector_function(
        "on [-inf, -1): [[0]]; on [-1, 1): [[(1 - x^2)^2]]; on [1, inf): [[0]]", 1
    )
    res = verify_energy_bound(free_particle_spec, f1)
    assert res.satisfied
    # with J = iI, B = 0, A = 1 the left side is the Dirichlet integral of f1
    from scipy.integrate import quad

    dirichlet = quad(lambda x: (4 * x * (1 - x * x)) ** 2, -1, 1)[0]
    assert res.lhs == pytest.approx(dirichlet, rel=1e-8)
    assert res.C == pytest.approx(0.0, abs=1e-12)


def test_energy_bound_zero_function(free_particle_spec):
    f1 = hs.parse_vector_function("[[0]]", 1)
    res = verify_energy_bound(free_particle_spec, f1)
    assert res.satisfied and res.lhs == 0.0 and res.rhs == 0.0


def test_energy_bound_oscillator_bump(oscillator_spec):
    f1 = hs.parse_vector_function(
        "on [-inf, -1): [[0]]; on [-1, 1): [[(1 - x^2)^4]]; on [1, inf): [[0]]", 1
    )
    res = verify_energy_bound(oscillator_spec, f1)
    assert res.satisfied


def test_energy_bound_rejects_out_of_range_image():
    # H = diag(1, 0) on the bump's support (invertible outside, so the speed
    # hypotheses still hold): the second image component must vanish, a
    # generic bump violates that, and the pair is not a valid max-relation
    # element
    h_src = "on [-inf, -2): [[1, 0], [0, 1]]; on [-2, 2): [[1, 0], [0, 0]]; on [2, inf): [[1, 0], [0, 1]]"
    base = hs.SymmetricSystem(
        hs.constant_field(1j * np.eye(2)),
        hs.constant_field(np.zeros((2, 2))),
        hs.parse_matrix_function(h_src, 2),
        hs.Interval.real_line(),
    )
    spec = hs.SquareSystemSpec(base, hs.constant_field(np.eye(2)),
                               hs.constant_field(np.zeros((2, 2))), hs.parse_scalar("1"))
    bump = "on [-inf, -1): [[0]]; on [-1, 1): [[(1 - x^2)^3]]; on [1, inf): [[0]]"
    f1 = hs.parse_vector_function(bump, 1) + hs.parse_vector_function(bump, 1)
    with pytest.raises(ValueError, match="range"):
        verify_energy_bound(spec, f1)


def test_energy_bound_randomized_bumps(free_particle_spec, oscillator_spec):
    rng = np.random.default_rng(31)
    for spec in (free_particle_spec, oscillator_spec):
        for _ in range(5):
            p = int(rng.integers(2, 5))
            coeffs = rng.uniform(-1, 1, size=3)
            poly = " + ".join(f"({float(c)!r})*x^{k}" for k, c in enumerate(coeffs))
            src = f"on [-inf, -1): [[0]]; on [-1, 1): [[(1 - x^2)^{p} * ({poly})]]; on [1, inf): [[0]]"
            res = verify_energy_bound(spec, hs.parse_vector_function(src, 1))
            assert res.satisfied
