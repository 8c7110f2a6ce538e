import math

import numpy as np
import pytest

import hamsys as hs

from conftest import random_gauge, random_valid_system


def test_validate_example_fixture(example13):
    report = hs.validate(example13)
    assert report.passed
    m = report.max_residuals()
    assert m["skew"] <= 1e-12 and m["symmetry"] <= 1e-12


def test_validate_hermitian_b_passes():
    s = hs.SymmetricSystem(
        hs.parse_matrix_function("[[0, 1], [-1, 0]]"),
        hs.parse_matrix_function("[[1, 0], [0, 0]]"),
        hs.parse_matrix_function("[[1, 0], [0, 1]]"),
        hs.Interval.real_line(),
    )
    assert hs.validate(s).passed


def test_validate_detects_broken_symmetry():
    s = hs.SymmetricSystem(
        hs.parse_matrix_function("[[0, 1], [-1, 0]]"),
        hs.parse_matrix_function("[[0, 1], [0, 0]]"),
        hs.parse_matrix_function("[[1, 0], [0, 1]]"),
        hs.Interval.real_line(),
    )
    report = hs.validate(s)
    assert not report.passed
    assert report.max_residuals()["symmetry"] == pytest.approx(1.0, rel=1e-9)
    assert any("B - B* != J'" in f for f in report.failures)


def test_sl_embed_free_particle_blocks(free_particle_line):
    x = 0.7
    assert np.allclose(free_particle_line.J.evaluate(x), [[0, 1j], [1j, 0]])
    assert np.allclose(free_particle_line.B.evaluate(x), np.diag([0.0, -1.0]))
    assert np.allclose(free_particle_line.H.evaluate(x), np.diag([1.0, 0.0]))
    rep = hs.validate(free_particle_line)
    assert rep.passed
    m = rep.max_residuals()
    assert max(m["skew"], m["symmetry"], m["h_hermitian"]) <= 1e-12  # exact block identities


def test_sl_embed_oscillator_blocks(one):
    sys2 = hs.sl_embed(one, hs.parse_matrix_function("[[x^2]]"), one)
    assert np.allclose(sys2.B.evaluate(1.5), np.diag([2.25, -1.0]))
    assert np.allclose(sys2.J.evaluate(1.5), [[0, 1j], [1j, 0]])


def test_sl_embed_block_pattern_n2():
    eye2 = hs.constant_field(np.eye(2))
    zero2 = hs.constant_field(np.zeros((2, 2)))
    sys4 = hs.sl_embed(eye2, zero2, eye2)
    assert sys4.n == 4
    J = sys4.J.evaluate(0.0)
    assert np.allclose(J[:2, 2:], 1j * np.eye(2)) and np.allclose(J[2:, :2], 1j * np.eye(2))
    assert np.allclose(J[:2, :2], 0) and np.allclose(J[2:, 2:], 0)
    assert hs.validate(sys4).passed


def test_sl_embed_requires_positive_definite_a(one):
    with pytest.raises(ValueError):
        hs.sl_embed(hs.parse_matrix_function("[[0]]"), one, one)


def test_square_system_literal_square(canonical_h_eye):
    spec = hs.SquareSystemSpec(
        canonical_h_eye,
        A=canonical_h_eye.H,
        V=hs.constant_field(np.zeros((2, 2))),
        q=hs.parse_scalar("1"),
    )
    sq = hs.square_system(spec)
    assert sq.n == 4
    J = sq.J.evaluate(0.3)
    j2 = np.array([[0, 1], [-1, 0]])
    assert np.allclose(J[:2, 2:], j2) and np.allclose(J[2:, :2], j2)
    B = sq.B.evaluate(0.3)
    assert np.allclose(B[:2, :2], 0) and np.allclose(B[2:, 2:], -np.eye(2))
    H = sq.H.evaluate(0.3)
    assert np.allclose(H[:2, :2], np.eye(2)) and np.allclose(H[2:, 2:], 0)
    rep = hs.validate(sq)
    assert rep.passed and max(rep.max_residuals()["skew"], rep.max_residuals()["symmetry"]) <= 1e-12


def test_square_system_scalar_i_base(one, zero1):
    base = hs.SymmetricSystem(
        hs.parse_matrix_function("[[i]]"), zero1, one, hs.Interval.real_line()
    )
    spec = hs.SquareSystemSpec(base, A=one, V=zero1, q=hs.parse_scalar("1"))
    sq = hs.square_system(spec)
    assert np.allclose(sq.J.evaluate(0.0), [[0, 1j], [1j, 0]])


def test_square_system_matches_sl_embed_for_oscillator(one):
    vx2 = hs.parse_matrix_function("[[x^2]]")
    emb = hs.sl_embed(one, vx2, one)
    sq = hs.square_system(hs.sl_square_spec(one, vx2, one, hs.parse_scalar("1")))
    for x in (-2.0, 0.0, 1.5):
        assert np.allclose(emb.J.evaluate(x), sq.J.evaluate(x), atol=1e-14)
        assert np.allclose(emb.B.evaluate(x), sq.B.evaluate(x), atol=1e-14)
        assert np.allclose(emb.H.evaluate(x), sq.H.evaluate(x), atol=1e-14)


def test_square_spec_invariants_checked(canonical_h_eye):
    bad = hs.SquareSystemSpec(
        canonical_h_eye,
        A=hs.constant_field(np.diag([1.0, -1.0])),  # not PSD
        V=hs.constant_field(np.zeros((2, 2))),
        q=hs.parse_scalar("1"),
    )
    with pytest.raises(ValueError):
        hs.square_system(bad)
    bad_q = hs.SquareSystemSpec(
        canonical_h_eye,
        A=canonical_h_eye.H,
        V=hs.constant_field(np.zeros((2, 2))),
        q=hs.parse_scalar("1/2"),
    )
    with pytest.raises(ValueError):
        hs.square_system(bad_q)


def test_gauge_identity(free_particle_line):
    gauge = hs.GaugeTransform(hs.constant_field(np.eye(2)))
    out = hs.gauge_apply(free_particle_line, gauge)
    for x in (-1.0, 0.5, 2.0):
        assert np.allclose(out.J.evaluate(x), free_particle_line.J.evaluate(x))
        assert np.allclose(out.B.evaluate(x), free_particle_line.B.evaluate(x))
        assert np.allclose(out.H.evaluate(x), free_particle_line.H.evaluate(x))


def test_gauge_scalar_unitary(free_particle_line):
    theta = 0.73
    u = hs.constant_field(np.exp(1j * theta) * np.eye(2))
    out = hs.gauge_apply(free_particle_line, hs.GaugeTransform(u))
    for x in (-1.0, 0.5):
        assert np.allclose(out.J.evaluate(x), free_particle_line.J.evaluate(x), atol=1e-14)
        assert np.allclose(out.B.evaluate(x), free_particle_line.B.evaluate(x), atol=1e-14)
        assert np.allclose(out.H.evaluate(x), free_particle_line.H.evaluate(x), atol=1e-14)


def test_gauge_free_particle_frame(free_particle_line):
    # U is the homogeneous fundamental solution; hand multiplication gives
    # a constant J, vanishing B and H = [[1, -ix], [ix, x^2]].
    u = hs.parse_matrix_function("[[1, -i*x], [0, 1]]")
    out = hs.gauge_apply(free_particle_line, hs.GaugeTransform(u))
    for x in (-2.0, 0.0, 3.0):
        assert np.allclose(out.J.evaluate(x), [[0, 1j], [1j, 0]], atol=1e-14)
        assert np.allclose(out.B.evaluate(x), 0, atol=1e-14)
        assert np.allclose(out.H.evaluate(x), [[1, -1j * x], [1j * x, x * x]], atol=1e-13)
    assert hs.validate(out, np.linspace(-3, 3, 31)).passed


def test_gauge_preserves_validation():
    rng = np.random.default_rng(2024)
    grid = np.linspace(-4, 4, 41)
    for k in range(5):
        s = random_valid_system(rng, n=2, varying_j=(k % 2 == 0))
        gauge = random_gauge(rng, 2)
        out = hs.gauge_apply(s, gauge)
        rep = hs.validate(out, grid, tol=1e-8)
        assert rep.passed, rep.summary()


def test_gauge_rejects_singular_frame(free_particle_line):
    gauge = hs.GaugeTransform(hs.parse_matrix_function("[[x, 0], [0, 1]]"))  # singular at 0
    with pytest.raises(ValueError, match="singular"):
        hs.gauge_apply(free_particle_line, gauge)


def test_gauge_composition_roundtrip():
    rng = np.random.default_rng(5)
    s = random_valid_system(rng, n=2)
    gauge = random_gauge(rng, 2)
    back = hs.gauge_apply(hs.gauge_apply(s, gauge), gauge.inverse())
    for x in np.linspace(-2, 2, 9):
        assert np.linalg.norm(back.J.evaluate(x) - s.J.evaluate(x)) <= 1e-8
        assert np.linalg.norm(back.B.evaluate(x) - s.B.evaluate(x)) <= 1e-8
        assert np.linalg.norm(back.H.evaluate(x) - s.H.evaluate(x)) <= 1e-8


def test_canonical_reduce_noop_for_canonical(canonical_h_eye):
    grid = np.linspace(-3, 3, 21)
    gauge, red = hs.canonical_reduce(canonical_h_eye, grid)
    for x in grid:
        assert np.allclose(gauge.u(x), np.eye(2), atol=1e-10)
        assert np.allclose(red.J.evaluate(x), canonical_h_eye.J.evaluate(x), atol=1e-10)
        assert np.linalg.norm(red.B.evaluate(x)) <= 1e-10


def test_canonical_reduce_free_particle(free_particle_line):
    grid = np.linspace(-5, 5, 41)
    gauge, red = hs.canonical_reduce(free_particle_line, grid)
    j0 = np.array([[0, 1j], [1j, 0]])
    for x in grid:
        assert np.linalg.norm(gauge.u(x) - [[1, -1j * x], [0, 1]]) <= 1e-8
        assert np.linalg.norm(red.B.evaluate(x)) <= 1e-8
        assert np.linalg.norm(red.J.evaluate(x) - j0) <= 1e-8


def test_canonical_reduce_example_unchanged(example13):
    grid = np.linspace(-2, 2, 11)
    gauge, red = hs.canonical_reduce(example13, grid)
    for x in grid:
        assert np.allclose(gauge.u(x), np.eye(2), atol=1e-10)
        assert np.allclose(red.H.evaluate(x), example13.H.evaluate(x), atol=1e-10)
