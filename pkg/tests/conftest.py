import math

import numpy as np
import pytest

import hamsys as hs


def fmt_c(z: complex) -> str:
    """Format a complex number as DSL source."""
    z = complex(z)
    return f"({z.real!r} + {z.imag!r}*i)"


def matrix_text(m, entry=None) -> str:
    m = np.asarray(m, dtype=complex)
    entry = entry or (lambda z: fmt_c(z))
    rows = ", ".join("[" + ", ".join(entry(v) for v in row) + "]" for row in m)
    return f"[{rows}]"


@pytest.fixture(scope="session")
def example13():
    """B = 0, constant skew J, rank-one H: the minimal-domain fixture."""
    return hs.SymmetricSystem(
        hs.parse_matrix_function("[[0, 1], [-1, 0]]"),
        hs.parse_matrix_function("[[0, 0], [0, 0]]"),
        hs.parse_matrix_function("[[1, 0], [0, 0]]"),
        hs.Interval.real_line(),
    )


@pytest.fixture(scope="session")
def canonical_h_eye():
    """Canonical system with H = I (definite, nowhere singular)."""
    return hs.SymmetricSystem(
        hs.parse_matrix_function("[[0, 1], [-1, 0]]"),
        hs.parse_matrix_function("[[0, 0], [0, 0]]"),
        hs.parse_matrix_function("[[1, 0], [0, 1]]"),
        hs.Interval.real_line(),
    )


@pytest.fixture(scope="session")
def one():
    return hs.parse_matrix_function("[[1]]")


@pytest.fixture(scope="session")
def zero1():
    return hs.parse_matrix_function("[[0]]")


@pytest.fixture(scope="session")
def free_particle_line(one, zero1):
    return hs.sl_embed(one, zero1, one)


@pytest.fixture(scope="session")
def free_particle_halfline(one, zero1):
    return hs.sl_embed(one, zero1, one, hs.Interval(0.0, math.inf, True, False))


@pytest.fixture(scope="session")
def oscillator_halfline(one):
    vx2 = hs.parse_matrix_function("[[x^2]]")
    return hs.sl_embed(one, vx2, one, hs.Interval(0.0, math.inf, True, False))


@pytest.fixture(scope="session")
def free_particle_spec(one, zero1):
    return hs.sl_square_spec(one, zero1, one, hs.parse_scalar("1"))


@pytest.fixture(scope="session")
def oscillator_spec(one):
    return hs.sl_square_spec(one, hs.parse_matrix_function("[[x^2]]"), one, hs.parse_scalar("1"))


def skew_invertible(rng, n):
    """A constant skew-adjoint matrix with singular values bounded below 1."""
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    k = m - m.conj().T
    shift = 1.0 + float(np.abs(np.linalg.eigvalsh(1j * k)).max())
    return k + 1j * shift * np.eye(n)


def hermitian(rng, n, scale=1.0):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (m + m.conj().T)


def psd(rng, n, rank=None, scale=1.0):
    rank = rank or n
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    return scale * (g @ g.conj().T) / rank


def random_valid_system(rng, n=2, varying_j=False, singular_h=False):
    """A structurally valid system built through the DSL (exercises the parser)."""
    j0 = skew_invertible(rng, n)
    s0 = hermitian(rng, n)
    s1 = hermitian(rng, n, scale=0.5)
    h0 = psd(rng, n, rank=1 if singular_h else n)
    h1 = psd(rng, n, scale=0.5)
    if varying_j:
        j1 = 0.1 * (lambda m: m - m.conj().T)(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        # J(x) = j0 + sin(x) j1 entrywise; B picks up the +J'/2 correction
        j_entries = [
            [f"{fmt_c(j0[i, k])} + sin(x)*{fmt_c(j1[i, k])}" for k in range(n)]
            for i in range(n)
        ]
        b_entries = [
            [
                f"{fmt_c(s0[i, k])} + sin(x)*{fmt_c(s1[i, k])} + cos(x)*{fmt_c(j1[i, k] / 2)}"
                for k in range(n)
            ]
            for i in range(n)
        ]
    else:
        j_entries = [[fmt_c(j0[i, k]) for k in range(n)] for i in range(n)]
        b_entries = [
            [f"{fmt_c(s0[i, k])} + sin(x)*{fmt_c(s1[i, k])}" for k in range(n)]
            for i in range(n)
        ]
    h_entries = [
        [f"{fmt_c(h0[i, k])} + sin(x)^2*{fmt_c(h1[i, k])}" for k in range(n)]
        for i in range(n)
    ]

    def assemble(entries):
        rows = ", ".join("[" + ", ".join(row) + "]" for row in entries)
        return hs.parse_matrix_function(f"[{rows}]", n)

    return hs.SymmetricSystem(
        assemble(j_entries), assemble(b_entries), assemble(h_entries), hs.Interval.real_line()
    )


def random_gauge(rng, n):
    """Smooth invertible U(x) = (I + sin(x) N) D with N strictly upper triangular."""
    nmat = np.triu(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), k=1)
    d = rng.uniform(0.5, 2.0, size=n) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=n))
    entries = []
    for i in range(n):
        row = []
        for k in range(n):
            base = fmt_c(d[k]) if i == k else "0"
            row.append(f"{base} + sin(x)*{fmt_c(nmat[i, k] * d[k])}")
        entries.append(row)
    rows = ", ".join("[" + ", ".join(row) + "]" for row in entries)
    return hs.GaugeTransform(hs.parse_matrix_function(f"[{rows}]", n))


def random_unitary(rng, n):
    """Product of two Householder reflections (exactly unitary)."""
    u = np.eye(n, dtype=complex)
    for _ in range(2):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        v = v / np.linalg.norm(v)
        u = u @ (np.eye(n) - 2.0 * np.outer(v, v.conj()))
    return u
