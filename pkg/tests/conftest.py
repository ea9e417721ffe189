"""Shared fixtures and independent oracle helpers."""

import mpmath as mp
import numpy as np
import pytest

from monoscat import build_grid, directions


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_dirs():
    return directions(8)


@pytest.fixture
def small_grid():
    return build_grid(5.0, 4)


def random_hermitian(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_spd(rng, n, shift=0.1):
    """Well-conditioned Hermitian positive definite matrix."""
    c = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    s = c @ c.conj().T + shift * np.eye(n)
    return s / np.linalg.norm(s, 2)


def mp_sensitivity_matrix(k, grid, pixel, dirs, dps=220):
    """Single-pixel Born matrix rebuilt in arbitrary precision.

    The entries must be evaluated at the target precision already: the
    smallest eigenvalues sit so far below the largest that entries rounded
    to double precision would perturb the matrix into indefiniteness.
    """
    old = mp.mp.dps
    mp.mp.dps = dps
    try:
        n = dirs.n
        ell = mp.mpf(grid.spacing)
        kk = mp.mpf(k)
        z0, z1 = (mp.mpf(c) for c in grid.centers[pixel])
        vecs = [(mp.cos(2 * mp.pi * j / n), mp.sin(2 * mp.pi * j / n))
                for j in range(n)]

        def msinc(x):
            return mp.mpf(1) if x == 0 else mp.sin(x) / x

        a = mp.matrix(n, n)
        scale = (2 * mp.pi / n) * (kk * ell) ** 2
        for l in range(n):
            for j in range(n):
                d0 = vecs[j][0] - vecs[l][0]
                d1 = vecs[j][1] - vecs[l][1]
                phase = mp.e ** (1j * kk * (z0 * d0 + z1 * d1))
                a[l, j] = scale * phase * msinc(kk * ell * d0 / 2) \
                    * msinc(kk * ell * d1 / 2)
        return a
    finally:
        mp.mp.dps = old


def mp_is_positive_definite(a, dps=220):
    """Positive definiteness via arbitrary-precision Cholesky.

    Needed because the smallest eigenvalues of the pixel Born matrices lie
    far below double-precision roundoff.
    """
    old = mp.mp.dps
    mp.mp.dps = dps
    try:
        mp.cholesky(a)
        return True
    except ValueError:
        return False
    finally:
        mp.mp.dps = old
