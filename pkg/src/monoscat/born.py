"""Closed-form Born sensitivity matrices and the linearized residual.

Each pixel P_m of the reconstruction grid contributes a Hermitian N x N
matrix whose (l, j) entry is the single-pixel Born far-field response

    (2 pi / N) (k l)^2 exp(i k z_m . (theta_j - theta_l))
        * sinc(k l (theta_j - theta_l)_1 / 2)
        * sinc(k l (theta_j - theta_l)_2 / 2),

with l the pixel side length and z_m the pixel center.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DefinitenessError, InputError
from .geometry import ContrastField, DirectionSet, PixelGrid
from .special import sinc

# Relative slack for the runtime positive-definiteness sample check: the
# smallest eigenvalues of S_m fall far below double roundoff at desk scale,
# so eigh can only certify "not significantly negative".
_PD_SAMPLE_TOL = 1e-12


def _direction_differences(dirs: DirectionSet):
    """d[l, j, :] = theta_j - theta_l."""
    v = dirs.vectors
    return v[None, :, :] - v[:, None, :]


def sensitivity_matrix(k, grid: PixelGrid, pixel: int, dirs: DirectionSet):
    if not 0 <= pixel < grid.n_pixels:
        raise InputError(f"pixel index {pixel} out of range [0, {grid.n_pixels})")
    d = _direction_differences(dirs)
    ell = grid.spacing
    phase = np.exp(1j * k * (d @ grid.centers[pixel]))
    window = sinc(0.5 * k * ell * d[:, :, 0]) * sinc(0.5 * k * ell * d[:, :, 1])
    return (2.0 * np.pi / dirs.n) * (k * ell) ** 2 * phase * window


@dataclass(frozen=True)
class SensitivityStack:
    """All M single-pixel Born matrices for one grid/direction pairing.

    ``matrices`` has shape (M, N, N); each slice is Hermitian and (in exact
    arithmetic) positive definite with constant diagonal (2 pi/N)(k l)^2.
    """

    grid: PixelGrid
    dirs: DirectionSet
    wave_number: float
    matrices: np.ndarray

    @property
    def n_pixels(self):
        return self.grid.n_pixels


def sensitivity_stack(k, grid: PixelGrid, dirs: DirectionSet,
                      check_fraction=0.01, rng=None) -> SensitivityStack:
    """Assemble all pixel sensitivity matrices at once.

    A random sample (``check_fraction`` of the pixels, at least one) is
    screened for significantly negative eigenvalues.
    """
    d = _direction_differences(dirs)
    ell = grid.spacing
    window = sinc(0.5 * k * ell * d[:, :, 0]) * sinc(0.5 * k * ell * d[:, :, 1])
    phases = np.exp(1j * k * np.einsum("mc,ljc->mlj", grid.centers, d))
    matrices = (2.0 * np.pi / dirs.n) * (k * ell) ** 2 * phases * window[None]
    stack = SensitivityStack(grid=grid, dirs=dirs, wave_number=float(k),
                             matrices=matrices)
    rng = np.random.default_rng(0) if rng is None else rng
    n_check = max(1, int(round(check_fraction * grid.n_pixels)))
    sample = rng.choice(grid.n_pixels, size=min(n_check, grid.n_pixels),
                        replace=False)
    for m in sample:
        w = np.linalg.eigvalsh(matrices[m])
        if w[-1] <= 0 or w[0] < -_PD_SAMPLE_TOL * w[-1]:
            raise DefinitenessError(
                f"sensitivity matrix for pixel {m} has significantly "
                f"negative eigenvalue {w[0]:.3e}")
    return stack


def born_far_field(stack: SensitivityStack, h: ContrastField):
    """Linearized far-field matrix sum_m a_m S_m."""
    if h.grid.n_pixels != stack.n_pixels or h.grid.side != stack.grid.side:
        raise InputError("contrast field grid does not match the stack grid")
    return np.tensordot(h.coefficients, stack.matrices, axes=1)


def linearized_residual(v_delta, stack: SensitivityStack, h: ContrastField):
    """R = V_delta - sum_m a_m S_m (Hermitian for Hermitian V_delta)."""
    v_delta = np.asarray(v_delta, dtype=complex)
    n = stack.dirs.n
    if v_delta.shape != (n, n):
        raise InputError(f"expected a {n} x {n} data matrix, got {v_delta.shape}")
    return v_delta - born_far_field(stack, h)
