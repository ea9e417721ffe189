"""Forward simulation of far-field matrices.

Plane-wave scattering by a rasterized contrast is computed with a dense
Lippmann-Schwinger volume collocation solver on the forward grid; the
analytic series solution for a penetrable disk serves as an independent
oracle.  Calibrated uniform noise is injected in spectral norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.special as sp

from .exceptions import InputError, OracleError
from .geometry import ContrastField, DirectionSet, PixelGrid
from .linalg import solve_dense, spectral_norm
from .special import green2d, hankel1

RNG_ALGORITHM = "numpy-pcg64"


@dataclass(frozen=True)
class FarFieldMatrix:
    """Direction-sampled far-field data, entry(l, m) = (2 pi/N) u_inf(x_l; theta_m)."""

    wave_number: float
    dirs: DirectionSet
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        n = self.dirs.n
        if v.shape != (n, n):
            raise InputError(f"expected a {n} x {n} matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v.view(float))):
            raise InputError("far-field matrix contains non-finite entries")

    @property
    def n(self):
        return self.dirs.n


@dataclass(frozen=True)
class ForwardField:
    """Total fields on the active (positive-contrast) forward-grid cells.

    ``fields[:, m]`` is the total field for incident direction theta_m,
    sampled at ``grid.centers[active]``.
    """

    wave_number: float
    grid: PixelGrid
    contrast: ContrastField
    dirs: DirectionSet
    active: np.ndarray   # indices of cells with positive contrast
    fields: np.ndarray   # shape (n_active, N)


@dataclass(frozen=True)
class NoiseModel:
    """Spectral-norm calibrated uniform noise."""

    delta: float
    seed: int

    def __post_init__(self):
        if self.delta < 0:
            raise InputError(f"noise level must be >= 0, got {self.delta}")


def self_cell_weight(k, cell_size):
    """Closed form for the Green's function integrated over one grid cell.

    The square cell is replaced by the equal-area disk of radius
    rho = cell_size/sqrt(pi), for which the polar integral of
    (i/4) H0(k r) is (i pi rho / (2k)) H1(k rho) - 1/k^2.
    """
    rho = cell_size / np.sqrt(np.pi)
    return 1j * np.pi * rho / (2.0 * k) * hankel1(1, k * rho) - 1.0 / k**2


def self_cell_weight_quadrature(k, cell_size):
    """Adaptive polar quadrature of the equal-area-disk self integral."""
    from scipy.integrate import quad

    rho = cell_size / np.sqrt(np.pi)
    re = quad(lambda r: 2.0 * np.pi * r * np.real(green2d(k, r)), 0.0, rho,
              limit=200)[0]
    im = quad(lambda r: 2.0 * np.pi * r * np.imag(green2d(k, r)), 0.0, rho,
              limit=200)[0]
    return re + 1j * im


def _green_matrix(k, points, cell_size):
    """Cell-integrated Green's kernel: midpoint weights off the diagonal,
    the equal-area-disk closed form on it."""
    diff = points[:, None, :] - points[None, :, :]
    r = np.sqrt(np.einsum("ijc,ijc->ij", diff, diff))
    np.fill_diagonal(r, 1.0)
    g = np.asarray(green2d(k, r)) * cell_size**2
    np.fill_diagonal(g, self_cell_weight(k, cell_size))
    return g


def solve_total_fields(k, contrast: ContrastField, dirs: DirectionSet) -> ForwardField:
    """Dense Lippmann-Schwinger collocation solve u = u_inc + k^2 G (q u)."""
    if k <= 0:
        raise InputError(f"wavenumber must be positive, got {k}")
    active = np.flatnonzero(contrast.coefficients > 0)
    points = contrast.grid.centers[active]
    u_inc = np.exp(1j * k * points @ dirs.vectors.T)
    if len(active) == 0:
        return ForwardField(wave_number=float(k), grid=contrast.grid,
                            contrast=contrast, dirs=dirs, active=active,
                            fields=u_inc)
    q = contrast.coefficients[active]
    g = _green_matrix(k, points, contrast.grid.spacing)
    system = np.eye(len(active)) - k**2 * g * q[None, :]
    fields = solve_dense(system, u_inc)
    resid = np.linalg.norm(system @ fields - u_inc)
    if resid > 1e-10 * max(np.linalg.norm(u_inc), 1e-300):
        raise InputError(f"Lippmann-Schwinger solve residual too large: {resid:.3e}")
    return ForwardField(wave_number=float(k), grid=contrast.grid,
                        contrast=contrast, dirs=dirs, active=active,
                        fields=fields)


def _assemble_far_field(k, points, weighted_fields, dirs: DirectionSet):
    # entry(l, m) = (2 pi/N) k^2 sum_j w_j u_j(theta_m) exp(-i k x_l . z_j)
    phases = np.exp(-1j * k * dirs.vectors @ points.T)
    return (2.0 * np.pi / dirs.n) * k**2 * phases @ weighted_fields


def far_field_matrix(k, contrast: ContrastField, dirs: DirectionSet,
                     field: ForwardField = None) -> FarFieldMatrix:
    """Far-field matrix of the Lippmann-Schwinger solution (scale 2 pi/N)."""
    if field is None:
        field = solve_total_fields(k, contrast, dirs)
    points = contrast.grid.centers[field.active]
    q = contrast.coefficients[field.active]
    w = contrast.grid.spacing**2 * q
    values = _assemble_far_field(k, points, w[:, None] * field.fields, dirs)
    return FarFieldMatrix(wave_number=float(k), dirs=dirs, values=values)


def linearized_far_field(k, contrast: ContrastField, dirs: DirectionSet) -> FarFieldMatrix:
    """Born far field on the forward grid: the incident field replaces the
    total field, with the same midpoint quadrature as far_field_matrix."""
    active = np.flatnonzero(contrast.coefficients > 0)
    points = contrast.grid.centers[active]
    q = contrast.coefficients[active]
    u_inc = np.exp(1j * k * points @ dirs.vectors.T)
    w = contrast.grid.spacing**2 * q
    values = _assemble_far_field(k, points, w[:, None] * u_inc, dirs)
    return FarFieldMatrix(wave_number=float(k), dirs=dirs, values=values)


def disk_mie_far_field(k, q, radius, center, dirs: DirectionSet,
                       tol=1e-14, max_terms=200) -> FarFieldMatrix:
    """Separation-of-variables far field for a homogeneous disk.

    The interior wavenumber is k sqrt(1+q); expansion coefficients follow
    from continuity of the field and its radial derivative at the boundary.
    Normalization matches the volume-potential far-field convention used by
    ``far_field_matrix`` (amplitude factor e^{i pi/4}/sqrt(8 pi k)), and a
    translated disk picks up the phase e^{i k (theta - x_hat) . center}.
    """
    if q <= 0 or radius <= 0:
        raise InputError("disk oracle requires q > 0 and radius > 0")
    ki = k * np.sqrt(1.0 + q)
    x, xi = k * radius, ki * radius

    coeffs = []
    peak = 0.0
    for n in range(max_terms + 1):
        jn_x, jn_xi = sp.jv(n, x), sp.jv(n, xi)
        djn_x, djn_xi = sp.jvp(n, x), sp.jvp(n, xi)
        hn_x, dhn_x = sp.hankel1(n, x), sp.h1vp(n, x)
        num = k * djn_x * jn_xi - ki * jn_x * djn_xi
        den = k * dhn_x * jn_xi - ki * hn_x * djn_xi
        a_n = -num / den
        coeffs.append(a_n)
        peak = max(peak, abs(a_n))
        if n > 0 and abs(a_n) < tol * max(peak, 1.0):
            break
    else:
        raise OracleError(f"disk series did not converge in {max_terms} terms")
    coeffs = np.array(coeffs)

    # u_inf(x_hat; theta) = -4i sum_n a_n e^{i n (phi_obs - phi_inc)}
    dphi = dirs.angles[:, None] - dirs.angles[None, :]
    series = np.full_like(dphi, coeffs[0], dtype=complex)
    for n in range(1, len(coeffs)):
        series += 2.0 * coeffs[n] * np.cos(n * dphi)
    u_inf = -4.0j * series

    center = np.asarray(center, dtype=float)
    shift = dirs.vectors[None, :, :] - dirs.vectors[:, None, :]  # theta_m - x_l
    u_inf = u_inf * np.exp(1j * k * (shift @ center))
    return FarFieldMatrix(wave_number=float(k), dirs=dirs,
                          values=(2.0 * np.pi / dirs.n) * u_inf)


def add_noise(farfield: FarFieldMatrix, noise: NoiseModel) -> FarFieldMatrix:
    """F + delta E/||E||_2 with E drawn entrywise uniform on [-1,1] (+i[-1,1])."""
    if noise.delta == 0:
        return farfield
    rng = np.random.default_rng(noise.seed)
    n = farfield.n
    e = rng.uniform(-1.0, 1.0, (n, n)) + 1j * rng.uniform(-1.0, 1.0, (n, n))
    perturbed = farfield.values + noise.delta * e / spectral_norm(e)
    return FarFieldMatrix(wave_number=farfield.wave_number, dirs=farfield.dirs,
                          values=perturbed)
