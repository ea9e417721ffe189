"""Per-pixel monotonicity bounds.

For each pixel the defect count (negative eigenvalues of the shifted
residual at the q_min probe) and the largest admissible pixel weight
beta* are computed; together they define the admissible box for the
reconstruction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .born import SensitivityStack
from .exceptions import DefinitenessError, InputError
from .linalg import hermitian_part, spectral_norm

# Defect eigenvalues within this relative band below zero are treated as
# zero so that counts do not flicker at machine precision.
DEFECT_ZERO_BAND = 1e-12

# Sensitivity-matrix eigenvalues below this fraction of the largest are not
# resolvable in double precision; the corresponding pencil directions are
# classified by the sign of the numerator quadratic form instead.
PENCIL_RANK_CUTOFF = 1e-13


@dataclass(frozen=True)
class MonotonicityBounds:
    """Admissible-box data: defect counts, beta* and b = min(q_min, beta*)."""

    defects: np.ndarray      # integer per pixel
    beta_star: np.ndarray    # in [0, q_min]
    box_upper: np.ndarray    # min(q_min, beta_star)
    q_min: float
    delta: float


def defect_count(v_delta, s_m, q_min, delta) -> int:
    """Number of strictly negative eigenvalues of V - q_min S_m + delta I.

    Eigenvalues in [-band, 0] with band = 1e-12 (||V||_2 + q_min ||S_m||_2)
    count as zero.
    """
    if q_min <= 0:
        raise InputError(f"q_min must be positive, got {q_min}")
    if delta < 0:
        raise InputError(f"delta must be >= 0, got {delta}")
    v_delta = hermitian_part(v_delta)
    s_m = hermitian_part(s_m)
    n = v_delta.shape[0]
    a = v_delta - q_min * s_m + delta * np.eye(n)
    scale = spectral_norm(v_delta) + q_min * spectral_norm(s_m)
    w = np.linalg.eigvalsh(a)
    return int(np.sum(w < -DEFECT_ZERO_BAND * scale))


def _pencil_eigenvalues(a, s, cutoff=PENCIL_RANK_CUTOFF):
    """Generalized eigenvalues of A x = mu S x for Hermitian A and
    positive (semi)definite S, via congruence on S's resolvable subspace.

    Returns (n_neg_inf, mu_finite_ascending, n_pos_inf): directions where
    S is numerically singular contribute +/- infinity according to the
    sign of the A quadratic form there.
    """
    lam, u = np.linalg.eigh(s)
    lam_max = lam[-1]
    if lam_max <= 0:
        raise DefinitenessError("pencil mass matrix is not positive definite")
    keep = lam >= cutoff * lam_max
    u_keep, u_drop = u[:, keep], u[:, ~keep]
    inv_sqrt = 1.0 / np.sqrt(lam[keep])
    w = (inv_sqrt[:, None] * (u_keep.conj().T @ a @ u_keep)) * inv_sqrt[None, :]
    mu = np.linalg.eigvalsh(hermitian_part(w))
    n_neg_inf = n_pos_inf = 0
    if u_drop.shape[1]:
        block = np.linalg.eigvalsh(hermitian_part(u_drop.conj().T @ a @ u_drop))
        tol = DEFECT_ZERO_BAND * max(spectral_norm(a), 1e-300)
        n_neg_inf = int(np.sum(block < -tol))
        n_pos_inf = u_drop.shape[1] - n_neg_inf
    return n_neg_inf, mu, n_pos_inf


def beta_star(v_delta, s_m, defect, delta, q_min) -> float:
    """Largest beta >= 0 such that V + delta I - beta S_m has at most
    ``defect`` negative eigenvalues, capped at q_min.

    Computed from the generalized eigenvalues mu of (V + delta I) x =
    mu S_m x via Sylvester inertia: the answer is the (defect+1)-smallest
    mu, clamped to [0, q_min].
    """
    if q_min <= 0:
        raise InputError(f"q_min must be positive, got {q_min}")
    if delta < 0:
        raise InputError(f"delta must be >= 0, got {delta}")
    v_delta = hermitian_part(v_delta)
    s_m = hermitian_part(s_m)
    n = v_delta.shape[0]
    if not 0 <= defect <= n:
        raise InputError(f"defect count must be in [0, {n}], got {defect}")
    if defect >= n:
        return float(q_min)
    a = v_delta + delta * np.eye(n)
    n_neg_inf, mu, _ = _pencil_eigenvalues(a, s_m)
    idx = defect - n_neg_inf
    if idx < 0:
        return 0.0
    if idx >= len(mu):
        return float(q_min)
    return float(np.clip(mu[idx], 0.0, q_min))


def beta_star_bisection_oracle(v_delta, s_m, defect, delta, q_min,
                               iterations=60) -> float:
    """Independent check: bisection on beta in [0, q_min] against the
    predicate 'V + delta I - beta S_m has at most ``defect`` negative
    eigenvalues' evaluated by dense Hermitian eigendecomposition."""
    v_delta = hermitian_part(v_delta)
    s_m = hermitian_part(s_m)
    n = v_delta.shape[0]
    a = v_delta + delta * np.eye(n)

    def admissible(beta):
        w = np.linalg.eigvalsh(a - beta * s_m)
        return int(np.sum(w < 0)) <= defect

    if not admissible(0.0):
        return 0.0
    if admissible(q_min):
        return float(q_min)
    lo, hi = 0.0, float(q_min)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def admissible_bounds(v_delta, stack: SensitivityStack, q_min, delta) -> MonotonicityBounds:
    """Defect counts and beta* for every pixel of the stack's grid."""
    v_delta = hermitian_part(v_delta)
    m_pixels = stack.n_pixels
    defects = np.zeros(m_pixels, dtype=int)
    betas = np.zeros(m_pixels)
    for m in range(m_pixels):
        s_m = stack.matrices[m]
        defects[m] = defect_count(v_delta, s_m, q_min, delta)
        betas[m] = beta_star(v_delta, s_m, defects[m], delta, q_min)
    box = np.minimum(q_min, betas)
    return MonotonicityBounds(defects=defects, beta_star=betas, box_upper=box,
                              q_min=float(q_min), delta=float(delta))
