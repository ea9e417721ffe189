"""Spectral objective minimization over the admissible box, plus the
Tikhonov and factorization baselines and support quality metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .born import SensitivityStack
from .exceptions import ConfigError, InputError
from .forward import FarFieldMatrix
from .geometry import PixelGrid
from .linalg import hermitian_part
from .monotonicity import MonotonicityBounds

FACTORIZATION_EIG_CUTOFF = 1e-14


@dataclass(frozen=True)
class OptimizerOptions:
    max_iters: int = 500
    tol: float = 1e-8
    stagnation_window: int = 50
    first_step_fraction: float = 0.05

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol < 0 or self.stagnation_window < 1:
            raise ConfigError("invalid optimizer options")


@dataclass(frozen=True)
class ReconstructionResult:
    coefficients: np.ndarray
    objective_trace: list          # (iteration, best objective value)
    positive_eigenvalue_sum: float
    frobenius_residual: float
    iterations: int
    stop_reason: str


@dataclass(frozen=True)
class IndicatorField:
    grid: PixelGrid
    values: np.ndarray
    method: str
    metadata: dict = field(default_factory=dict)


def spectral_objective(r, alpha) -> float:
    """Sum of positive eigenvalues of R plus alpha ||R||_F.

    Equals the minimum-trace semidefinite value min{tr X : X >= 0, X >= R}
    plus the Frobenius penalty.
    """
    if alpha < 0:
        raise InputError(f"alpha must be >= 0, got {alpha}")
    w = np.linalg.eigvalsh(hermitian_part(r))
    return float(np.sum(w[w > 0]) + alpha * np.linalg.norm(r))


def _residual(v_delta, stack, a):
    return v_delta - np.tensordot(a, stack.matrices, axes=1)


def objective_subgradient(v_delta, stack: SensitivityStack, a, alpha):
    """Subgradient of the spectral objective with respect to the pixel
    coefficients: g_m = -tr(P+ S_m) - alpha tr(R S_m)/||R||_F, with P+ the
    projector onto the positive eigenspace of R(a)."""
    r = hermitian_part(_residual(v_delta, stack, np.asarray(a, dtype=float)))
    w, v = np.linalg.eigh(r)
    pos = v[:, w > 0]
    proj = pos @ pos.conj().T
    g = -np.real(np.einsum("ij,mji->m", proj, stack.matrices))
    fro = np.linalg.norm(r)
    if alpha > 0 and fro > 0:
        g -= alpha * np.real(np.einsum("ij,mji->m", r, stack.matrices)) / fro
    return g


def minimize(v_delta, stack: SensitivityStack, bounds: MonotonicityBounds,
             alpha, options: OptimizerOptions = None) -> ReconstructionResult:
    """Projected subgradient descent over the box [0, b_m]^M.

    Starts at the upper corner (the exact-data optimum), steps t0/sqrt(i)
    with t0 scaled so the first step moves at most 5% of q_min per
    coordinate, clamps to the box, and tracks the best iterate.
    """
    options = options or OptimizerOptions()
    v_delta = hermitian_part(v_delta)
    upper = np.asarray(bounds.box_upper, dtype=float)
    a = upper.copy()

    def objective(x):
        return spectral_objective(_residual(v_delta, stack, x), alpha)

    best_a = a.copy()
    best_f = f0 = objective(a)
    trace = [(0, best_f)]
    stop_reason = "max_iters"
    improve_ref = best_f
    stagnant = 0
    step_scale = None
    iters = 0
    for i in range(1, options.max_iters + 1):
        iters = i
        g = objective_subgradient(v_delta, stack, a, alpha)
        gmax = np.max(np.abs(g))
        if step_scale is None:
            if gmax == 0:
                stop_reason = "zero_subgradient"
                break
            step_scale = options.first_step_fraction * bounds.q_min / gmax
        a = np.clip(a - (step_scale / np.sqrt(i)) * g, 0.0, upper)
        f = objective(a)
        if f < best_f:
            best_f = f
            best_a = a.copy()
        trace.append((i, best_f))
        if improve_ref - best_f < options.tol * max(abs(f0), 1e-300):
            stagnant += 1
            if stagnant >= options.stagnation_window:
                stop_reason = "stagnation"
                break
        else:
            stagnant = 0
            improve_ref = best_f
    r_best = hermitian_part(_residual(v_delta, stack, best_a))
    w = np.linalg.eigvalsh(r_best)
    return ReconstructionResult(
        coefficients=best_a,
        objective_trace=trace,
        positive_eigenvalue_sum=float(np.sum(w[w > 0])),
        frobenius_residual=float(np.linalg.norm(r_best)),
        iterations=iters,
        stop_reason=stop_reason,
    )


def tikhonov_linearized(v_delta, stack: SensitivityStack, delta,
                        ell=None) -> IndicatorField:
    """Tikhonov-regularized linear least squares over unconstrained pixel
    coefficients: (G + delta l^2 I) a = c with G the Frobenius Gram matrix
    of the sensitivity stack and l the pixel side length (so the penalty
    is the L2 norm of the piecewise-constant candidate)."""
    if delta <= 0:
        raise InputError(f"delta must be positive, got {delta}")
    v_delta = hermitian_part(v_delta)
    n2 = stack.dirs.n ** 2
    flat = stack.matrices.reshape(stack.n_pixels, n2)
    gram = np.real(flat.conj() @ flat.T)
    rhs = np.real(flat.conj() @ v_delta.reshape(n2))
    ell2 = (stack.grid.spacing if ell is None else ell) ** 2
    system = gram + delta * ell2 * np.eye(stack.n_pixels)
    coeffs = sla.cho_solve(sla.cho_factor(system), rhs)
    resid = np.linalg.norm(system @ coeffs - rhs)
    if resid > 1e-10 * max(np.linalg.norm(rhs), 1e-300):
        raise InputError(f"normal equations residual too large: {resid:.3e}")
    return IndicatorField(grid=stack.grid, values=coeffs, method="tikhonov",
                          metadata={"delta": float(delta)})


def factorization_indicator(farfield: FarFieldMatrix, grid: PixelGrid, k) -> IndicatorField:
    """Factorization-method indicator -log of the Picard sum for
    F# = |Re F| + |Im F| (operator absolute values via eigh)."""
    f = farfield.values
    re = hermitian_part(f)
    im = hermitian_part(-1j * (f - f.conj().T) / 2.0)

    def abs_op(h):
        w, v = np.linalg.eigh(h)
        return (v * np.abs(w)) @ v.conj().T

    f_sharp = hermitian_part(abs_op(re) + abs_op(im))
    w, v = np.linalg.eigh(f_sharp)
    w, v = w[::-1], v[:, ::-1]
    keep = w > FACTORIZATION_EIG_CUTOFF * w[0] if w[0] > 0 else np.zeros_like(w, bool)
    if not np.any(keep):
        raise InputError("far-field data is degenerate: all eigenvalues below cutoff")
    w, v = w[keep], v[:, keep]
    # test vectors r_z(l) = exp(-i k x_l . z) for every pixel center z
    probes = np.exp(-1j * k * farfield.dirs.vectors @ grid.centers.T)
    overlaps = np.abs(v.conj().T @ probes) ** 2
    picard = (overlaps / w[:, None]).sum(axis=0)
    return IndicatorField(grid=grid, values=-np.log(picard),
                          method="factorization",
                          metadata={"variant": "abs(ReF)+abs(ImF)",
                                    "eig_cutoff": FACTORIZATION_EIG_CUTOFF})


@dataclass(frozen=True)
class SupportMetrics:
    jaccard: float
    false_positives: int
    false_negatives: int
    centroid_distance: float
    threshold: float

    def to_dict(self):
        return {"jaccard": self.jaccard,
                "false_positives": self.false_positives,
                "false_negatives": self.false_negatives,
                "centroid_distance": self.centroid_distance,
                "threshold": self.threshold}


def support_metrics(values, true_mask, grid: PixelGrid, kind, q_min=None) -> SupportMetrics:
    """Threshold a coefficient or indicator field and compare to the truth.

    kind='reconstruction' thresholds at 0.5 q_min; kind='indicator' keeps
    the top |true mask| cells.
    """
    values = np.asarray(values, dtype=float)
    true_mask = np.asarray(true_mask, dtype=bool)
    if values.shape != true_mask.shape:
        raise InputError("field and mask shapes differ")
    if kind == "reconstruction":
        if q_min is None:
            raise InputError("q_min required for reconstruction thresholding")
        threshold = 0.5 * q_min
        predicted = values >= threshold
    elif kind == "indicator":
        count = int(true_mask.sum())
        if count == 0:
            threshold = np.inf
            predicted = np.zeros_like(true_mask)
        else:
            threshold = float(np.sort(values)[-count])
            predicted = values >= threshold
    else:
        raise InputError(f"unknown metric kind {kind!r}")

    union = int(np.sum(predicted | true_mask))
    inter = int(np.sum(predicted & true_mask))
    jaccard = 1.0 if union == 0 else inter / union
    fp = int(np.sum(predicted & ~true_mask))
    fn = int(np.sum(~predicted & true_mask))
    if predicted.any() and true_mask.any():
        dist = float(np.linalg.norm(grid.centers[predicted].mean(axis=0)
                                    - grid.centers[true_mask].mean(axis=0)))
    else:
        dist = float("nan")
    return SupportMetrics(jaccard=float(jaccard), false_positives=fp,
                          false_negatives=fn, centroid_distance=dist,
                          threshold=float(threshold))
