"""Experiment configuration, the end-to-end pipeline, deterministic disk
artifacts and the self-test suite, plus the command-line entry point."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import born, forward, monotonicity, reconstruct
from .exceptions import (ConfigError, GeometryError, InputError, MonoscatError,
                         PipelineError)
from .geometry import (ContrastField, PixelGrid, ShapeSpec, build_grid,
                       default_shapes, directions, rasterize,
                       true_support_mask)
from .linalg import hermitian_part
from .special import sinc  # noqa: F401  (re-exported for the self-test)

log = logging.getLogger("monoscat")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_SELFTEST = 3


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: physics, discretization, geometry, solver knobs."""

    wave_number: float = 0.5
    n_directions: int = 32
    noise_level: float = 0.01
    seed: int = 0
    roi_half_width: float = 5.0
    recon_grid_side: int = 32
    forward_grid_side: int = 128
    forward_subsamples: int = 8
    shapes: tuple = ()
    q_min: float = 1.0
    alpha_rule: object = "delta"      # "delta" or a fixed float
    optimizer: reconstruct.OptimizerOptions = field(
        default_factory=reconstruct.OptimizerOptions)
    inverse_crime: bool = False
    deterministic: bool = False
    output_dir: str = "out"

    def __post_init__(self):
        if not self.shapes:
            object.__setattr__(self, "shapes", tuple(default_shapes()))
        else:
            object.__setattr__(self, "shapes", tuple(self.shapes))
        self.validate()

    def validate(self):
        if not (self.wave_number > 0 and np.isfinite(self.wave_number)):
            raise ConfigError(f"wave_number must be positive, got {self.wave_number}")
        if self.n_directions < 4 or self.n_directions % 2:
            raise ConfigError(f"n_directions must be even and >= 4, got "
                              f"{self.n_directions}")
        if self.noise_level < 0:
            raise ConfigError(f"noise_level must be >= 0, got {self.noise_level}")
        if self.recon_grid_side < 4 or self.forward_grid_side < 4:
            raise ConfigError("grid sides must be >= 4")
        if self.forward_subsamples < 1:
            raise ConfigError("forward_subsamples must be >= 1")
        if self.q_min <= 0:
            raise ConfigError(f"q_min must be positive, got {self.q_min}")
        if self.roi_half_width <= 0:
            raise ConfigError("roi_half_width must be positive")
        if not (self.alpha_rule == "delta"
                or isinstance(self.alpha_rule, (int, float))):
            raise ConfigError(f"alpha_rule must be 'delta' or a number, got "
                              f"{self.alpha_rule!r}")
        for shape in self.shapes:
            _check_shape_inside(shape, self.roi_half_width)

    @property
    def alpha(self):
        if self.alpha_rule == "delta":
            return float(self.noise_level)
        return float(self.alpha_rule)

    def to_dict(self):
        return {
            "wave_number": self.wave_number,
            "n_directions": self.n_directions,
            "noise_level": self.noise_level,
            "seed": self.seed,
            "roi_half_width": self.roi_half_width,
            "recon_grid_side": self.recon_grid_side,
            "forward_grid_side": self.forward_grid_side,
            "forward_subsamples": self.forward_subsamples,
            "shapes": [s.to_dict() for s in self.shapes],
            "q_min": self.q_min,
            "alpha_rule": self.alpha_rule,
            "optimizer": {
                "max_iters": self.optimizer.max_iters,
                "tol": self.optimizer.tol,
                "stagnation_window": self.optimizer.stagnation_window,
                "first_step_fraction": self.optimizer.first_step_fraction,
            },
            "inverse_crime": self.inverse_crime,
            "deterministic": self.deterministic,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "shapes" in d:
            d["shapes"] = tuple(ShapeSpec.from_dict(s) for s in d["shapes"])
        if "optimizer" in d:
            d["optimizer"] = reconstruct.OptimizerOptions(**d["optimizer"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json_file(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _check_shape_inside(shape: ShapeSpec, half_width):
    """Sample-based containment check: no point outside the region of
    interest may lie inside the shape."""
    coords = np.linspace(-1.5 * half_width, 1.5 * half_width, 97)
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    points = np.stack([xx.ravel(), yy.ravel()], axis=1)
    outside = np.max(np.abs(points), axis=1) > half_width
    if np.any(shape.contains(points[outside])):
        raise GeometryError(
            f"{shape.kind} shape at {shape.center} extends outside the "
            f"region of interest [-{half_width}, {half_width}]^2")


def sampling_warning(config: ExperimentConfig):
    """Warn when the direction count undersamples the region of interest
    (fewer than 2kR directions, R the circumscribing radius)."""
    r = config.roi_half_width * np.sqrt(2.0)
    needed = 2.0 * config.wave_number * r
    if config.n_directions < needed:
        msg = (f"n_directions = {config.n_directions} is below the sampling "
               f"guideline 2kR = {needed:.1f}; reconstructions may be "
               f"underresolved")
        warnings.warn(msg)
        log.warning(msg)


# ---------------------------------------------------------------------------
# Artifact writers

def _fmt(v):
    return f"{v:.17g}"


def write_grid_csv(path, grid: PixelGrid, values):
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_pixels,):
        raise InputError(f"expected {grid.n_pixels} values, got {values.shape}")
    lines = ["x,y,value"]
    for (x, y), v in zip(grid.centers, values):
        lines.append(f"{_fmt(x)},{_fmt(y)},{_fmt(v)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_grid_csv(path):
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    return data[:, 0], data[:, 1], data[:, 2]


def write_farfield_csv(path, farfield: forward.FarFieldMatrix, sidecar: dict):
    lines = ["row,col,re,im"]
    for l in range(farfield.n):
        for m in range(farfield.n):
            v = farfield.values[l, m]
            lines.append(f"{l},{m},{_fmt(v.real)},{_fmt(v.imag)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def read_farfield_csv(path):
    with open(str(path) + ".json") as fh:
        sidecar = json.load(fh)
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    n = int(sidecar["N"])
    values = np.zeros((n, n), dtype=complex)
    rows = data[:, 0].astype(int)
    cols = data[:, 1].astype(int)
    values[rows, cols] = data[:, 2] + 1j * data[:, 3]
    ff = forward.FarFieldMatrix(wave_number=float(sidecar["k"]),
                                dirs=directions(n), values=values)
    return ff, sidecar


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Pipeline

def _sidecar(config: ExperimentConfig, grid_side, noisy):
    return {"k": config.wave_number, "N": config.n_directions,
            "grid": grid_side, "seed": config.seed,
            "delta": config.noise_level if noisy else 0.0,
            "rng_algorithm": forward.RNG_ALGORITHM}


def simulate(config: ExperimentConfig):
    """Forward-simulate the clean and noisy far-field matrices."""
    sampling_warning(config)
    side = (config.recon_grid_side if config.inverse_crime
            else config.forward_grid_side)
    fgrid = build_grid(config.roi_half_width, side)
    contrast = rasterize(list(config.shapes), fgrid,
                         subsamples=config.forward_subsamples)
    clean = forward.far_field_matrix(config.wave_number, contrast,
                                     directions(config.n_directions))
    noisy = forward.add_noise(clean, forward.NoiseModel(
        delta=config.noise_level, seed=config.seed))
    return clean, noisy


def run_pipeline(config: ExperimentConfig, out_dir=None):
    """Simulate, add noise, compute bounds, reconstruct, run the baselines,
    score everything and write all artifacts plus a hashed manifest.

    Any stage failure removes the partial artifacts and raises a pipeline
    error naming the stage.
    """
    from pathlib import Path

    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    stage = "setup"

    def emit(name, writer, *args):
        path = out / name
        writer(path, *args)
        written.append(path)
        if name.endswith(".csv") and writer is write_farfield_csv:
            written.append(Path(str(path) + ".json"))

    try:
        stage = "config"
        path = out / "config.json"
        path.write_text(config.to_json())
        written.append(path)

        stage = "simulate"
        t0 = time.perf_counter()
        clean, noisy = simulate(config)
        emit("farfield.csv", write_farfield_csv, clean,
             _sidecar(config, clean_grid_side(config), False))
        emit("farfield_noisy.csv", write_farfield_csv, noisy,
             _sidecar(config, clean_grid_side(config), True))

        stage = "sensitivity"
        grid = build_grid(config.roi_half_width, config.recon_grid_side)
        dirs = directions(config.n_directions)
        stack = born.sensitivity_stack(config.wave_number, grid, dirs)

        stage = "bounds"
        v_delta = hermitian_part(noisy.values)
        bounds = monotonicity.admissible_bounds(v_delta, stack, config.q_min,
                                                config.noise_level)
        emit("beta_star.csv", write_grid_csv, grid, bounds.beta_star)
        emit("bounds.csv", write_grid_csv, grid, bounds.box_upper)

        stage = "minimize"
        result = reconstruct.minimize(v_delta, stack, bounds, config.alpha,
                                      config.optimizer)
        emit("reconstruction.csv", write_grid_csv, grid, result.coefficients)

        stage = "baselines"
        tik_delta = config.noise_level if config.noise_level > 0 else 1e-6
        tik = reconstruct.tikhonov_linearized(v_delta, stack, tik_delta)
        emit("tikhonov.csv", write_grid_csv, grid, tik.values)
        fac = reconstruct.factorization_indicator(noisy, grid,
                                                  config.wave_number)
        emit("factorization.csv", write_grid_csv, grid, fac.values)

        stage = "metrics"
        mask = true_support_mask(list(config.shapes), grid)
        metrics = {
            "reconstruction": reconstruct.support_metrics(
                result.coefficients, mask, grid, "reconstruction",
                q_min=config.q_min).to_dict(),
            "bounds": reconstruct.support_metrics(
                bounds.box_upper, mask, grid, "reconstruction",
                q_min=config.q_min).to_dict(),
            "tikhonov": reconstruct.support_metrics(
                tik.values, mask, grid, "reconstruction",
                q_min=config.q_min).to_dict(),
            "factorization": reconstruct.support_metrics(
                fac.values, mask, grid, "indicator").to_dict(),
            "optimizer": {"iterations": result.iterations,
                          "stop_reason": result.stop_reason,
                          "objective": result.objective_trace[-1][1],
                          "positive_eigenvalue_sum":
                              result.positive_eigenvalue_sum,
                          "frobenius_residual": result.frobenius_residual},
            "alpha": config.alpha,
        }
        # wall-clock timing would break hash stability across reruns
        if not config.deterministic:
            metrics["runtime_seconds"] = time.perf_counter() - t0
        path = out / "metrics.json"
        path.write_text(json.dumps(metrics, indent=2) + "\n")
        written.append(path)

        stage = "manifest"
        manifest = {
            "rng_algorithm": forward.RNG_ALGORITHM,
            "config": config.to_dict(),
            "artifacts": [{"path": p.name, "sha256": _sha256(p)}
                          for p in sorted(written)],
        }
        path = out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2) + "\n")
        return manifest
    except Exception as exc:
        for p in written:
            try:
                p.unlink()
            except OSError:
                pass
        raise PipelineError(stage, exc) from exc


def clean_grid_side(config: ExperimentConfig):
    return (config.recon_grid_side if config.inverse_crime
            else config.forward_grid_side)


# ---------------------------------------------------------------------------
# Self-test

def _check(report, name, passed, detail):
    report.append({"name": name, "passed": bool(passed), "detail": detail})
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")


def _quadrature_sensitivity(k, grid, pixel, dirs, points=64):
    """Midpoint-rule oracle for the single-pixel Born matrix."""
    ell = grid.spacing
    offs = -ell / 2 + (np.arange(points) + 0.5) * ell / points
    ox, oy = np.meshgrid(offs, offs, indexing="xy")
    samples = grid.centers[pixel] + np.stack([ox.ravel(), oy.ravel()], axis=1)
    d = dirs.vectors[None, :, :] - dirs.vectors[:, None, :]
    phases = np.exp(1j * k * np.einsum("pc,ljc->plj", samples, d))
    area = (ell / points) ** 2
    return (2.0 * np.pi / dirs.n) * k**2 * area * phases.sum(axis=0)


def quadrature_sensitivity_oracle(k, grid, pixel, dirs, points=64):
    """Richardson-extrapolated midpoint quadrature of the single-pixel Born
    integral.  The plain midpoint rule converges at second order with an
    error near 1e-5 relative at 64x64 points, so one extrapolation step
    (combining the 64x64 and 128x128 rules) is needed to certify the closed
    form beyond 1e-8."""
    coarse = _quadrature_sensitivity(k, grid, pixel, dirs, points)
    fine = _quadrature_sensitivity(k, grid, pixel, dirs, 2 * points)
    return (4.0 * fine - coarse) / 3.0


def _selftest_sensitivity():
    grid = build_grid(2.0, 4)
    dirs = directions(8)
    worst = 0.0
    for pixel in (0, 5, 15):
        for k in (0.5, 1.0):
            s = born.sensitivity_matrix(k, grid, pixel, dirs)
            q = quadrature_sensitivity_oracle(k, grid, pixel, dirs)
            worst = max(worst, np.linalg.norm(s - q) / np.linalg.norm(q))
    return worst < 1e-8, f"max relative Frobenius error {worst:.3e}"


def _selftest_self_weight():
    worst = 0.0
    for k in (0.5, 1.0, 2.0):
        w = forward.self_cell_weight(k, 0.3125)
        q = forward.self_cell_weight_quadrature(k, 0.3125)
        worst = max(worst, abs(w - q) / abs(q))
    return worst < 1e-6, f"max relative error {worst:.3e}"


def _selftest_beta_star(rng):
    n = 8
    worst = 0.0
    for _ in range(50):
        c = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        s = c @ c.conj().T + 0.05 * np.eye(n)
        s /= np.linalg.norm(s, 2)
        v = hermitian_part(rng.standard_normal((n, n))
                           + 1j * rng.standard_normal((n, n)))
        d = int(rng.integers(0, n))
        b1 = monotonicity.beta_star(v, s, d, 0.0, 1.0)
        b2 = monotonicity.beta_star_bisection_oracle(v, s, d, 0.0, 1.0)
        worst = max(worst, abs(b1 - b2))
    return worst < 1e-8, f"max absolute deviation {worst:.3e}"


def _selftest_forward():
    k = 0.5
    dirs = directions(8)
    fgrid = build_grid(2.0, 64)
    shape = ShapeSpec(kind="disk", center=(0.0, 0.0), contrast=1.0,
                      params={"radius": 1.0})
    contrast = rasterize([shape], fgrid, subsamples=8)
    ls = forward.far_field_matrix(k, contrast, dirs)
    mie = forward.disk_mie_far_field(k, 1.0, 1.0, (0.0, 0.0), dirs)
    err = np.linalg.norm(ls.values - mie.values) / np.linalg.norm(mie.values)
    return err < 0.02, f"relative Frobenius error {err:.3e}"


def _selftest_subgradient(rng):
    n = 8
    dirs = directions(n)
    sgrid = build_grid(2.0, 3)
    stack = born.sensitivity_stack(1.0, sgrid, dirs)
    v = hermitian_part(rng.standard_normal((n, n))
                       + 1j * rng.standard_normal((n, n)))
    worst = 0.0
    alpha = 0.3

    def f(x):
        r = v - np.tensordot(x, stack.matrices, axes=1)
        return reconstruct.spectral_objective(r, alpha)

    for _ in range(5):
        a = rng.uniform(0.1, 0.9, sgrid.n_pixels)
        direction = rng.standard_normal(sgrid.n_pixels)
        direction /= np.linalg.norm(direction)
        g = reconstruct.objective_subgradient(v, stack, a, alpha)
        h = 1e-6
        fd = (f(a + h * direction) - f(a - h * direction)) / (2 * h)
        worst = max(worst, abs(fd - float(g @ direction))
                    / max(abs(fd), 1e-12))
    return worst < 1e-4, f"max relative error {worst:.3e}"


def selftest():
    """Small-scale oracle suite; returns (report, all_passed)."""
    report = []
    rng = np.random.default_rng(42)
    checks = [
        ("sensitivity quadrature oracle", _selftest_sensitivity),
        ("self-cell weight quadrature oracle", _selftest_self_weight),
        ("beta* bisection oracle", lambda: _selftest_beta_star(rng)),
        ("forward solver disk series oracle", _selftest_forward),
        ("subgradient finite-difference oracle",
         lambda: _selftest_subgradient(rng)),
    ]
    for name, check in checks:
        try:
            passed, detail = check()
        except Exception as exc:
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        _check(report, name, passed, detail)
    return report, all(r["passed"] for r in report)


# ---------------------------------------------------------------------------
# Command line

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="monoscat",
        description="Far-field shape reconstruction with monotonicity-based "
                    "regularization")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "reconstruct", "baselines", "pipeline"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--delta", type=float)
        p.add_argument("--k", type=float)
        p.add_argument("--out")
        p.add_argument("--deterministic", action="store_true")
        p.add_argument("--inverse-crime", action="store_true",
                       dest="inverse_crime")
    sub.add_parser("selftest")
    return parser


def _config_from_args(args):
    if args.config:
        config = ExperimentConfig.from_json_file(args.config)
    else:
        config = ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.delta is not None:
        overrides["delta"] = args.delta
    if args.k is not None:
        overrides["k"] = args.k
    if args.out is not None:
        overrides["out"] = args.out
    if overrides or args.deterministic or args.inverse_crime:
        config = replace(
            config,
            seed=overrides.get("seed", config.seed),
            noise_level=overrides.get("delta", config.noise_level),
            wave_number=overrides.get("k", config.wave_number),
            output_dir=overrides.get("out", config.output_dir),
            deterministic=args.deterministic or config.deterministic,
            inverse_crime=args.inverse_crime or config.inverse_crime,
        )
    return config


def _cmd_simulate(config):
    from pathlib import Path

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    clean, noisy = simulate(config)
    write_farfield_csv(out / "farfield.csv", clean,
                       _sidecar(config, clean_grid_side(config), False))
    write_farfield_csv(out / "farfield_noisy.csv", noisy,
                       _sidecar(config, clean_grid_side(config), True))
    print(f"wrote far-field matrices to {out}")


def _load_noisy(config):
    from pathlib import Path

    path = Path(config.output_dir) / "farfield_noisy.csv"
    if not path.exists():
        raise InputError(f"missing {path}; run 'simulate' first")
    noisy, _ = read_farfield_csv(path)
    return noisy


def _cmd_reconstruct(config):
    from pathlib import Path

    out = Path(config.output_dir)
    noisy = _load_noisy(config)
    grid = build_grid(config.roi_half_width, config.recon_grid_side)
    stack = born.sensitivity_stack(config.wave_number, grid,
                                   directions(config.n_directions))
    v_delta = hermitian_part(noisy.values)
    bounds = monotonicity.admissible_bounds(v_delta, stack, config.q_min,
                                            config.noise_level)
    result = reconstruct.minimize(v_delta, stack, bounds, config.alpha,
                                  config.optimizer)
    write_grid_csv(out / "beta_star.csv", grid, bounds.beta_star)
    write_grid_csv(out / "bounds.csv", grid, bounds.box_upper)
    write_grid_csv(out / "reconstruction.csv", grid, result.coefficients)
    print(f"reconstruction finished after {result.iterations} iterations "
          f"({result.stop_reason}); artifacts in {out}")


def _cmd_baselines(config):
    from pathlib import Path

    out = Path(config.output_dir)
    noisy = _load_noisy(config)
    grid = build_grid(config.roi_half_width, config.recon_grid_side)
    stack = born.sensitivity_stack(config.wave_number, grid,
                                   directions(config.n_directions))
    v_delta = hermitian_part(noisy.values)
    tik_delta = config.noise_level if config.noise_level > 0 else 1e-6
    tik = reconstruct.tikhonov_linearized(v_delta, stack, tik_delta)
    fac = reconstruct.factorization_indicator(noisy, grid, config.wave_number)
    write_grid_csv(out / "tikhonov.csv", grid, tik.values)
    write_grid_csv(out / "factorization.csv", grid, fac.values)
    print(f"baseline fields written to {out}")


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            _, ok = selftest()
            return EXIT_OK if ok else EXIT_SELFTEST
        config = _config_from_args(args)
        if args.command == "simulate":
            _cmd_simulate(config)
        elif args.command == "reconstruct":
            _cmd_reconstruct(config)
        elif args.command == "baselines":
            _cmd_baselines(config)
        else:
            manifest = run_pipeline(config)
            print(f"pipeline complete: {len(manifest['artifacts'])} artifacts "
                  f"in {config.output_dir}")
        return EXIT_OK
    except (ConfigError, GeometryError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MonoscatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
