"""Scalar Helmholtz volume-integral solver on the pixel grid.

The total field satisfies p = p_i + k² A(χ p), A being convolution with the
2D Green's function G = (i/4) H₀⁽¹⁾(k r) integrated over each pixel: by
quadrature over the square near the source, and by a disk average with the
square's second moment further out. Density contrast and shear waves
are not modelled: χ carries the sound-speed contrast only.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from math import pi, sqrt

import numpy as np
import scipy.fft as fft
import scipy.sparse.linalg as la
from scipy import integrate, special
from tqdm import tqdm

from ..errors import ConfigError, SolverError
from .geometry import pixel_centers, rasterize, BoundaryCurve
from .materials import WATER, STEEL, density_matched
from . import mie

log = logging.getLogger(__name__)

FREQUENCIES = (1000.0, 1500.0, 2000.0, 2500.0, 3000.0)  # Hz
N_ANGLES = 87
# Offsets, in pitches, whose weights are integrated over the square pixel
NEAR_STENCIL = 3
# Grid the disk oracle is evaluated on
REFERENCE_GRID = 128


def far_field_angles(n_angles=N_ANGLES):
    """θ_m = 2πm/M, m = 0..M-1, starting at 0 inclusive"""
    return 2 * pi * np.arange(n_angles) / n_angles


class SolverConfig:
    def __init__(self, config=None):
        # Set default configuration
        self.set_default_config()

        # Update configuration
        if config:
            for attr, val in config.items():
                setattr(self, attr, val)

        # Calculate properties
        self.init_properties()

    def set_default_config(self):
        self.tol = 1e-6
        self.max_iter = 2000
        # Direction the plane wave arrives from
        self.incidence_angle = 0.0  # rad
        self.n_angles = N_ANGLES
        self.frequencies = FREQUENCIES

    def init_properties(self):
        if self.tol <= 0:
            raise ConfigError(f"solver.tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"solver.max_iter must be at least 1, got {self.max_iter}")
        self.max_iter = int(self.max_iter)
        self.n_angles = int(self.n_angles)
        self.frequencies = tuple(float(f) for f in self.frequencies)
        if not self.frequencies or min(self.frequencies) <= 0:
            raise ConfigError(f"solver.frequencies must be positive and nonempty, got {self.frequencies}")
        self.angles = far_field_angles(self.n_angles)

    def to_dict(self):
        return {
            "tol": self.tol,
            "max_iter": self.max_iter,
            "incidence_angle": self.incidence_angle,
            "n_angles": self.n_angles,
            "frequencies": list(self.frequencies),
        }


class ContrastGrid:
    """χ = c_bg²/c² - 1 per pixel, with background wavenumber and pixel pitch"""

    def __init__(self, chi, k, h, frequency=None):
        self.chi = np.asarray(chi, dtype=complex)
        self.k = float(k)
        self.h = float(h)
        self.frequency = frequency

    @property
    def grid(self):
        return self.chi.shape[0]

    @property
    def is_empty(self):
        return not np.any(self.chi)

    def coordinates(self):
        return pixel_centers(self.grid, self.grid * self.h)


class FieldGrid:
    def __init__(self, values, frequency=None, iterations=0, residual=0.0):
        self.values = np.asarray(values, dtype=complex)
        self.frequency = frequency
        self.iterations = iterations
        self.residual = residual


class FarFieldPattern:
    def __init__(self, frequency, amplitudes, angles=None):
        self.frequency = frequency
        self.amplitudes = np.asarray(amplitudes, dtype=float)
        self.angles = far_field_angles(len(self.amplitudes)) if angles is None else np.asarray(angles)

    def __len__(self):
        return len(self.amplitudes)


class FarFieldSet:
    """Patterns at several frequencies, flattened frequency-major:
    vector[i·M + m] = amplitude of frequency i at angle θ_m.
    """

    def __init__(self, patterns):
        self.patterns = list(patterns)

    @property
    def frequencies(self):
        return [p.frequency for p in self.patterns]

    def vector(self):
        if not self.patterns:
            return np.zeros(0)
        return np.concatenate([p.amplitudes for p in self.patterns])

    @classmethod
    def from_vector(cls, vector, frequencies=FREQUENCIES):
        blocks = np.split(np.asarray(vector, dtype=float), len(frequencies))
        return cls([FarFieldPattern(f, b) for f, b in zip(frequencies, blocks)])

    def __len__(self):
        return sum(len(p) for p in self.patterns)


def build_contrast(image, bg=WATER, obj=STEEL, f=FREQUENCIES[0]):
    if f <= 0:
        raise ValueError(f"frequency must be positive, got {f}")
    chi_value = (bg.sound_speed / obj.sound_speed) ** 2 - 1
    chi = image.pixels.astype(float) * chi_value
    return ContrastGrid(chi, bg.wavenumber(f), image.pixel_size, f)


def smoothing_radius(h):
    """Disk radius whose second moment matches the square pixel's"""
    return h / sqrt(3)


def smoothed_weights(k, h, r):
    """h²·G(r) averaged over a disk of radius h/√3; the square pixel to O((kh)⁴) for r > 0"""
    kb = k * smoothing_radius(h)
    return 0.25j * special.hankel1(0, k * np.asarray(r, dtype=float)) * h ** 2 * 2 * special.j1(kb) / kb


def square_self_term(k, h):
    """∫ G over the pixel holding the source, in polar form over its eight triangles"""
    def radial(phi, part):
        rho = h / (2 * np.cos(phi))
        return part(rho * special.hankel1(1, k * rho))

    re, _ = integrate.quad(radial, 0, pi / 4, args=(np.real,), epsabs=0, epsrel=1e-12)
    im, _ = integrate.quad(radial, 0, pi / 4, args=(np.imag,), epsabs=0, epsrel=1e-12)
    return 2j / k * complex(re, im) - 1 / k ** 2


def square_weight(k, h, dx, dy):
    """∫ G over the pixel offset by (dx, dy) pitches from the source"""
    if dx == 0 and dy == 0:
        return square_self_term(k, h)
    x0, x1 = (dx - 0.5) * h, (dx + 0.5) * h
    y0, y1 = (dy - 0.5) * h, (dy + 0.5) * h
    re, _ = integrate.dblquad(lambda y, x: -0.25 * special.y0(k * np.hypot(x, y)), x0, x1, y0, y1,
                              epsabs=1e-14, epsrel=1e-11)
    im, _ = integrate.dblquad(lambda y, x: 0.25 * special.j0(k * np.hypot(x, y)), x0, x1, y0, y1,
                              epsabs=1e-14, epsrel=1e-11)
    return complex(re, im)


@lru_cache(maxsize=32)
def near_field_table(k, h):
    """Square-pixel weights for 0 <= dx, dy <= NEAR_STENCIL"""
    n = NEAR_STENCIL
    table = np.empty((n + 1, n + 1), dtype=complex)
    for i in range(n + 1):
        for j in range(i + 1):
            table[i, j] = table[j, i] = square_weight(k, h, i, j)
    table.setflags(write=False)
    return table


def pixel_weights(k, h, dx, dy):
    """Pixel-integrated Green's function between pixels offset by (dx, dy) pitches"""
    dx, dy = np.broadcast_arrays(np.abs(np.asarray(dx, dtype=int)), np.abs(np.asarray(dy, dtype=int)))
    weights = np.empty(dx.shape, dtype=complex)
    near = (dx <= NEAR_STENCIL) & (dy <= NEAR_STENCIL)
    weights[near] = near_field_table(k, h)[dx[near], dy[near]]
    weights[~near] = smoothed_weights(k, h, h * np.hypot(dx[~near], dy[~near]))
    return weights


@lru_cache(maxsize=32)
def green_spectrum(k, h, grid):
    """FFT of the Green's weights on the 2N×2N circulant embedding, scaled by k²"""
    idx = np.arange(2 * grid)
    offsets = np.where(idx < grid, idx, idx - 2 * grid)
    dy, dx = np.meshgrid(offsets, offsets, indexing="ij")
    spectrum = fft.fft2(k ** 2 * pixel_weights(k, h, dx, dy))
    spectrum.setflags(write=False)
    return spectrum


def apply_green(values, spectrum):
    """k² A(values) by zero-padded FFT convolution"""
    grid = values.shape[0]
    extended = fft.ifft2(spectrum * fft.fft2(values, s=spectrum.shape))
    return extended[:grid, :grid]


def incident_field(contrast, incidence_angle=0.0):
    """Unit plane wave arriving from incidence_angle (e^{-ikx} for angle 0)"""
    X, Y = contrast.coordinates()
    return np.exp(-1j * contrast.k * (X * np.cos(incidence_angle) + Y * np.sin(incidence_angle)))


def field_residual(contrast, total, incident, spectrum=None):
    """‖p - p_i - k²A(χp)‖ / ‖p_i‖"""
    spectrum = green_spectrum(contrast.k, contrast.h, contrast.grid) if spectrum is None else spectrum
    r = total - incident - apply_green(contrast.chi * total, spectrum)
    return float(np.linalg.norm(r) / np.linalg.norm(incident))


def solve_total_field(contrast, incidence_angle=0.0, tol=1e-6, max_iter=2000):
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    incident = incident_field(contrast, incidence_angle)
    if contrast.is_empty:
        return FieldGrid(incident, contrast.frequency, iterations=0, residual=0.0)

    shape = contrast.chi.shape
    n = contrast.chi.size
    spectrum = green_spectrum(contrast.k, contrast.h, contrast.grid)

    def matvec(v):
        v = v.reshape(shape)
        return (v - apply_green(contrast.chi * v, spectrum)).ravel()

    operator = la.LinearOperator((n, n), matvec=matvec, dtype=complex)
    rhs = incident.ravel()

    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    guess = rhs
    rtol = tol
    residual = np.inf
    # BiCGStab tracks a recursive residual; tighten until the true one meets tol
    while iterations < max_iter and rtol > 1e-14:
        solution, info = la.bicgstab(
            operator, rhs, x0=guess, rtol=rtol, atol=0.0,
            maxiter=max_iter - iterations, callback=count,
        )
        residual = field_residual(contrast, solution.reshape(shape), incident, spectrum)
        if residual <= tol:
            log.debug("field solve f=%s converged in %d iterations, residual %.2e",
                      contrast.frequency, iterations, residual)
            return FieldGrid(solution.reshape(shape), contrast.frequency, iterations, residual)
        if info < 0:
            break
        guess = solution
        rtol *= 0.1
    raise SolverError(residual, iterations)


def far_field_complex(contrast, field, angles):
    """f(θ) = (k²/4) sqrt(2/(πk)) e^{iπ/4} Σ_j χ_j p_j h² exp(-ik r̂·r_j)"""
    angles = np.asarray(angles, dtype=float)
    k, h = contrast.k, contrast.h
    X, Y = contrast.coordinates()
    source = (contrast.chi * field.values).ravel() * h ** 2
    phase = np.multiply.outer(np.cos(angles), X.ravel()) + np.multiply.outer(np.sin(angles), Y.ravel())
    sums = np.exp(-1j * k * phase) @ source
    return k ** 2 / 4 * sqrt(2 / (pi * k)) * np.exp(1j * pi / 4) * sums


def far_field(contrast, field, angles=None):
    angles = far_field_angles() if angles is None else np.asarray(angles)
    return FarFieldPattern(
        contrast.frequency, np.abs(far_field_complex(contrast, field, angles)), angles
    )


def simulate_sample(image, freqs=FREQUENCIES, bg=WATER, obj=STEEL, config=None):
    config = config if config is not None else SolverConfig()
    patterns = []
    for index, f in enumerate(freqs):
        contrast = build_contrast(image, bg, obj, f)
        try:
            field = solve_total_field(contrast, config.incidence_angle, config.tol, config.max_iter)
        except SolverError as err:
            raise err.at_frequency(index) from err
        patterns.append(far_field(contrast, field, config.angles))
    return FarFieldSet(patterns)


def scattered_power(contrast, field, n_angles=720):
    """∫|f(θ)|²dθ by the periodic trapezoid rule"""
    angles = far_field_angles(n_angles)
    f = far_field_complex(contrast, field, angles)
    return float(np.sum(np.abs(f) ** 2) * 2 * pi / n_angles)


def extinction(contrast, field, incidence_angle=0.0):
    forward = far_field_complex(contrast, field, [mie.forward_angle(incidence_angle)])[0]
    return mie.extinction_cross_section(forward, contrast.k)


def relative_l2(value, reference):
    value, reference = np.asarray(value), np.asarray(reference)
    return float(np.linalg.norm(value - reference) / np.linalg.norm(reference))


def disk_image(radius, grid=64, domain_size=2.0):
    return rasterize(BoundaryCurve(radius), grid, domain_size)


def mie_disk_far_field(image, frequency, bg, obj, angles, nominal_radius=None):
    """Fluid-cylinder far field for a rasterized disk; equal-area radius unless given"""
    radius = nominal_radius if nominal_radius is not None else sqrt(image.count / pi) * image.pixel_size
    coeffs = mie.fluid_cylinder_coefficients(radius, frequency, bg, obj)
    return mie.far_field_from_coefficients(coeffs, bg.wavenumber(frequency), angles)


def mie_agreement_report(radii=(0.3, 0.5, 0.7), freqs=FREQUENCIES, bg=WATER, obj=STEEL,
                         grid=REFERENCE_GRID, domain_size=2.0, config=None):
    """Relative L2 deviation of solver far fields from the fluid-cylinder series.

    The object is density matched to the background so the scalar model is exact.
    On the 64-pixel dataset grid the staircase boundary of the largest disk costs
    about 2.3% at 3 kHz; the default grid halves the pitch.
    """
    config = config if config is not None else SolverConfig()
    matched = density_matched(obj, bg)
    rows = []
    for radius in radii:
        image = disk_image(radius, grid, domain_size)
        farfields = simulate_sample(image, freqs, bg, matched, config)
        for pattern in farfields.patterns:
            reference = mie_disk_far_field(image, pattern.frequency, bg, matched, pattern.angles)
            rows.append({
                "radius": radius,
                "frequency": pattern.frequency,
                "relative_l2": relative_l2(pattern.amplitudes, reference),
            })
    return rows


class ScatteringSimulation:
    """Dataset-level driver: one far-field vector per shape over the configured frequencies"""

    def __init__(self, config=None):
        # Set default configuration
        self.set_default_config()

        # Update configuration
        if config:
            for attr, val in config.items():
                setattr(self, attr, val)

        # Calculate properties
        self.init_properties()

    def set_default_config(self):
        self.background = WATER
        self.scatterer = STEEL
        self.solver = SolverConfig()
        self.jobs = 1
        self.progress = True

    def init_properties(self):
        if not isinstance(self.solver, SolverConfig):
            self.solver = SolverConfig(self.solver)
        self.failures = []

    @property
    def width(self):
        return len(self.solver.frequencies) * self.solver.n_angles

    def simulate(self, image):
        return simulate_sample(image, self.solver.frequencies, self.background, self.scatterer, self.solver)

    def _simulate_one(self, item):
        index, image = item
        try:
            return index, self.simulate(image).vector()
        except SolverError as err:
            log.warning("sample %d failed: %s", index, err)
            return index, err

    def run(self, images):
        """Far-field vectors in input order; failed samples are NaN rows and listed in self.failures"""
        images = list(images)
        self.failures = []
        results = [np.full(self.width, np.nan) for _ in images]
        bar = tqdm(total=len(images), desc="simulate", disable=not self.progress)
        with ThreadPoolExecutor(max_workers=max(1, int(self.jobs))) as executor:
            for index, outcome in executor.map(self._simulate_one, enumerate(images)):
                if isinstance(outcome, SolverError):
                    self.failures.append((index, str(outcome)))
                else:
                    results[index] = outcome
                bar.update(1)
        bar.close()
        log.info("simulated %d shapes, %d failures", len(images), len(self.failures))
        return results


