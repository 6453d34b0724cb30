"""Analytic cylinder scattering: elastic and fluid cylinders in a fluid.

Conventions: time dependence e^{-iωt}, unit incident plane wave
p_i = e^{-ik x} = Σ ε_n (-i)^n J_n(k r) cos nθ, scattered field
p_s = Σ c_n H_n⁽¹⁾(k r) cos nθ and far field p_s ≈ f(θ) e^{ikr}/√r.
"""
import logging
from math import ceil, pi, sqrt

import numpy as np
from scipy import special
from scipy.integrate import quad

from ..errors import DomainError, ShearFreeError, SingularSystemError
from .materials import ElasticMaterial, FluidMaterial

log = logging.getLogger(__name__)

SINGULAR_DET = 1e-300
EXTRA_ORDERS = 12


def bessel_j(n, x):
    if np.any(np.asarray(x) < 0):
        raise DomainError(f"bessel_j needs x >= 0, got {x}")
    return special.jv(n, x)


def bessel_jp(n, x):
    """J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2"""
    return special.jvp(n, x, 1)


def bessel_jpp(n, x):
    """J_n'' from Bessel's equation: -J_n (1 - n²/x²) - J_n'/x"""
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)
    return -special.jv(n, x) * (1 - n ** 2 / x ** 2) - special.jvp(n, x, 1) / x


def hankel1(n, x):
    if np.any(np.asarray(x) <= 0):
        raise DomainError(f"hankel1 is singular at x <= 0, got {x}")
    return special.hankel1(n, x)


def hankel1p(n, x):
    if np.any(np.asarray(x) <= 0):
        raise DomainError(f"hankel1 derivative is singular at x <= 0, got {x}")
    return special.h1vp(n, x, 1)


def neumann_factor(n):
    """ε_0 = 1, ε_n = 2 for n >= 1"""
    return np.where(np.asarray(n) == 0, 1.0, 2.0)


def incident_factor(n):
    """Order-n weight ε_n (-i)^n of the unit plane wave"""
    n = np.asarray(n)
    return neumann_factor(n) * (-1j) ** n


def default_n_max(x3):
    return int(ceil(x3)) + EXTRA_ORDERS


class MieProblem:
    """Cylinder of radius a in a fluid, insonified at frequency f"""

    def __init__(self, radius, frequency, exterior, interior):
        if radius <= 0 or frequency <= 0:
            raise ValueError(f"radius and frequency must be positive, got a={radius}, f={frequency}")
        self.radius = float(radius)
        self.frequency = float(frequency)
        self.exterior = exterior
        self.interior = interior

        self.omega = 2 * pi * self.frequency
        self.k3 = exterior.wavenumber(self.frequency)
        if isinstance(interior, ElasticMaterial):
            self.k1, self.k2 = interior.wavenumbers(self.frequency)
        else:
            self.k1, self.k2 = interior.wavenumber(self.frequency), 0.0

    @property
    def x1(self):
        return self.k1 * self.radius

    @property
    def x2(self):
        return self.k2 * self.radius

    @property
    def x3(self):
        return self.k3 * self.radius

    def __repr__(self):
        return (
            f"MieProblem(a={self.radius}, f={self.frequency}, "
            f"exterior={self.exterior.name}, interior={self.interior.name})"
        )


class MieCoefficients:
    """Per-order coefficients for n = 0..n_max.

    For an elastic interior a_n, b_n are the potential coefficients; for a
    fluid interior a_n holds the interior pressure coefficients and b_n is 0.
    c_n are the scattering coefficients in every case.
    """

    def __init__(self, a, b, c):
        self.a = np.asarray(a, dtype=complex)
        self.b = np.asarray(b, dtype=complex)
        self.c = np.asarray(c, dtype=complex)

    @property
    def n_max(self):
        return len(self.c) - 1

    @property
    def orders(self):
        return np.arange(len(self.c))

    @classmethod
    def zeros(cls, n_max):
        z = np.zeros(n_max + 1, dtype=complex)
        return cls(z, z.copy(), z.copy())

    def __repr__(self):
        return f"MieCoefficients(n_max={self.n_max})"


def assemble_elastic_system(problem, n):
    """Boundary-condition system M_n (a_n, b_n, c_n)ᵀ = rhs for one order.

    Rows: radial displacement continuity, normal stress balancing the fluid
    pressure, vanishing shear stress. The right-hand side is per unit
    incident order; callers multiply the solution by ε_n(-i)^n.
    """
    solid = problem.interior
    if not isinstance(solid, ElasticMaterial):
        raise TypeError(f"elastic system needs an ElasticMaterial interior, got {solid!r}")
    x1, x2, x3 = problem.x1, problem.x2, problem.x3
    if x2 == 0:
        raise ShearFreeError(f"{solid.name!r} has no shear stiffness; use the fluid reduction")

    a = problem.radius
    lam, mu = solid.lam, solid.mu
    rho_w2 = problem.exterior.density * problem.omega ** 2

    j1, j1p, j1pp = special.jv(n, x1), bessel_jp(n, x1), bessel_jpp(n, x1)
    j2, j2p, j2pp = special.jv(n, x2), bessel_jp(n, x2), bessel_jpp(n, x2)
    j3, j3p = special.jv(n, x3), bessel_jp(n, x3)
    h3, h3p = hankel1(n, x3), hankel1p(n, x3)

    M = np.array([
        [-x1 * j1p, n * j2, -x3 / rho_w2 * h3p],
        [x1 ** 2 * (-2 * mu * j1pp + lam * j1), 2 * mu * n * (x2 * j2p - j2), a ** 2 * h3],
        [2 * n * (x1 * j1p - j1), -n ** 2 * j2 + x2 * j2p - x2 ** 2 * j2pp, 0.0],
    ], dtype=complex)
    rhs = np.array([x3 / rho_w2 * j3p, -a ** 2 * j3, 0.0], dtype=complex)
    return M, rhs


def _equilibrate(M, rhs):
    # Row scaling leaves the solution and Cramer's ratios unchanged
    scale = np.abs(M).max(axis=1)
    scale[scale == 0] = 1.0
    return M / scale[:, None], rhs / scale


def cramer_solve(M, rhs, order=None):
    """x_i = det V_i / det M, V_i being M with column i replaced by rhs"""
    M, rhs = _equilibrate(M, rhs)
    det = np.linalg.det(M)
    if abs(det) < SINGULAR_DET:
        raise SingularSystemError(order, abs(det))
    solution = np.empty(len(rhs), dtype=complex)
    for i in range(len(rhs)):
        V = M.copy()
        V[:, i] = rhs
        solution[i] = np.linalg.det(V) / det
    return solution


def solve_coefficients_cramer(problem, n_max=None):
    """Elastic-cylinder coefficients for n = 0..n_max by Cramer's rule.

    A shear-free interior is solved through fluid_cylinder_coefficients.
    """
    n_max = default_n_max(problem.x3) if n_max is None else int(n_max)
    interior = problem.interior
    if isinstance(interior, FluidMaterial) or problem.x2 == 0:
        fluid = interior if isinstance(interior, FluidMaterial) else interior.as_fluid()
        return fluid_cylinder_coefficients(
            problem.radius, problem.frequency, problem.exterior, fluid, n_max
        )

    coeffs = MieCoefficients.zeros(n_max)
    for n in range(n_max + 1):
        with np.errstate(all="ignore"):
            M, rhs = assemble_elastic_system(problem, n)
        if not (np.isfinite(M).all() and np.isfinite(rhs).all()):
            # Hankel overflow at very high order: the term is negligible
            log.debug("order %d of %r overflows, truncating", n, problem)
            break
        a_n, b_n, c_n = cramer_solve(M, rhs, order=n) * incident_factor(n)
        coeffs.a[n], coeffs.b[n], coeffs.c[n] = a_n, b_n, c_n
    return coeffs


def direct_solve_coefficients(problem, n_max=None):
    """Same system as solve_coefficients_cramer, solved by LU factorization"""
    n_max = default_n_max(problem.x3) if n_max is None else int(n_max)
    coeffs = MieCoefficients.zeros(n_max)
    for n in range(n_max + 1):
        M, rhs = _equilibrate(*assemble_elastic_system(problem, n))
        coeffs.a[n], coeffs.b[n], coeffs.c[n] = np.linalg.solve(M, rhs) * incident_factor(n)
    return coeffs


def fluid_cylinder_coefficients(a, f, exterior, interior, n_max=None):
    """Penetrable fluid cylinder from pressure and normal-velocity continuity"""
    k0, k1 = exterior.wavenumber(f), interior.wavenumber(f)
    x0, x1 = k0 * a, k1 * a
    n_max = default_n_max(x0) if n_max is None else int(n_max)
    n = np.arange(n_max + 1)
    eps = incident_factor(n)

    with np.errstate(all="ignore"):
        j0, j0p = special.jv(n, x0), bessel_jp(n, x0)
        h0, h0p = hankel1(n, x0), hankel1p(n, x0)
        j1, j1p = special.jv(n, x1), bessel_jp(n, x1)
        g0, g1 = k0 / exterior.density, k1 / interior.density

        numerator = g0 * j0p * j1 - g1 * j0 * j1p
        denominator = g0 * h0p * j1 - g1 * h0 * j1p
        c = -eps * numerator / denominator
        # Interior pressure coefficient from pressure continuity
        d = (eps * j0 + c * h0) / j1

    finite = np.isfinite(denominator) & np.isfinite(c)
    small = finite & (np.abs(denominator) < SINGULAR_DET)
    if small.any():
        order = int(np.flatnonzero(small)[0])
        raise SingularSystemError(order, abs(denominator[order]))
    c = np.where(finite, c, 0)
    d = np.where(np.isfinite(d), d, 0)
    return MieCoefficients(d, np.zeros_like(c), c)


def hard_cylinder_coefficients(a, k, n_max=None):
    """Sound-hard cylinder: c_n = -ε_n(-i)^n J_n'(ka)/H_n'(ka)"""
    x = k * a
    n_max = default_n_max(x) if n_max is None else int(n_max)
    n = np.arange(n_max + 1)
    with np.errstate(all="ignore"):
        c = -incident_factor(n) * bessel_jp(n, x) / hankel1p(n, x)
    c = np.where(np.isfinite(c), c, 0)
    zeros = np.zeros_like(c)
    return MieCoefficients(zeros, zeros.copy(), c)


def far_field_complex(coeffs, k, angles):
    """f(θ) = sqrt(2/(πk)) e^{-iπ/4} Σ c_n (-i)^n cos nθ"""
    angles = np.asarray(angles, dtype=float)
    n = coeffs.orders
    weights = coeffs.c * (-1j) ** n
    series = np.cos(np.multiply.outer(angles, n)) @ weights
    return sqrt(2 / (pi * k)) * np.exp(-1j * pi / 4) * series


def far_field_from_coefficients(coeffs, k, angles):
    """Phaseless far-field amplitudes |f(θ)| in m^{1/2}"""
    return np.abs(far_field_complex(coeffs, k, angles))


def scattering_cross_section(coeffs, k):
    """σ = ∫|f|²dθ = (2/k) Σ (2/ε_n) |c_n|², from orthogonality of cos nθ"""
    n = coeffs.orders
    return float(2 / k * np.sum(2 / neumann_factor(n) * np.abs(coeffs.c) ** 2))


def scattering_cross_section_quadrature(coeffs, k):
    def integrand(theta):
        return float(np.abs(far_field_complex(coeffs, k, [theta])[0]) ** 2)

    sigma, _ = quad(integrand, 0, 2 * pi, limit=400, epsabs=0, epsrel=1e-12)
    return sigma


def extinction_cross_section(forward_amplitude, k):
    """2D optical theorem: σ_ext = -sqrt(8π/k) Re[e^{iπ/4} f(forward)]"""
    return float(-sqrt(8 * pi / k) * np.real(np.exp(1j * pi / 4) * forward_amplitude))


def forward_angle(incidence_angle=0.0):
    """Direction the incident wave travels toward; it arrives from incidence_angle"""
    return incidence_angle + pi


def sweep_scattering_cross_section(solid, exterior, ka_values, radius=0.5):
    """Rows of (ka, σ, σ/2a) over a ka sweep at fixed radius"""
    rows = []
    for ka in ka_values:
        frequency = ka * exterior.sound_speed / (2 * pi * radius)
        problem = MieProblem(radius, frequency, exterior, solid)
        coeffs = solve_coefficients_cramer(problem)
        sigma = scattering_cross_section(coeffs, problem.k3)
        rows.append((float(ka), sigma, sigma / (2 * radius)))
    return rows
