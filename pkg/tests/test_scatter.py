import os
import unittest

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special
from scipy.integrate import dblquad

from scatterShape.core import scatter
from scatterShape.core.geometry import BinaryImage, BoundaryCurve, rasterize
from scatterShape.core.materials import STEEL, WATER, FluidMaterial
from scatterShape.errors import ConfigError, SolverError

SLOW = bool(os.environ.get("SCATTERSHAPE_SLOW"))


def small_disk(radius=0.5, grid=16):
    return rasterize(BoundaryCurve(radius), grid, 2.0)


def square_quadrature(k, h, dx, dy, order=24):
    """Tensor Gauss-Legendre integral of G over a pixel away from the source"""
    nodes, weights = leggauss(order)
    x = (dx + nodes / 2) * h
    y = (dy + nodes / 2) * h
    X, Y = np.meshgrid(x, y, indexing="ij")
    G = 0.25j * special.hankel1(0, k * np.hypot(X, Y))
    return complex(weights @ G @ weights * (h / 2) ** 2)


class TestSolverConfig(unittest.TestCase):
    def test_defaults(self):
        cfg = scatter.SolverConfig()
        self.assertEqual(len(cfg.angles), 87)
        self.assertEqual(cfg.angles[0], 0.0)
        self.assertEqual(cfg.frequencies, scatter.FREQUENCIES)

    def test_invalid_values(self):
        with self.assertRaises(ConfigError):
            scatter.SolverConfig({"tol": 0})
        with self.assertRaises(ConfigError):
            scatter.SolverConfig({"frequencies": ()})


class TestGreenWeights(unittest.TestCase):
    h = 2.0 / 64

    def wavenumbers(self):
        return [WATER.wavenumber(1000.0), WATER.wavenumber(3000.0)]

    def test_self_term_matches_square_integral(self):
        half = self.h / 2
        for k in self.wavenumbers():
            re, _ = dblquad(lambda y, x: -0.25 * special.y0(k * np.hypot(x, y)), 0, half, 0, half,
                            epsabs=1e-14, epsrel=1e-10)
            im, _ = dblquad(lambda y, x: 0.25 * special.j0(k * np.hypot(x, y)), 0, half, 0, half,
                            epsabs=1e-14, epsrel=1e-10)
            expected = 4 * complex(re, im)
            got = complex(scatter.pixel_weights(k, self.h, 0, 0))
            self.assertLess(abs(got - expected) / abs(expected), 1e-6, k)

    def test_near_weights_match_square_integral(self):
        for k in self.wavenumbers():
            for dx, dy in [(1, 0), (1, 1), (2, 1), (3, 3), (0, -2)]:
                expected = square_quadrature(k, self.h, dx, dy)
                got = complex(scatter.pixel_weights(k, self.h, dx, dy))
                self.assertLess(abs(got - expected) / abs(expected), 1e-6, (k, dx, dy))

    def test_far_weights_match_square_integral(self):
        for k in self.wavenumbers():
            for dx, dy in [(4, 0), (4, 3), (5, 5), (7, 2), (12, 0)]:
                expected = square_quadrature(k, self.h, dx, dy)
                got = complex(scatter.pixel_weights(k, self.h, dx, dy))
                self.assertLess(abs(got - expected) / abs(expected), 1e-4, (k, dx, dy))

    def test_near_table_is_symmetric(self):
        table = scatter.near_field_table(WATER.wavenumber(2000.0), self.h)
        self.assertEqual(table.shape, (scatter.NEAR_STENCIL + 1,) * 2)
        np.testing.assert_array_equal(table, table.T)
        self.assertFalse(table.flags.writeable)

    def test_distant_pixel_is_point_source(self):
        k, h = 4.0, 0.02
        expected = 0.25j * special.hankel1(0, k * 10 * h) * h ** 2
        got = complex(scatter.pixel_weights(k, h, 10, 0))
        self.assertLess(abs(got - expected) / abs(expected), 1e-3)

    def test_fft_convolution_matches_direct_sum(self):
        k, h, grid = 5.0, 0.1, 9
        rng = np.random.default_rng(0)
        values = rng.normal(size=(grid, grid)) + 1j * rng.normal(size=(grid, grid))
        rows, cols = (index.ravel() for index in np.indices((grid, grid)))
        di = rows[:, None] - rows[None, :]
        dj = cols[:, None] - cols[None, :]
        direct = (k ** 2 * scatter.pixel_weights(k, h, dj, di)) @ values.ravel()
        fast = scatter.apply_green(values, scatter.green_spectrum(k, h, grid))
        np.testing.assert_allclose(fast.ravel(), direct, rtol=1e-10, atol=1e-12)


class TestFieldSolve(unittest.TestCase):
    def test_contrast_value(self):
        contrast = scatter.build_contrast(small_disk(), WATER, STEEL, 1000.0)
        self.assertAlmostEqual(float(contrast.chi.real.min()), -0.88635, places=4)
        self.assertEqual(contrast.h, 2.0 / 16)

    def test_incident_wave_travels_toward_negative_x(self):
        contrast = scatter.build_contrast(small_disk(), WATER, STEEL, 1000.0)
        X, _ = contrast.coordinates()
        np.testing.assert_allclose(scatter.incident_field(contrast), np.exp(-1j * contrast.k * X))

    def test_empty_scatterer(self):
        contrast = scatter.build_contrast(BinaryImage.empty(16), WATER, STEEL, 1000.0)
        field = scatter.solve_total_field(contrast)
        self.assertEqual(field.iterations, 0)
        np.testing.assert_array_equal(scatter.far_field(contrast, field).amplitudes, 0)

    def test_residual_meets_tolerance(self):
        contrast = scatter.build_contrast(small_disk(), WATER, STEEL, 1000.0)
        field = scatter.solve_total_field(contrast, tol=1e-8)
        incident = scatter.incident_field(contrast)
        self.assertLessEqual(scatter.field_residual(contrast, field.values, incident), 1e-8)
        self.assertGreater(field.iterations, 0)

    def test_single_pixel_matches_born(self):
        grid, source = 16, (5, 9)
        steel = scatter.build_contrast(small_disk(), WATER, STEEL, 2000.0)
        chi = np.zeros((grid, grid), dtype=complex)
        chi[source] = 1e-3 * steel.chi.real.min()
        contrast = scatter.ContrastGrid(chi, steel.k, steel.h, 2000.0)
        incident = scatter.incident_field(contrast)
        field = scatter.solve_total_field(contrast, tol=1e-12)

        rows, cols = np.indices((grid, grid))
        weights = scatter.pixel_weights(contrast.k, contrast.h, cols - source[1], rows - source[0])
        born = contrast.k ** 2 * weights * chi[source] * incident[source]
        self.assertLess(scatter.relative_l2(field.values - incident, born), 0.01)

    def test_weak_contrast_is_close_to_born(self):
        faint = FluidMaterial({"name": "faint", "density": 1000.0, "bulk_modulus": 2.91e9 * 1.002})
        contrast = scatter.build_contrast(small_disk(), WATER, faint, 1000.0)
        full = scatter.solve_total_field(contrast, tol=1e-10)
        born = scatter.FieldGrid(scatter.incident_field(contrast))
        angles = scatter.far_field_angles()
        self.assertLess(scatter.relative_l2(
            scatter.far_field(contrast, born, angles).amplitudes,
            scatter.far_field(contrast, full, angles).amplitudes,
        ), 0.05)

    def test_invalid_tolerance(self):
        contrast = scatter.build_contrast(small_disk(), WATER, STEEL, 1000.0)
        with self.assertRaises(ValueError):
            scatter.solve_total_field(contrast, tol=0)


class TestSimulation(unittest.TestCase):
    def test_vector_layout(self):
        cfg = scatter.SolverConfig({"n_angles": 9, "frequencies": (1000.0, 2000.0)})
        farfields = scatter.simulate_sample(small_disk(), cfg.frequencies, WATER, STEEL, cfg)
        vector = farfields.vector()
        self.assertEqual(len(vector), 18)
        self.assertTrue(np.isfinite(vector).all())
        self.assertTrue((vector >= 0).all())
        np.testing.assert_array_equal(farfields.patterns[1].amplitudes, vector[9:])
        # Mirror symmetric scatterer under incidence along x
        np.testing.assert_allclose(vector[1:9], vector[8:0:-1], rtol=1e-4)

    def test_failures_recorded_in_order(self):
        sim = scatter.ScatteringSimulation({
            "solver": {"tol": 1e-12, "max_iter": 1, "n_angles": 5, "frequencies": (1000.0,)},
            "progress": False,
        })
        results = sim.run([small_disk(), BinaryImage.empty(16)])
        self.assertEqual(len(results[0]), 5)
        self.assertTrue(np.isnan(results[0]).all())
        self.assertTrue(np.isfinite(results[1]).all())
        self.assertEqual([index for index, _ in sim.failures], [0])

    def test_solver_error_reports_frequency(self):
        cfg = scatter.SolverConfig({"tol": 1e-12, "max_iter": 1, "frequencies": (1000.0, 2000.0)})
        with self.assertRaises(SolverError) as ctx:
            scatter.simulate_sample(small_disk(), cfg.frequencies, WATER, STEEL, cfg)
        self.assertEqual(ctx.exception.frequency_index, 0)


@unittest.skipUnless(SLOW, "set SCATTERSHAPE_SLOW=1 for full-grid solver checks")
class TestMieAgreement(unittest.TestCase):
    def test_disks_agree_with_series(self):
        rows = scatter.mie_agreement_report()
        self.assertEqual(len(rows), 15)
        for row in rows:
            self.assertLess(row["relative_l2"], 0.02, row)

    def test_dataset_grid_within_staircase_bound(self):
        for row in scatter.mie_agreement_report(grid=64):
            self.assertLess(row["relative_l2"], 0.03, row)

    def test_refinement_reduces_deviation(self):
        def deviation(grid):
            return scatter.mie_agreement_report(radii=(0.7,), freqs=(3000.0,), grid=grid)[0]["relative_l2"]

        self.assertLess(deviation(128), deviation(64))

    def test_energy_balance(self):
        contrast = scatter.build_contrast(scatter.disk_image(0.5), WATER, STEEL, 2000.0)
        field = scatter.solve_total_field(contrast, tol=1e-8)
        power = scatter.scattered_power(contrast, field)
        self.assertLess(abs(scatter.extinction(contrast, field) - power) / power, 0.02)


if __name__ == '__main__':
    unittest.main()
