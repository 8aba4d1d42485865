from __future__ import annotations

import random

import numpy as np
import pytest

from oracles import oracle_phi
from itriage.potential import (
    LAPLACE_FD_STEP,
    PotentialParams,
    evaluate_potential,
    grid_csv_text,
    is_valid_quadrupole,
    laplace_residual,
    numerical_laplacian,
    sample_grid,
)


def random_params(rng: random.Random, valid: bool = True) -> PotentialParams:
    a, b = rng.uniform(-5, 5), rng.uniform(-5, 5)
    ap, bp = rng.uniform(-5, 5), rng.uniform(-5, 5)
    if valid:
        dc = (a, b, -(a + b))
        rf = (ap, bp, -(ap + bp))
    else:
        dc = (a, b, rng.uniform(-5, 5))
        rf = (ap, bp, rng.uniform(-5, 5))
    return PotentialParams(
        dc_voltage=rng.uniform(-10, 10),
        rf_voltage=rng.uniform(-10, 10),
        omega_rf=rng.uniform(1e5, 1e8),
        dc_coeffs=dc,
        rf_coeffs=rf,
    )


SADDLE = PotentialParams(2.0, 0.0, 2 * np.pi * 1e6, (1.0, -1.0, 0.0), (1.0, 1.0, -2.0))


class TestEvaluate:
    def test_zero_at_origin(self):
        rng = random.Random(0)
        for _ in range(10):
            p = random_params(rng)
            assert evaluate_potential(p, 0, 0, 0, rng.uniform(0, 1)) == 0.0

    def test_hand_arithmetic_dc_only(self):
        p = PotentialParams(2.0, 0.0, 1.0, (1.0, 1.0, -2.0), (1.0, 1.0, -2.0))
        assert evaluate_potential(p, 1.0, 0.0, 0.0, 0.37) == pytest.approx(1.0)

    def test_rf_phase(self):
        # U=0, U_rf=2, coeffs (1,1,-2), point (0,1,0): phi = cos(omega t)
        p = PotentialParams(0.0, 2.0, 2 * np.pi, (1.0, 1.0, -2.0), (1.0, 1.0, -2.0))
        value = evaluate_potential(p, 0.0, 1.0, 0.0, 0.25)
        assert value == pytest.approx(float(oracle_phi(p, 0, 1, 0, 0.25)), abs=1e-15)

    def test_high_precision_oracle_on_random_inputs(self):
        # t stays within a few RF periods so the cosine argument carries no
        # avoidable float64 reduction error, and near-cancellation points
        # are skipped: relative agreement is meaningless at the zero
        # crossing of a difference of two terms.
        rng = random.Random(11)
        checked = 0
        while checked < 300:
            p = random_params(rng, valid=rng.random() < 0.5)
            x, y, z = (rng.uniform(-1, 1) for _ in range(3))
            t = rng.uniform(0, 3 * p.period)
            expected = oracle_phi(p, x, y, z, t)
            scale = (
                abs(p.dc_voltage) / 2 * sum(abs(c) for c in p.dc_coeffs)
                + abs(p.rf_voltage) / 2 * sum(abs(c) for c in p.rf_coeffs)
            )
            if abs(expected) < 1e-2 * scale:
                continue
            got = evaluate_potential(p, x, y, z, t)
            assert abs(got - float(expected)) <= 1e-12 * abs(expected)
            checked += 1

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            evaluate_potential(SADDLE, np.nan, 0, 0, 0)
        with pytest.raises(ValueError):
            PotentialParams(np.inf, 0, 1, (1, 1, -2), (1, 1, -2))
        with pytest.raises(ValueError):
            PotentialParams(1, 0, 0, (1, 1, -2), (1, 1, -2))  # omega must be > 0

    def test_broadcasts_over_arrays(self):
        xs = np.linspace(-1, 1, 7)
        values = evaluate_potential(SADDLE, xs, 0.0, 0.0, 0.0)
        assert values.shape == xs.shape
        assert values[0] == evaluate_potential(SADDLE, xs[0], 0.0, 0.0, 0.0)


class TestLaplace:
    def test_constructed_zero_sum(self):
        p = PotentialParams(1, 1, 1, (1, 1, -2), (1, -1, 0))
        assert laplace_residual(p) == (0, 0)
        assert is_valid_quadrupole(p)

    def test_invalid_sums(self):
        p = PotentialParams(1, 1, 1, (1, 1, 1), (0, 0, 0))
        assert laplace_residual(p) == (3, 0)
        assert not is_valid_quadrupole(p)

    def test_finite_difference_laplacian_vanishes(self):
        rng = random.Random(13)
        for _ in range(300):
            p = random_params(rng, valid=True)
            x, y, z = (rng.uniform(-1, 1) for _ in range(3))
            t = rng.uniform(0, 1e-5)
            lap = numerical_laplacian(p, x, y, z, t, h=LAPLACE_FD_STEP)
            max_coeff = max(abs(c) for c in p.dc_coeffs + p.rf_coeffs)
            tol = 1e-6 * (abs(p.dc_voltage) + abs(p.rf_voltage)) * max_coeff
            assert abs(lap) <= tol

    def test_finite_difference_flags_invalid_coeffs(self):
        p = PotentialParams(10.0, 0.0, 1.0, (1.0, 1.0, 1.0), (1.0, 1.0, -2.0))
        lap = numerical_laplacian(p, 0.3, 0.2, 0.1, 0.0)
        assert abs(lap - 10.0 * 3.0) < 1e-4  # U * (a+b+c)


class TestTimeStructure:
    def test_periodicity(self):
        rng = random.Random(17)
        for _ in range(50):
            p = random_params(rng)
            x, y, z = (rng.uniform(-1, 1) for _ in range(3))
            t = rng.uniform(0, 1e-5)
            a = evaluate_potential(p, x, y, z, t)
            b = evaluate_potential(p, x, y, z, t + p.period)
            scale = abs(a) + abs(p.rf_voltage) + abs(p.dc_voltage)
            assert abs(a - b) <= 1e-9 * scale

    def test_time_average_is_dc_term(self):
        rng = random.Random(19)
        for _ in range(20):
            p = random_params(rng)
            x, y, z = (rng.uniform(-1, 1) for _ in range(3))
            ts = np.linspace(0.0, p.period, 2001)
            values = evaluate_potential(
                p, np.full_like(ts, x), np.full_like(ts, y), np.full_like(ts, z), ts
            )
            mean = np.trapezoid(values, ts) / p.period
            dc_only = PotentialParams(
                p.dc_voltage, 0.0, p.omega_rf, p.dc_coeffs, p.rf_coeffs
            )
            expected = evaluate_potential(dc_only, x, y, z, 0.0)
            scale = max(abs(expected), abs(p.rf_voltage), 1e-30)
            assert abs(mean - expected) <= 1e-9 * scale


class TestGrid:
    def test_symmetric_params_give_symmetric_grid(self):
        p = PotentialParams(2.0, 0.0, 1.0, (1.0, 1.0, -2.0), (1.0, 1.0, -2.0))
        grid = sample_grid(p, ("x", "y"), ((-1, 1), (-1, 1)), 2)
        assert grid.shape == (2, 2)
        assert np.allclose(grid, grid.T)

    def test_saddle_sign_structure(self):
        grid = sample_grid(SADDLE, ("x", "y"), ((-1, 1), (-1, 1)), 5)
        # positive along the x-axis (y=0 row is index j=2), negative along y
        assert grid[0, 2] > 0 and grid[4, 2] > 0
        assert grid[2, 0] < 0 and grid[2, 4] < 0

    def test_every_cell_matches_direct_evaluation(self):
        rng = random.Random(23)
        p = random_params(rng)
        grid = sample_grid(p, ("x", "z"), ((-0.5, 0.5), (0.0, 1.0)), (4, 6), t=1e-7)
        xs = np.linspace(-0.5, 0.5, 4)
        zs = np.linspace(0.0, 1.0, 6)
        for i in range(4):
            for j in range(6):
                assert grid[i, j] == evaluate_potential(p, xs[i], 0.0, zs[j], 1e-7)

    def test_resolution_floor(self):
        with pytest.raises(ValueError):
            sample_grid(SADDLE, ("x", "y"), ((-1, 1), (-1, 1)), 1)

    def test_bad_axis_pair(self):
        with pytest.raises(ValueError):
            sample_grid(SADDLE, ("x", "x"), ((-1, 1), (-1, 1)), 3)

    def test_csv_long_form(self):
        text = grid_csv_text(SADDLE, ("x", "y"), ((-1, 1), (-1, 1)), 2)
        lines = text.strip().split("\n")
        assert lines[0] == "# x,y,phi"
        assert len(lines) == 1 + 4
        x, y, phi = (float(v) for v in lines[1].split(","))
        assert (x, y) == (-1.0, -1.0)
        assert phi == evaluate_potential(SADDLE, -1.0, -1.0, 0.0, 0.0)
