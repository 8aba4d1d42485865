"""The quadrupolar trapping potential.

Evaluates the combined DC + RF potential, verifies the Laplace
constraint on the curvature coefficients, and samples the familiar
saddle on a grid. The exported CSV is long-form (axis1, axis2, phi) and
plots directly with any external tool.

Run:  python demos/05_trapping_potential.py
"""

import numpy as np

from itriage.potential import (
    PotentialParams,
    evaluate_potential,
    grid_csv_text,
    is_valid_quadrupole,
    laplace_residual,
    numerical_laplacian,
    sample_grid,
)

params = PotentialParams(
    dc_voltage=5.0,          # volts
    rf_voltage=200.0,        # volts
    omega_rf=2 * np.pi * 20e6,  # 20 MHz drive
    dc_coeffs=(0.2, 0.2, -0.4),   # 1/m^2, sums to zero
    rf_coeffs=(1.0, -1.0, 0.0),   # the rotating saddle
)

dc_sum, rf_sum = laplace_residual(params)
print(f"Coefficient sums: dc={dc_sum}, rf={rf_sum} "
      f"(valid quadrupole: {is_valid_quadrupole(params)})")

point = (1e-4, 5e-5, 0.0)  # 100 um x 50 um off axis
for t in (0.0, 0.25 / 20e6, 0.5 / 20e6):
    phi = evaluate_potential(params, *point, t)
    print(f"  phi{point} at t={t * 1e9:6.2f} ns = {phi:+.6e} V")
print()

# The numerical Laplacian vanishes everywhere for a valid quadrupole.
lap = numerical_laplacian(params, 2e-4, -1e-4, 3e-4, 1e-8)
print(f"Finite-difference Laplacian at a random point: {lap:.3e} V/m^2")
print()

# The saddle flips sign with the RF phase: that is what confines ions.
grid_0 = sample_grid(params, ("x", "y"), ((-1e-3, 1e-3), (-1e-3, 1e-3)), 5, t=0.0)
grid_half = sample_grid(
    params, ("x", "y"), ((-1e-3, 1e-3), (-1e-3, 1e-3)), 5, t=0.5 / 20e6
)
print("phi(x, y) at t = 0 (rows = x, columns = y, volts):")
print(np.array2string(grid_0, precision=4, suppress_small=True))
print("half an RF period later the saddle has flipped:")
print(np.array2string(grid_half, precision=4, suppress_small=True))
print()

csv = grid_csv_text(params, ("x", "y"), ((-1e-3, 1e-3), (-1e-3, 1e-3)), 3)
print("CSV export (header + one row per lattice point):")
print("\n".join(csv.splitlines()[:5]))
print("...")
