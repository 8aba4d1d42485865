"""Quadrupolar trapping potential: evaluation, Laplace checks, grids.

The potential combines a static term from the DC electrodes with an
oscillating term from the RF drive:

    phi(x, y, z, t) = U/2 * (a x^2 + b y^2 + c z^2)
                    + U_rf/2 * cos(omega_rf t) * (a' x^2 + b' y^2 + c' z^2)

Voltages are in volts, coordinates in meters, coefficients in 1/m^2 and
omega_rf in rad/s, so phi comes out in volts. A physical quadrupole needs
both coefficient triples to sum to zero (Laplace's equation); that is
checked explicitly, never assumed.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

Coeffs = tuple[float, float, float]

#: Central-difference step for the numerical Laplacian check, in meters.
LAPLACE_FD_STEP = 1e-3

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class PotentialParams:
    """Voltages, drive frequency and curvature coefficients of one trap."""

    dc_voltage: float  # U, volts
    rf_voltage: float  # RF amplitude, volts
    omega_rf: float  # RF angular frequency, rad/s, > 0
    dc_coeffs: Coeffs  # (a, b, c), 1/m^2
    rf_coeffs: Coeffs  # (a', b', c'), 1/m^2

    def __post_init__(self) -> None:
        values = (
            self.dc_voltage,
            self.rf_voltage,
            self.omega_rf,
            *self.dc_coeffs,
            *self.rf_coeffs,
        )
        if not np.all(np.isfinite(values)):
            raise ValueError("potential parameters must be finite")
        if self.omega_rf <= 0:
            raise ValueError(f"omega_rf must be positive, got {self.omega_rf}")

    @property
    def period(self) -> float:
        """One RF cycle, 2*pi/omega_rf, in seconds."""
        return 2.0 * np.pi / self.omega_rf


def evaluate_potential(p: PotentialParams, x, y, z, t):
    """Potential in volts at (x, y, z) meters and time t seconds.

    Accepts scalars or broadcastable numpy arrays; rejects non-finite
    inputs.
    """
    x, y, z, t = (np.asarray(v, dtype=float) for v in (x, y, z, t))
    for name, v in (("x", x), ("y", y), ("z", z), ("t", t)):
        if not np.all(np.isfinite(v)):
            raise ValueError(f"non-finite input for {name}")
    a, b, c = p.dc_coeffs
    ap, bp, cp = p.rf_coeffs
    dc_term = 0.5 * p.dc_voltage * (a * x**2 + b * y**2 + c * z**2)
    rf_term = (
        0.5
        * p.rf_voltage
        * np.cos(p.omega_rf * t)
        * (ap * x**2 + bp * y**2 + cp * z**2)
    )
    result = dc_term + rf_term
    return float(result) if result.ndim == 0 else result


def laplace_residual(p: PotentialParams) -> tuple[float, float]:
    """Coefficient sums (a+b+c, a'+b'+c'); both are zero for a quadrupole."""
    return (float(sum(p.dc_coeffs)), float(sum(p.rf_coeffs)))


def is_valid_quadrupole(p: PotentialParams, tol: float = 1e-9) -> bool:
    dc_sum, rf_sum = laplace_residual(p)
    return abs(dc_sum) <= tol and abs(rf_sum) <= tol


def numerical_laplacian(
    p: PotentialParams, x: float, y: float, z: float, t: float,
    h: float = LAPLACE_FD_STEP,
) -> float:
    """Central-difference Laplacian of the potential at one point."""
    total = 0.0
    point = [x, y, z]
    for axis in range(3):
        plus = list(point)
        minus = list(point)
        plus[axis] += h
        minus[axis] -= h
        total += (
            evaluate_potential(p, *plus, t)
            - 2.0 * evaluate_potential(p, *point, t)
            + evaluate_potential(p, *minus, t)
        ) / h**2
    return total


def sample_grid(
    p: PotentialParams,
    axis_pair: tuple[str, str],
    ranges: tuple[tuple[float, float], tuple[float, float]],
    resolution: int | tuple[int, int],
    t: float = 0.0,
) -> np.ndarray:
    """Sample the potential on a 2-D lattice with the third coordinate at 0.

    Returns a row-major array of shape (n1, n2): ``grid[i, j]`` is the
    potential at the i-th value of the first axis and j-th value of the
    second.
    """
    first, second = axis_pair
    if first not in AXES or second not in AXES or first == second:
        raise ValueError(f"axis pair must name two distinct axes of {AXES}")
    if isinstance(resolution, int):
        n1 = n2 = resolution
    else:
        n1, n2 = resolution
    if n1 < 2 or n2 < 2:
        raise ValueError(f"resolution must be at least 2 per axis, got {resolution}")
    (lo1, hi1), (lo2, hi2) = ranges

    v1 = np.linspace(lo1, hi1, n1)
    v2 = np.linspace(lo2, hi2, n2)
    mesh1, mesh2 = np.meshgrid(v1, v2, indexing="ij")
    coords = {axis: np.zeros_like(mesh1) for axis in AXES}
    coords[first] = mesh1
    coords[second] = mesh2
    return evaluate_potential(p, coords["x"], coords["y"], coords["z"], t)


def grid_axes(
    ranges: tuple[tuple[float, float], tuple[float, float]],
    resolution: int | tuple[int, int],
) -> tuple[np.ndarray, np.ndarray]:
    """Lattice coordinates matching ``sample_grid``'s layout."""
    if isinstance(resolution, int):
        n1 = n2 = resolution
    else:
        n1, n2 = resolution
    (lo1, hi1), (lo2, hi2) = ranges
    return np.linspace(lo1, hi1, n1), np.linspace(lo2, hi2, n2)


def write_grid_csv(
    destination: str | Path | TextIO,
    p: PotentialParams,
    axis_pair: tuple[str, str],
    ranges: tuple[tuple[float, float], tuple[float, float]],
    resolution: int | tuple[int, int],
    t: float = 0.0,
) -> None:
    """Write the sampled grid in long form: ``# axis1,axis2,phi`` header
    followed by one ``value1,value2,phi`` row per lattice point."""
    grid = sample_grid(p, axis_pair, ranges, resolution, t)
    v1, v2 = grid_axes(ranges, resolution)

    def emit(fh: TextIO) -> None:
        fh.write(f"# {axis_pair[0]},{axis_pair[1]},phi\n")
        for i in range(grid.shape[0]):
            for j in range(grid.shape[1]):
                fh.write(f"{float(v1[i])!r},{float(v2[j])!r},{float(grid[i, j])!r}\n")

    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            emit(fh)
    else:
        emit(destination)


def grid_csv_text(
    p: PotentialParams,
    axis_pair: tuple[str, str],
    ranges: tuple[tuple[float, float], tuple[float, float]],
    resolution: int | tuple[int, int],
    t: float = 0.0,
) -> str:
    buf = io.StringIO()
    write_grid_csv(buf, p, axis_pair, ranges, resolution, t)
    return buf.getvalue()
