"""
Membrane Physics Module
Small-deflection model of one clamped square CMOS membrane and its
parallel-plate readout capacitance.

Model:
- Flexural rigidity D = E*t^3 / (12*(1 - nu^2))
- Center deflection w0 = alpha * p * a^4 / D (clamped square plate)
- Deflected shape w/w0 = 1/4 * (1 + cos(2*pi*x/a)) * (1 + cos(2*pi*y/a))
- Capacitance C = eps0 * integral over electrode of dA / (gap0 - w(x, y))

Sign convention: positive net pressure (contact minus backpressure) pushes
the membrane toward the bottom electrode and raises the capacitance.
"""
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import EPSILON_0, MEMBRANE
from errors import InvalidSpec, MembraneContact

# Center deflection coefficient of a clamped square plate under uniform load
PLATE_ALPHA = 0.00126


@dataclass(frozen=True)
class MembraneGeometry:
    side_length: float = MEMBRANE["side_length"]
    thickness: float = MEMBRANE["thickness"]
    gap0: float = MEMBRANE["gap0"]
    electrode_coverage: float = MEMBRANE["electrode_coverage"]

    def __post_init__(self):
        if self.side_length <= 0 or self.thickness <= 0 or self.gap0 <= 0:
            raise InvalidSpec("membrane lengths must be positive")
        if not 0 < self.electrode_coverage <= 1:
            raise InvalidSpec("electrode_coverage must be in (0, 1]")

    @property
    def electrode_side(self) -> float:
        """Side of the centered square top electrode."""
        return self.side_length * math.sqrt(self.electrode_coverage)

    @property
    def electrode_area(self) -> float:
        return self.electrode_side ** 2


@dataclass(frozen=True)
class MaterialParams:
    youngs_modulus: float = MEMBRANE["youngs_modulus"]
    poisson_ratio: float = MEMBRANE["poisson_ratio"]

    def __post_init__(self):
        if self.youngs_modulus <= 0:
            raise InvalidSpec("youngs_modulus must be positive")
        if not 0 <= self.poisson_ratio < 0.5:
            raise InvalidSpec("poisson_ratio must be in [0, 0.5)")


@dataclass(frozen=True)
class DeflectionProfile:
    """Center deflection (m, + toward the bottom electrode); shape is fixed."""
    center_deflection: float
    side_length: float

    def shape(self, x, y):
        return shape(self.side_length, x, y)

    def w(self, x, y):
        return self.center_deflection * self.shape(x, y)


def shape(side_length: float, x, y):
    """
    Normalized clamped-plate shape on physical coordinates (origin at the
    plate center). Zero with zero slope on all four edges, 1 at the center.
    """
    kx = 2 * np.pi / side_length
    return 0.25 * (1 + np.cos(kx * np.asarray(x))) * (1 + np.cos(kx * np.asarray(y)))


def flexural_rigidity(geometry: MembraneGeometry, material: MaterialParams) -> float:
    """
    Plate bending stiffness.

    Formula: D = E * t^3 / (12 * (1 - nu^2))
    """
    e = material.youngs_modulus
    t = geometry.thickness
    nu = material.poisson_ratio
    return e * t ** 3 / (12 * (1 - nu ** 2))


def _center_deflection(geometry, material, net_pressure):
    d = flexural_rigidity(geometry, material)
    return PLATE_ALPHA * np.asarray(net_pressure, dtype=float) * geometry.side_length ** 4 / d


def deflect(geometry: MembraneGeometry, material: MaterialParams, net_pressure: float,
            contact_fraction: float = MEMBRANE["contact_fraction"]) -> DeflectionProfile:
    """
    Deflection under a uniform net pressure (Pa).

    Raises MembraneContact when |w0| reaches contact_fraction * gap0: the
    linear plate model and the charge front end are both invalid there.
    """
    w0 = float(_center_deflection(geometry, material, net_pressure))
    if abs(w0) >= contact_fraction * geometry.gap0:
        raise MembraneContact(
            f"center deflection {w0 * 1e9:.1f} nm exceeds "
            f"{contact_fraction:.0%} of the {geometry.gap0 * 1e9:.0f} nm gap"
        )
    return DeflectionProfile(center_deflection=w0, side_length=geometry.side_length)


def _electrode_grid(geometry: MembraneGeometry, n: int):
    """Midpoint grid over the electrode: shape values and the cell area."""
    side = geometry.electrode_side
    h = side / n
    coords = -side / 2 + (np.arange(n) + 0.5) * h
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    return shape(geometry.side_length, xx, yy).ravel(), h * h


def reference_capacitance(geometry: MembraneGeometry) -> float:
    """C0 = eps0 * A_electrode / gap0 (undeflected element, also the reference)."""
    return EPSILON_0 * geometry.electrode_area / geometry.gap0


def capacitance(geometry: MembraneGeometry, profile: DeflectionProfile,
                n: int = MEMBRANE["quadrature_points"]) -> float:
    """
    Parallel-plate capacitance of the deflected membrane.

    Evaluated with an n x n tensor-product midpoint rule over the electrode.
    """
    if profile.center_deflection == 0:
        return reference_capacitance(geometry)

    phi, cell = _electrode_grid(geometry, n)
    gap = geometry.gap0 - profile.center_deflection * phi
    if np.any(gap <= 0):
        raise MembraneContact("membrane touches the bottom electrode")
    return float(EPSILON_0 * cell * np.sum(1.0 / gap))


def capacitance_sensitivity(geometry: MembraneGeometry,
                            n: int = MEMBRANE["quadrature_points"]) -> float:
    """
    dC/dw_center at w = 0.

    Formula: eps0 / gap0^2 * integral of shape over the electrode
    """
    phi, cell = _electrode_grid(geometry, n)
    return float(EPSILON_0 / geometry.gap0 ** 2 * cell * np.sum(phi))


def capacitance_series(geometry: MembraneGeometry, material: MaterialParams, pressures,
                       contact_fraction: float = MEMBRANE["contact_fraction"],
                       n: int = MEMBRANE["quadrature_points"], chunk: int = 512) -> np.ndarray:
    """
    Vectorized deflect + capacitance over an array of net pressures.

    Raises MembraneContact carrying the index of the first offending sample
    in `element` = None / `time` = None; callers translate the index.
    """
    pressures = np.asarray(pressures, dtype=float)
    w0 = _center_deflection(geometry, material, pressures)

    bad = np.flatnonzero(np.abs(w0) >= contact_fraction * geometry.gap0)
    if bad.size:
        err = MembraneContact(
            f"center deflection {w0[bad[0]] * 1e9:.1f} nm exceeds "
            f"{contact_fraction:.0%} of the gap"
        )
        err.sample_index = int(bad[0])
        raise err

    phi, cell = _electrode_grid(geometry, n)
    out = np.empty_like(w0)
    for start in range(0, w0.size, chunk):
        block = w0[start:start + chunk]
        gap = geometry.gap0 - block[:, None] * phi[None, :]
        out[start:start + chunk] = EPSILON_0 * cell * np.sum(1.0 / gap, axis=1)
    # Exact C0 for undeflected samples
    out[w0 == 0] = reference_capacitance(geometry)
    return out


def galerkin_alpha() -> float:
    """
    Single-term energy-method coefficient for the cosine-product shape.

    With a unit plate, the strain energy D/2 * int (lap w)^2 = D * pi^4 * w0^2
    balances the load work q * w0 / 4, giving alpha = 1 / (8 * pi^4).
    """
    return 1.0 / (8 * math.pi ** 4)


def plate_alpha_fd(n: int = 101) -> float:
    """
    Clamped-plate coefficient from a finite-difference solve of
    lap^2 w = q / D on the unit square (q = D = 1), n x n interior nodes.

    Clamping uses ghost nodes mirrored across the edge (w = 0, dw/dn = 0),
    which turns the first/last diagonal entry of the 1D fourth difference
    into 7 instead of 6.
    """
    h = 1.0 / (n + 1)
    ones = np.ones(n)

    d2 = sparse.diags([ones[:-1], -2 * ones, ones[:-1]], [-1, 0, 1], format="csr")
    main = 6 * ones
    main[0] = main[-1] = 7
    d4 = sparse.diags(
        [ones[:-2], -4 * ones[:-1], main, -4 * ones[:-1], ones[:-2]],
        [-2, -1, 0, 1, 2], format="csr",
    )
    eye = sparse.identity(n, format="csr")
    operator = (sparse.kron(d4, eye) + sparse.kron(eye, d4) + 2 * sparse.kron(d2, d2)) / h ** 4

    w = spsolve(operator.tocsc(), np.ones(n * n))
    return float(w.max())


if __name__ == "__main__":
    geometry = MembraneGeometry()
    material = MaterialParams()

    print("Membrane element")
    print("=" * 50)
    print(f"  D        = {flexural_rigidity(geometry, material):.4e} N*m")
    print(f"  C0       = {reference_capacitance(geometry) * 1e15:.2f} fF")
    print(f"  alpha    = {PLATE_ALPHA} (Galerkin {galerkin_alpha():.6f})")

    for mmhg in (0, 80, 120):
        profile = deflect(geometry, material, mmhg * 133.322)
        c = capacitance(geometry, profile)
        print(f"  {mmhg:3d} mmHg -> w0 = {profile.center_deflection * 1e9:6.2f} nm, "
              f"C = {c * 1e15:.4f} fF")
