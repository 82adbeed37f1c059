"""Closed forms for a two-level environment and nonnegativity region maps.

A qubit environment with Hamiltonian diag(0, gap), ground state first, has
thermal states determined by a single polarization r(beta) = tanh(beta*gap/2).
States are parameterized as rho = (1/2)[[1+p, b], [conj(b), 1-p]] through
``EnvPoint``; trace distances and the sufficient nonnegativity condition then
reduce to elementary functions of (p, b), which this module exposes alongside
grid evaluation for region maps.  All formulas depend on the coherence only
through its magnitude, so grids scan (longitudinal, |coherence|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from .errors import DomainError, InvalidInput, NumericalError
from .entropy_production import ConstantBeta, EnergyMatching
from .linalg import DensityMatrix, HermitianMatrix
from .thermo import GibbsSolver, effective_beta

# Slack on the Bloch-ball constraint longitudinal^2 + |coherence|^2 <= 1.
_BALL_TOL = 1e-12

# Agreement required between the closed-form polarization inverse and the
# generic energy-matching solver inside example_distances.
_CONSISTENCY_TOL = 1e-9


def env_hamiltonian(gap: float) -> HermitianMatrix:
    """diag(0, gap) with the ground state first; gap must be positive."""
    gap = float(gap)
    if not (gap > 0 and math.isfinite(gap)):
        raise InvalidInput("gap must be positive and finite")
    return HermitianMatrix(np.diag([0.0, gap]))


def thermal_polarization(beta: float, gap: float) -> float:
    """Population asymmetry tanh(beta*gap/2) of the thermal qubit.

    Strictly increasing in beta, 0 at beta = 0, and +-1 at beta = +-inf
    (the ground and excited projectors).  The thermal state is
    (1/2) diag(1 + r, 1 - r).
    """
    gap = float(gap)
    if not (gap > 0 and math.isfinite(gap)):
        raise InvalidInput("gap must be positive and finite")
    beta = float(beta)
    if math.isnan(beta):
        raise InvalidInput("beta must not be NaN")
    if math.isinf(beta):
        return 1.0 if beta > 0 else -1.0
    return math.tanh(0.5 * beta * gap)


def beta_from_polarization(r: float, gap: float) -> float:
    """Inverse of thermal_polarization; +-1 map to +-inf."""
    gap = float(gap)
    if not (gap > 0 and math.isfinite(gap)):
        raise InvalidInput("gap must be positive and finite")
    r = float(r)
    if not (-1.0 <= r <= 1.0):
        raise DomainError(f"polarization must lie in [-1, 1], got {r!r}")
    if r == 1.0:
        return math.inf
    if r == -1.0:
        return -math.inf
    return 2.0 * math.atanh(r) / gap


@dataclass(frozen=True)
class EnvPoint:
    """Qubit state (1/2)[[1+p, b], [conj(b), 1-p]] by Bloch coordinates.

    ``longitudinal`` is the population asymmetry p, ``coherence`` the
    off-diagonal b.  The Bloch constraint p^2 + |b|^2 <= 1 is enforced.
    """

    longitudinal: float
    coherence: complex = 0.0

    def __post_init__(self):
        try:
            p = float(self.longitudinal)
            b = complex(self.coherence)
        except (TypeError, ValueError):
            raise InvalidInput("EnvPoint needs real longitudinal, complex coherence") from None
        if not (math.isfinite(p) and math.isfinite(b.real) and math.isfinite(b.imag)):
            raise InvalidInput("EnvPoint coordinates must be finite")
        if p * p + abs(b) ** 2 > 1.0 + _BALL_TOL:
            raise InvalidInput(
                f"Bloch constraint violated: p^2 + |b|^2 = {p * p + abs(b) ** 2:.6f} > 1"
            )
        object.__setattr__(self, "longitudinal", p)
        object.__setattr__(self, "coherence", b)

    def density_matrix(self) -> DensityMatrix:
        p, b = self.longitudinal, self.coherence
        mat = 0.5 * np.array([[1.0 + p, b], [np.conj(b), 1.0 - p]], dtype=complex)
        return DensityMatrix(mat)


def env_point_of(rho: DensityMatrix) -> EnvPoint:
    """Bloch coordinates of a qubit density matrix."""
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    if rho.dim != 2:
        raise InvalidInput("env_point_of needs a 2x2 density matrix")
    p = float((rho.mat[0, 0] - rho.mat[1, 1]).real)
    b = complex(2.0 * rho.mat[0, 1])
    # Rounding can push a pure state a hair outside the ball; renormalize.
    norm = math.sqrt(p * p + abs(b) ** 2)
    if 1.0 < norm <= 1.0 + 1e-9:
        p, b = p / norm, b / norm
    return EnvPoint(longitudinal=p, coherence=b)


class ExampleDistances(NamedTuple):
    """Closed-form trace distances for the qubit-environment example."""

    initial_distance: float
    final_distance: float


def example_distances(initial: EnvPoint, final: EnvPoint, beta_tau: float,
                      gap: float) -> ExampleDistances:
    """Trace distances |a|/2 and sqrt((s - r(beta_tau))^2 + |b|^2)/2.

    ``initial_distance`` is the distance of the initial environment state to
    the thermal state at its own effective inverse temperature, which the
    coherence alone controls; ``final_distance`` is the distance of the
    final state to the thermal state at the assigned ``beta_tau``.  Both are
    validated against the generic energy-matching solver: the effective
    inverse temperature of each point must reproduce its longitudinal
    coordinate, which pins the ground-state-first basis convention.
    """
    if not isinstance(initial, EnvPoint) or not isinstance(final, EnvPoint):
        raise InvalidInput("example_distances expects EnvPoint arguments")
    h_env = env_hamiltonian(gap)
    for pt in (initial, final):
        beta_star = effective_beta(pt.density_matrix(), h_env)
        r_back = thermal_polarization(beta_star, gap)
        if abs(r_back - pt.longitudinal) > _CONSISTENCY_TOL:
            raise NumericalError(
                f"polarization round trip drifted: r(beta*) = {r_back!r} "
                f"vs p = {pt.longitudinal!r}"
            )
    r_tau = thermal_polarization(beta_tau, gap)
    final_distance = 0.5 * math.hypot(final.longitudinal - r_tau, abs(final.coherence))
    return ExampleDistances(
        initial_distance=0.5 * abs(initial.coherence),
        final_distance=final_distance,
    )


def region_rhs(initial: EnvPoint, beta0: float, gap: float) -> float:
    """Threshold 2*H2(|a|/2) + 2*D(gamma(beta*0) || gamma(beta0)).

    The square root of this value is the radius of the ball outside which
    the sufficient condition holds.
    """
    from .bounds import binary_entropy  # late import avoids a module cycle

    if not isinstance(initial, EnvPoint):
        raise InvalidInput("region_rhs expects an EnvPoint")
    beta0 = float(beta0)
    if math.isnan(beta0):
        raise InvalidInput("beta0 must not be NaN")
    delta = 0.5 * abs(initial.coherence)
    beta_star0 = beta_from_polarization(initial.longitudinal, gap)
    solver = GibbsSolver(env_hamiltonian(gap))
    mismatch = solver.gibbs_relative_entropy(beta_star0, beta0)
    return 2.0 * binary_entropy(delta) + 2.0 * mismatch


def region_lhs(final: EnvPoint, beta_tau: float, gap: float) -> float:
    """(s - r(beta_tau))^2 + |b|^2, four times the squared final distance."""
    if not isinstance(final, EnvPoint):
        raise InvalidInput("region_lhs expects an EnvPoint")
    r_tau = thermal_polarization(beta_tau, gap)
    return (final.longitudinal - r_tau) ** 2 + abs(final.coherence) ** 2


def region_condition(initial: EnvPoint, final: EnvPoint, beta0: float,
                     beta_tau: float, gap: float) -> bool:
    """Sufficient condition for nonnegative entropy production.

    True certifies nonnegativity for any unitary process with these
    environment marginals and assigned temperatures; False is inconclusive.
    Passing the final point's own effective inverse temperature as
    ``beta_tau`` cancels the longitudinal term, leaving |b|^2 >= rhs.
    """
    return region_lhs(final, beta_tau, gap) >= region_rhs(initial, beta0, gap)


BetaTauPolicy = Union[ConstantBeta, EnergyMatching]


@dataclass(frozen=True)
class RegionGrid:
    """Grid specification for a region map over final states (s, |b|).

    ``beta0`` is the assigned initial inverse temperature; the initial
    environment state has longitudinal ``initial_longitudinal`` (default:
    thermal at beta0, which zeroes the thermal-mismatch term) and coherence
    magnitude ``coherence_abs``.  ``beta_tau_policy`` fixes the final
    reference: a constant assignment, or energy matching in which each
    column's own effective temperature is used and the condition becomes
    independent of s.
    """

    gap: float
    beta0: float
    beta_tau_policy: BetaTauPolicy
    coherence_abs: float
    s_min: float
    s_max: float
    s_count: int
    b_min: float
    b_max: float
    b_count: int
    initial_longitudinal: Optional[float] = None

    def __post_init__(self):
        gap = float(self.gap)
        if not (gap > 0 and math.isfinite(gap)):
            raise InvalidInput("gap must be positive and finite")
        object.__setattr__(self, "gap", gap)
        beta0 = float(self.beta0)
        if math.isnan(beta0):
            raise InvalidInput("beta0 must not be NaN")
        object.__setattr__(self, "beta0", beta0)
        if not isinstance(self.beta_tau_policy, (ConstantBeta, EnergyMatching)):
            raise InvalidInput("beta_tau_policy must be ConstantBeta or EnergyMatching")
        if not (int(self.s_count) >= 1 and int(self.b_count) >= 1):
            raise InvalidInput("grid needs at least one cell per axis")
        object.__setattr__(self, "s_count", int(self.s_count))
        object.__setattr__(self, "b_count", int(self.b_count))
        for name in ("s_min", "s_max", "b_min", "b_max", "coherence_abs"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidInput(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.s_min > self.s_max or self.b_min > self.b_max:
            raise InvalidInput("grid ranges must satisfy min <= max")
        if self.b_min < 0:
            raise InvalidInput("coherence magnitudes are nonnegative")
        if self.coherence_abs < 0:
            raise InvalidInput("coherence_abs must be nonnegative")
        p = self.initial_longitudinal
        if p is not None:
            p = float(p)
            if not math.isfinite(p):
                raise InvalidInput("initial_longitudinal must be finite")
            object.__setattr__(self, "initial_longitudinal", p)

    def initial_point(self) -> EnvPoint:
        p = self.initial_longitudinal
        if p is None:
            p = thermal_polarization(self.beta0, self.gap)
        return EnvPoint(longitudinal=p, coherence=self.coherence_abs)

    def s_values(self) -> np.ndarray:
        if self.s_count == 1:
            return np.array([0.5 * (self.s_min + self.s_max)])
        return np.linspace(self.s_min, self.s_max, self.s_count)

    def b_values(self) -> np.ndarray:
        if self.b_count == 1:
            return np.array([0.5 * (self.b_min + self.b_max)])
        return np.linspace(self.b_min, self.b_max, self.b_count)


class RegionCell(NamedTuple):
    """One grid cell of a region map."""

    s: float
    b_abs: float
    rhs: float
    holds: bool
    feasible: bool


@dataclass(frozen=True)
class RegionMap:
    """Evaluated region map: cells in row-major (s outer, b inner) order."""

    cells: tuple
    metadata: dict

    def write_csv(self, path: str) -> None:
        lines = ["s,b_abs,rhs,holds,feasible"]
        for c in self.cells:
            lines.append(
                f"{c.s!r},{c.b_abs!r},{c.rhs!r},"
                f"{'true' if c.holds else 'false'},"
                f"{'true' if c.feasible else 'false'}"
            )
        from .io import atomic_write_text

        atomic_write_text(path, "\n".join(lines) + "\n")


def emit_region_map(grid: RegionGrid) -> RegionMap:
    """Evaluate the sufficient condition on every grid cell.

    The threshold is shared by all cells; under a constant assignment the
    holds-region is the outside of a ball centered at (r(beta_tau), 0),
    under energy matching it is the horizontal band |b| >= sqrt(rhs).
    Cells violating the Bloch constraint are marked infeasible but still
    evaluated when the condition is defined there.
    """
    if not isinstance(grid, RegionGrid):
        raise InvalidInput("emit_region_map expects a RegionGrid")
    initial = grid.initial_point()
    rhs = region_rhs(initial, grid.beta0, grid.gap)
    constant = isinstance(grid.beta_tau_policy, ConstantBeta)
    r_tau = None
    if constant:
        r_tau = thermal_polarization(grid.beta_tau_policy.beta, grid.gap)

    cells = []
    for s in grid.s_values():
        s = float(s)
        for b in grid.b_values():
            b = float(b)
            feasible = s * s + b * b <= 1.0 + _BALL_TOL
            if constant:
                lhs = (s - r_tau) ** 2 + b * b
                holds = lhs >= rhs
            elif abs(s) <= 1.0:
                # Energy matching: the reference tracks the column itself,
                # so the longitudinal term cancels exactly.
                holds = b * b >= rhs
            else:
                holds = False  # no state exists here to match against
            cells.append(RegionCell(s=s, b_abs=b, rhs=rhs, holds=holds,
                                    feasible=feasible))

    beta_star0 = beta_from_polarization(initial.longitudinal, grid.gap)
    metadata = {
        "gap": grid.gap,
        "beta0": grid.beta0,
        "beta_star_initial": beta_star0,
        "initial_longitudinal": initial.longitudinal,
        "coherence_abs": grid.coherence_abs,
        "policy": "constant" if constant else "energy_matching",
        "beta_tau": grid.beta_tau_policy.beta if constant else None,
        "ball_center_s": r_tau,
        "ball_radius": math.sqrt(rhs) if math.isfinite(rhs) else math.inf,
        "rhs": rhs,
        "s_min": grid.s_min, "s_max": grid.s_max, "s_count": grid.s_count,
        "b_min": grid.b_min, "b_max": grid.b_max, "b_count": grid.b_count,
    }
    return RegionMap(cells=tuple(cells), metadata=metadata)
