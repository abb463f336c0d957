"""Hierarchical lattice: group arithmetic, random-walk kernels, Laplacians
and the block-projection decomposition of their resolvents.

Sites are integers ``0 .. L^(dN) - 1``.  Written in base L, an index has
N*d digits; digit ``k*d + i`` is the base-L digit of the i-th coordinate at
scale k.  Consequently ``x // L^(d j)`` labels the j-block containing x.
All matrices are dense and intended as reference oracles on small volumes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError

MAX_LOG2_SITES = 14


class BoundaryCondition(enum.Enum):
    FREE = "free"
    PERIODIC = "periodic"

    @classmethod
    def parse(cls, value: "BoundaryCondition | str") -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown boundary condition {value!r}") from None


@dataclass(frozen=True)
class LatticeSpec:
    L: int
    d: int
    N: int
    alpha: float = 2.0
    max_log2_sites: float = field(default=MAX_LOG2_SITES, compare=False)

    def __post_init__(self):
        if self.L < 2 or self.d < 1 or self.N < 0:
            raise DomainError(f"invalid lattice L={self.L}, d={self.d}, N={self.N}")
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")

    @property
    def block_size(self) -> int:
        """Number of (j-1)-blocks in a j-block, L^d."""
        return self.L**self.d

    @property
    def volume(self) -> int:
        return self.L ** (self.d * self.N)

    @property
    def z(self) -> float:
        return (1 - self.L ** (-self.d)) / (self.L**self.alpha - 1)

    @property
    def q(self) -> float:
        return (1 - self.L ** (-self.d)) / (1 - self.L ** (-(self.d + self.alpha)))

    def check_site(self, x: int) -> int:
        if not 0 <= x < self.volume:
            raise DomainError(f"site {x} outside 0..{self.volume - 1}")
        return int(x)

    def require_dense(self) -> None:
        if self.d * self.N * math.log2(self.L) > self.max_log2_sites:
            raise DomainError(
                f"dense matrices limited to 2^{self.max_log2_sites:g} sites; "
                f"L={self.L}, d={self.d}, N={self.N} is too large"
            )

    def with_N(self, N: int) -> "LatticeSpec":
        return LatticeSpec(self.L, self.d, N, self.alpha, self.max_log2_sites)


def _digits(spec: LatticeSpec, x: int) -> list[int]:
    out = []
    for _ in range(spec.d * spec.N):
        x, r = divmod(x, spec.L)
        out.append(r)
    return out


def _from_digits(spec: LatticeSpec, digits: Sequence[int]) -> int:
    x = 0
    for dig in reversed(digits):
        x = x * spec.L + dig
    return x


def site_from_coords(spec: LatticeSpec, coords: Sequence[int]) -> int:
    """Map Cartesian coordinates in {0..L^N-1}^d to the hierarchical index."""
    if len(coords) != spec.d:
        raise DomainError("coordinate vector has the wrong dimension")
    side = spec.L**spec.N
    digits = []
    per_axis = []
    for c in coords:
        if not 0 <= c < side:
            raise DomainError(f"coordinate {c} outside 0..{side - 1}")
        ax = []
        for _ in range(spec.N):
            c, r = divmod(c, spec.L)
            ax.append(r)
        per_axis.append(ax)
    for k in range(spec.N):
        for i in range(spec.d):
            digits.append(per_axis[i][k])
    return _from_digits(spec, digits)


def coords_from_site(spec: LatticeSpec, x: int) -> tuple[int, ...]:
    digits = _digits(spec, spec.check_site(x))
    coords = []
    for i in range(spec.d):
        c = 0
        for k in reversed(range(spec.N)):
            c = c * spec.L + digits[k * spec.d + i]
        coords.append(c)
    return tuple(coords)


def coalescence_scale(spec: LatticeSpec, x: int, y: int) -> int:
    """Smallest j such that x and y lie in the same j-block."""
    x, y = spec.check_site(x), spec.check_site(y)
    m = spec.block_size
    j = 0
    while x != y:
        x //= m
        y //= m
        j += 1
    return j


def group_add(spec: LatticeSpec, x: int, y: int) -> int:
    """Digit-wise addition mod L of the hierarchical coordinates."""
    dx = _digits(spec, spec.check_site(x))
    dy = _digits(spec, spec.check_site(y))
    return _from_digits(spec, [(a + b) % spec.L for a, b in zip(dx, dy)])


def coalescence_matrix(spec: LatticeSpec) -> np.ndarray:
    spec.require_dense()
    sites = np.arange(spec.volume)
    jmat = np.zeros((spec.volume, spec.volume), dtype=int)
    m = spec.block_size
    for j in range(spec.N):
        blocks = sites // m**j
        jmat += blocks[:, None] != blocks[None, :]
    return jmat


def block_average(spec: LatticeSpec, j: int) -> np.ndarray:
    """Q_j: averaging over j-blocks, entries L^(-dj) within a block."""
    if not 0 <= j <= spec.N:
        raise DomainError(f"scale {j} outside 0..{spec.N}")
    spec.require_dense()
    blocks = np.arange(spec.volume) // spec.block_size**j
    same = blocks[:, None] == blocks[None, :]
    return same * float(spec.L) ** (-spec.d * j)


def block_projection(spec: LatticeSpec, j: int) -> np.ndarray:
    """P_j = Q_{j-1} - Q_j."""
    if not 1 <= j <= spec.N:
        raise DomainError(f"scale {j} outside 1..{spec.N}")
    return block_average(spec, j - 1) - block_average(spec, j)


def step_matrix(spec: LatticeSpec, bc: BoundaryCondition | str) -> np.ndarray:
    """One-step transition matrix of the hierarchical random walk.

    Free: killed walk, row sums 1 - L^(-alpha N).  Periodic: the walk
    projected to the torus, which adds L^(-(d+alpha)N) to every entry.
    """
    bc = BoundaryCondition.parse(bc)
    if spec.N < 1:
        raise DomainError("step matrix needs N >= 1")
    jmat = coalescence_matrix(spec)
    decay = float(spec.L) ** (-(spec.d + spec.alpha))
    J = np.where(jmat > 0, decay**jmat / spec.z, 0.0)
    if bc is BoundaryCondition.PERIODIC:
        J = J + decay**spec.N
    return J


def laplacian(spec: LatticeSpec, bc: BoundaryCondition | str) -> np.ndarray:
    """-Delta = q (1 - J) for the requested boundary condition."""
    J = step_matrix(spec, bc)
    return spec.q * (np.eye(spec.volume) - J)


def gamma_factor(spec: LatticeSpec, j: int, a: float) -> float:
    """gamma_j(a) = L^(2(j-1)) / (1 + a L^(2(j-1)))."""
    scale = float(spec.L) ** (2 * (j - 1))
    denom = 1 + a * scale
    if not denom > 0:
        raise DomainError(f"mass {a} makes gamma_{j} nonpositive")
    return scale / denom


def _check_alpha2(spec: LatticeSpec) -> None:
    if spec.alpha != 2:
        raise DomainError("covariance decomposition requires alpha = 2")


def _check_mass(spec: LatticeSpec, a: float) -> None:
    if spec.N >= 1 and not a > -float(spec.L) ** (-2 * (spec.N - 1)):
        raise DomainError(f"mass {a} must exceed -L^(-2(N-1))")


def covariance_component(spec: LatticeSpec, j: int, a: float) -> np.ndarray:
    """C_j(a) = gamma_j(a) P_j."""
    _check_alpha2(spec)
    _check_mass(spec, a)
    return gamma_factor(spec, j, a) * block_projection(spec, j)


def zero_mode_mass(spec: LatticeSpec, bc: BoundaryCondition | str, a: float) -> float:
    """Mass carried by the constant mode: a (periodic) or a + q L^(-2N) (free)."""
    bc = BoundaryCondition.parse(bc)
    if bc is BoundaryCondition.PERIODIC:
        return a
    return a + spec.q * float(spec.L) ** (-2 * spec.N)


def resolvent(spec: LatticeSpec, bc: BoundaryCondition | str, a: float) -> np.ndarray:
    """(-Delta + a)^(-1) assembled from the block decomposition."""
    _check_alpha2(spec)
    _check_mass(spec, a)
    kappa = zero_mode_mass(spec, bc, a)
    if kappa == 0:
        raise DomainError("resolvent is singular: the constant mode has zero mass")
    total = block_average(spec, spec.N) / kappa
    for j in range(1, spec.N + 1):
        total = total + covariance_component(spec, j, a)
    return total


def free_susceptibility(spec: LatticeSpec, bc: BoundaryCondition | str, a: float) -> float:
    """Sum over y of the Gaussian two-point function; equals 1/(zero-mode mass)."""
    return 1.0 / zero_mode_mass(spec, bc, a)


def greens_diagonal(L: int, d: int, a: float = 0.0, tol: float = 1e-16) -> float:
    """Infinite-volume (-Delta + a)^(-1)_{00} as a convergent series over scales."""
    if a < 0:
        raise DomainError("greens_diagonal needs a >= 0")
    if d <= 2 and a == 0:
        raise DomainError("massless Green function diverges for d <= 2")
    total = 0.0
    k = 0
    ratio = float(L) ** (-(d - 2))
    while True:
        term = (1 - float(L) ** (-d)) * ratio**k / (1 + a * float(L) ** (2 * k))
        total += term
        if term < tol * total or k > 5000:
            return total
        k += 1


def export_csv(matrix: np.ndarray, path: str | Path) -> None:
    """Row-major CSV with 17 significant digits."""
    np.savetxt(path, np.asarray(matrix, dtype=float), fmt="%.17g", delimiter=",")
