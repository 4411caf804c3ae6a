"""Chain model: an inhomogeneous first site coupled to a uniform chain.

Site 0 has energy ``epsilon0`` and couples to site 1 with hopping ``v0``;
every other site has energy ``2 v`` and hopping ``v``, so the continuum of
the semi-infinite chain is ``[0, 4 v]``. Energies are in units of ``v`` and
times in units of ``hbar / v`` unless the fields are changed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class InvalidParameters(ValueError):
    """Raised for physically inadmissible chain parameters."""


class NotResonant(InvalidParameters):
    """Raised by pole-based routines when site 0 would bind a localized state."""


@dataclass(frozen=True)
class BandSpec:
    eps_lower: float
    eps_upper: float

    @property
    def bandwidth(self) -> float:
        return self.eps_upper - self.eps_lower


@dataclass(frozen=True)
class ChainParams:
    epsilon0: float
    v0: float
    v: float = 1.0
    m_sites: int | None = None
    hbar: float = 1.0
    is_resonant: bool = field(default=False, compare=False)

    @property
    def band(self) -> BandSpec:
        return BandSpec(0.0, 4.0 * self.v)

    @property
    def bandwidth(self) -> float:
        return 4.0 * self.v

    def with_sites(self, m_sites: int | None) -> "ChainParams":
        return validate(replace(self, m_sites=m_sites))


def resonance_condition(epsilon0: float, v0: float, v: float = 1.0) -> bool:
    """True when site 0 does not split off a localized state below or above the band."""
    return abs(epsilon0 - 2.0 * v) < 2.0 * v - v0 * v0 / v


def validate(params: ChainParams) -> ChainParams:
    """Check the invariants and return a copy with ``is_resonant`` filled in."""
    if not np.isfinite(params.epsilon0):
        raise InvalidParameters("epsilon0 must be finite")
    if not params.v > 0:
        raise InvalidParameters(f"v must be positive, got {params.v}")
    if not params.v0 > 0:
        raise InvalidParameters(f"v0 must be positive, got {params.v0}")
    if not params.hbar > 0:
        raise InvalidParameters(f"hbar must be positive, got {params.hbar}")
    if params.m_sites is not None:
        if int(params.m_sites) != params.m_sites or params.m_sites < 2:
            raise InvalidParameters(f"m_sites must be an integer >= 2, got {params.m_sites}")
    flag = resonance_condition(params.epsilon0, params.v0, params.v)
    m = None if params.m_sites is None else int(params.m_sites)
    return replace(params, m_sites=m, is_resonant=flag)


def make_params(epsilon0: float, v0: float, v: float = 1.0, m_sites: int | None = None,
                hbar: float = 1.0) -> ChainParams:
    return validate(ChainParams(epsilon0, v0, v, m_sites, hbar))


def require_weak_link(params: ChainParams) -> None:
    if params.v0 >= params.v:
        raise InvalidParameters(
            f"v0 = {params.v0} >= v = {params.v}: the closed-form pole expressions "
            "have denominator v^2 - v0^2 and are not defined"
        )


def require_resonant(params: ChainParams) -> None:
    require_weak_link(params)
    if not resonance_condition(params.epsilon0, params.v0, params.v):
        raise NotResonant(
            "no isolated resonance: |epsilon0 - 2v| >= 2v - v0^2/v, so site 0 "
            "gives rise to a localized state outside the band"
        )


def chain_arrays(params: ChainParams, m_sites: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the M-site Hamiltonian."""
    m = params.m_sites if m_sites is None else m_sites
    if m is None:
        raise InvalidParameters("m_sites is required for a finite chain")
    if m < 2:
        raise InvalidParameters(f"m_sites must be >= 2, got {m}")
    diag = np.full(m, 2.0 * params.v)
    diag[0] = params.epsilon0
    off = np.full(m - 1, -params.v)
    off[0] = -params.v0
    return diag, off


def build_hamiltonian(params: ChainParams, m_sites: int | None = None) -> np.ndarray:
    """Dense M x M real symmetric tridiagonal Hamiltonian (hoppings enter as -v)."""
    diag, off = chain_arrays(params, m_sites)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


class ConvergenceFailure(RuntimeError):
    """A numerical procedure hit its resource cap before meeting tolerance."""
