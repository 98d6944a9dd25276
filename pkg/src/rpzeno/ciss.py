"""Initial states and recombination projectors for spin-selective pairs.

Three chirality-aware variants are supported on top of the plain singlet
projection ("none"): a spin-polarizing model ("cisp"), a singlet-triplet
coherence model ("cisc") and a one-parameter quantum channel ("channel")
that interpolates between them.  Electron-space operators live in the
product basis (uu, ud, du, dd) with z the charge-transfer axis; full-space
states append a maximally mixed nuclear factor.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .spincore import SpinSystem, spin_operators

__all__ = [
    "CissModel", "Precursor", "CissConfig", "DensityOperator",
    "cisp_projector", "cisc_projector", "channel_state",
    "initial_state", "recombination_projector",
]

_CHI_LIMIT = np.pi / 2 + 1e-12


class CissModel(str, enum.Enum):
    NONE = "none"
    CISP = "cisp"
    CISC = "cisc"
    CHANNEL = "channel"


class Precursor(str, enum.Enum):
    SINGLET = "singlet"
    TRIPLET = "triplet"


def _electron_basis():
    sx, sy, sz = spin_operators(2)
    i2 = np.eye(2)
    s1 = [np.kron(p, i2) for p in (sx, sy, sz)]
    s2 = [np.kron(i2, p) for p in (sx, sy, sz)]
    return s1, s2


_S1, _S2 = _electron_basis()
_SS_Z = _S1[2] @ _S2[2]
_SS_PERP = _S1[0] @ _S2[0] + _S1[1] @ _S2[1]
_SS_CROSS = _S1[0] @ _S2[1] - _S1[1] @ _S2[0]
_POL_Z = _S1[2] - _S2[2]
_I4 = np.eye(4, dtype=complex)

_KET_UD = np.array([0, 1, 0, 0], dtype=complex)
_KET_DU = np.array([0, 0, 1, 0], dtype=complex)
_KET_S = (_KET_UD - _KET_DU) / np.sqrt(2)
_KET_T0 = (_KET_UD + _KET_DU) / np.sqrt(2)


@dataclass
class CissConfig:
    """Which state/projector family to use and its angles.

    ``chi`` is the chirality angle in radians; ``channel_j`` the exchange
    angle of the interpolating channel (pi/8 recovers the polarizing model,
    0 the coherence model with theta = chi/2).
    """

    model: CissModel = CissModel.NONE
    chi: float = 0.0
    channel_j: float = 0.0
    precursor: Precursor = Precursor.SINGLET

    def __post_init__(self):
        self.model = CissModel(self.model)
        self.precursor = Precursor(self.precursor)
        if not np.isfinite(self.chi) or abs(self.chi) > _CHI_LIMIT:
            raise ValueError(f"chi must lie in [-pi/2, pi/2], got {self.chi}")
        if not np.isfinite(self.channel_j):
            raise ValueError("channel_j must be finite")

    def with_chi(self, chi: float) -> "CissConfig":
        return CissConfig(self.model, chi, self.channel_j, self.precursor)


@dataclass(eq=False)
class DensityOperator:
    """A density matrix plus the basis bookkeeping the observables need."""

    matrix: np.ndarray
    nuclear_dim: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if m.shape[0] % 4 or m.shape[0] != 4 * self.nuclear_dim:
            raise ValueError(f"dimension {m.shape[0]} does not match 4 x {self.nuclear_dim}")
        self.matrix = m

    def validate(self, tol: float = 1e-10):
        m = self.matrix
        if np.abs(m - m.conj().T).max() > 1e-12 * max(1.0, np.abs(m).max()):
            raise ValueError("density matrix not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace {np.trace(m).real} != 1")
        w = np.linalg.eigvalsh(m)
        if w.min() < -tol:
            raise ValueError(f"density matrix not positive (min eigenvalue {w.min():.3e})")
        return self


def cisp_projector(chi: float) -> np.ndarray:
    """Rank-1 electron projector onto cos(chi/2)|S> + sin(chi/2)|T0>."""
    psi = np.cos(chi / 2) * _KET_S + np.sin(chi / 2) * _KET_T0
    return np.outer(psi, psi.conj())


def cisc_projector(theta: float) -> np.ndarray:
    """Rank-1 electron projector onto cos(theta)|S> + i sin(theta)|T0>."""
    psi = np.cos(theta) * _KET_S + 1j * np.sin(theta) * _KET_T0
    return np.outer(psi, psi.conj())


def _channel_electron(chi: float, j: float, reverse: bool) -> np.ndarray:
    """Electron-space channel output for the singlet, as an operator sum.

    ``reverse`` flips the sign of the polarization term only, which is the
    back-transfer convention used for recombination; it leaves the
    coherence model (j = 0) unchanged and maps chi to -chi in the
    polarizing limit (j = pi/8).
    """
    sign = -1.0 if reverse else 1.0
    return (0.25 * _I4 - _SS_Z
            - np.cos(chi) * _SS_PERP
            - np.sin(chi) * np.cos(4 * j) * _SS_CROSS
            - sign * 0.5 * np.sin(chi) * np.sin(4 * j) * _POL_Z)


def _with_mixed_nuclei(electron_mat: np.ndarray, nuclear_dim: int) -> np.ndarray:
    if nuclear_dim == 1:
        return electron_mat.copy()
    return np.kron(electron_mat, np.eye(nuclear_dim) / nuclear_dim)


def channel_state(precursor, chi: float, j: float, nuclear_dim: int) -> DensityOperator:
    """Radical-pair state created by the chiral transfer channel.

    The singlet precursor maps to a pure electron state; the triplet
    precursor to (1 - singlet output)/3.  Nuclei enter maximally mixed.
    """
    e_singlet = _channel_electron(chi, j, reverse=False)
    if Precursor(precursor) == Precursor.SINGLET:
        mat = _with_mixed_nuclei(e_singlet, nuclear_dim)
    else:
        mat = _with_mixed_nuclei((_I4 - e_singlet) / 3, nuclear_dim)
    return DensityOperator(mat, nuclear_dim)


def _formation_electron(config: CissConfig) -> np.ndarray:
    """Electron part of the singlet-precursor formation state."""
    if config.model == CissModel.NONE:
        return cisp_projector(0.0)
    if config.model == CissModel.CISP:
        return cisp_projector(-config.chi)
    if config.model == CissModel.CISC:
        return cisc_projector(config.chi / 2)
    return _channel_electron(config.chi, config.channel_j, reverse=False)


def initial_state(config: CissConfig, system: SpinSystem) -> DensityOperator:
    """Normalized initial density operator for the configured model."""
    m = system.nuclear_dim
    e_singlet = _formation_electron(config)
    if config.precursor == Precursor.SINGLET:
        mat = _with_mixed_nuclei(e_singlet, m)
    else:
        mat = _with_mixed_nuclei((_I4 - e_singlet) / 3, m)
    return DensityOperator(mat, m)


def recombination_projector(config: CissConfig, system: SpinSystem) -> np.ndarray:
    """Full-space projector selecting the recombining electron state.

    Spin polarization reverses between formation and recombination, so the
    polarizing model uses +chi here against -chi in ``initial_state``; the
    coherence model uses the same angle for both.  Independent of precursor.
    """
    if config.model == CissModel.NONE:
        e = cisp_projector(0.0)
    elif config.model == CissModel.CISP:
        e = cisp_projector(config.chi)
    elif config.model == CissModel.CISC:
        e = cisc_projector(config.chi / 2)
    else:
        e = _channel_electron(config.chi, config.channel_j, reverse=True)
    m = system.nuclear_dim
    return e.copy() if m == 1 else np.kron(e, np.eye(m))
