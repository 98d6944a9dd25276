"""Spin systems and Hamiltonian construction for a radical pair.

A system holds two electron spins (slots 0 and 1) followed by the nuclei of
radical A and then radical B, each a kron factor in listed order.  All
Hamiltonians are dense complex matrices in rad/us, built in the laboratory
frame whose z axis is the charge-transfer (quantization) axis; molecular
frame tensors and axes are mapped into it by ``frame_rotation``.
"""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .constants import (DEFAULT_FIELD_MT, GAMMA_E, MT_TO_RAD_PER_US,
                        dipolar_coupling)

__all__ = [
    "NucleusSpec", "DipolarSpec", "Orientation", "SpinSystem",
    "spin_operators", "embed", "field_vector", "build_zeeman",
    "build_hyperfine", "build_eed", "singlet_projector", "triplet_projector",
]


@lru_cache(maxsize=32)
def spin_operators(multiplicity: int):
    """Return (Sx, Sy, Sz) for a spin of the given multiplicity.

    The matrices are complex, Hermitian and satisfy [Sx, Sy] = i Sz.  The
    basis is ordered by descending magnetic quantum number.
    """
    if multiplicity < 2:
        raise ValueError(f"multiplicity must be at least 2, got {multiplicity}")
    s = (multiplicity - 1) / 2
    m = s - np.arange(multiplicity)
    sz = np.diag(m).astype(complex)
    sp = np.zeros((multiplicity, multiplicity), dtype=complex)
    for k in range(multiplicity - 1):
        sp[k, k + 1] = np.sqrt(s * (s + 1) - m[k + 1] * (m[k + 1] + 1))
    sx = (sp + sp.conj().T) / 2
    sy = (sp - sp.conj().T) / 2j
    for op in (sx, sy, sz):
        op.setflags(write=False)
    return sx, sy, sz


def embed(op: np.ndarray, slot: int, dims) -> np.ndarray:
    """Lift a single-site operator to the full product space.

    ``dims`` lists the multiplicity of every site; the operator acts on
    ``dims[slot]`` and identities fill the remaining factors.
    """
    dims = list(dims)
    if not 0 <= slot < len(dims):
        raise ValueError(f"slot {slot} outside 0..{len(dims) - 1}")
    if op.shape != (dims[slot], dims[slot]):
        raise ValueError(f"operator shape {op.shape} does not match dims[{slot}]={dims[slot]}")
    left = int(np.prod(dims[:slot], dtype=np.int64)) if slot else 1
    right = int(np.prod(dims[slot + 1:], dtype=np.int64)) if slot + 1 < len(dims) else 1
    out = op.astype(complex)
    if left > 1:
        out = np.kron(np.eye(left), out)
    if right > 1:
        out = np.kron(out, np.eye(right))
    return out


@dataclass(eq=False)
class NucleusSpec:
    """One nucleus: multiplicity 2I+1 and its 3x3 hyperfine tensor in mT."""

    multiplicity: int
    tensor_mT: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.multiplicity < 2:
            raise ValueError(f"nuclear multiplicity must be >= 2, got {self.multiplicity}")
        t = np.array(self.tensor_mT, dtype=float)
        if t.shape != (3, 3):
            raise ValueError(f"hyperfine tensor must be 3x3, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValueError(f"hyperfine tensor of {self.label or 'nucleus'} has non-finite entries")
        t.setflags(write=False)
        self.tensor_mT = t


@dataclass(eq=False)
class DipolarSpec:
    """Electron-electron dipolar coupling.

    Either a point-dipole form (distance in nm plus unit interradical axis in
    the molecular frame) or an explicit 3x3 tensor in mT.  An explicit tensor
    must be symmetric and traceless unless ``allow_general_tensor`` is set.
    """

    distance_nm: float | None = None
    axis: np.ndarray | None = None
    tensor_mT: np.ndarray | None = None
    allow_general_tensor: bool = False

    def __post_init__(self):
        point = self.distance_nm is not None or self.axis is not None
        if point and self.tensor_mT is not None:
            raise ValueError("give either (distance, axis) or an explicit tensor, not both")
        if point:
            if self.distance_nm is None or self.axis is None:
                raise ValueError("point-dipole form needs both distance and axis")
            if self.distance_nm <= 0:
                raise ValueError(f"distance must be positive, got {self.distance_nm}")
            u = np.array(self.axis, dtype=float)
            if u.shape != (3,):
                raise ValueError("axis must be a 3-vector")
            if abs(np.linalg.norm(u) - 1.0) > 1e-12:
                raise ValueError(f"axis must be a unit vector, |u| = {np.linalg.norm(u)}")
            u.setflags(write=False)
            self.axis = u
        elif self.tensor_mT is not None:
            t = np.array(self.tensor_mT, dtype=float)
            if t.shape != (3, 3):
                raise ValueError("dipolar tensor must be 3x3")
            if not np.all(np.isfinite(t)):
                raise ValueError("dipolar tensor has non-finite entries")
            if not self.allow_general_tensor:
                scale = max(1.0, np.abs(t).max())
                if np.abs(t - t.T).max() > 1e-10 * scale:
                    raise ValueError("dipolar tensor not symmetric; set allow_general_tensor to accept")
                if abs(np.trace(t)) > 1e-10 * scale:
                    raise ValueError("dipolar tensor not traceless; set allow_general_tensor to accept")
            t.setflags(write=False)
            self.tensor_mT = t
        else:
            raise ValueError("dipolar spec needs (distance, axis) or a tensor; use none() for no coupling")

    @classmethod
    def none(cls):
        """No dipolar coupling."""
        return cls(tensor_mT=np.zeros((3, 3)))

    @property
    def is_point_dipole(self) -> bool:
        return self.distance_nm is not None

    def coupling_rad_per_us(self) -> np.ndarray:
        """The 3x3 coupling matrix D in rad/us, molecular frame: H = S1 . D . S2."""
        if self.is_point_dipole:
            d = dipolar_coupling(self.distance_nm)
            u = self.axis
            return -d * (3 * np.outer(u, u) - np.eye(3))
        return MT_TO_RAD_PER_US * np.asarray(self.tensor_mT, dtype=float)


@dataclass(frozen=True)
class Orientation:
    """Field direction in spherical polar angles (radians)."""

    theta: float
    phi: float

    def unit_vector(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])


def field_vector(orientation: Orientation, magnitude_mT: float) -> np.ndarray:
    """Cartesian field vector in mT for a direction and magnitude."""
    if magnitude_mT < 0:
        raise ValueError(f"field magnitude must be non-negative, got {magnitude_mT}")
    return magnitude_mT * orientation.unit_vector()


@dataclass(eq=False)
class SpinSystem:
    """Radical pair: two electrons plus the nuclei of each radical.

    Parameters
    ----------
    nuclei_a, nuclei_b:
        Nuclei coupled to electron 1 and electron 2 respectively.
    dipolar:
        Electron-electron coupling spec.
    field_mT:
        Static field magnitude.
    gamma_e:
        Signed electron gyromagnetic ratio in rad us^-1 mT^-1.  A pair of
        values assigns one per electron.
    frame_rotation:
        Proper rotation taking molecular-frame vectors into the lab frame
        whose z axis is the quantization axis.
    """

    nuclei_a: list = field(default_factory=list)
    nuclei_b: list = field(default_factory=list)
    dipolar: DipolarSpec = field(default_factory=DipolarSpec.none)
    field_mT: float = DEFAULT_FIELD_MT
    gamma_e: float | tuple = GAMMA_E
    frame_rotation: np.ndarray | None = None

    def __post_init__(self):
        if self.field_mT < 0:
            raise ValueError(f"field magnitude must be non-negative, got {self.field_mT}")
        if self.frame_rotation is not None:
            r = np.array(self.frame_rotation, dtype=float)
            if r.shape != (3, 3):
                raise ValueError("frame_rotation must be 3x3")
            if np.abs(r @ r.T - np.eye(3)).max() > 1e-12 or abs(np.linalg.det(r) - 1) > 1e-12:
                raise ValueError("frame_rotation must be a proper rotation")
            r.setflags(write=False)
            self.frame_rotation = r

    @property
    def gamma_pair(self) -> tuple:
        g = self.gamma_e
        if np.ndim(g) == 0:
            return (float(g), float(g))
        if len(g) != 2:
            raise ValueError("gamma_e must be a scalar or a pair")
        return (float(g[0]), float(g[1]))

    @property
    def dims(self) -> list:
        return [2, 2] + [n.multiplicity for n in self.nuclei_a] + [n.multiplicity for n in self.nuclei_b]

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    @property
    def nuclear_dim(self) -> int:
        return self.dim // 4

    def rotation(self) -> np.ndarray:
        return np.eye(3) if self.frame_rotation is None else self.frame_rotation

    @cached_property
    def electron_ops(self):
        """((S1x, S1y, S1z), (S2x, S2y, S2z)) embedded in the full space."""
        pauli = spin_operators(2)
        return (tuple(embed(p, 0, self.dims) for p in pauli),
                tuple(embed(p, 1, self.dims) for p in pauli))

    @cached_property
    def zero_field_hamiltonian(self) -> np.ndarray:
        """Orientation-independent part: hyperfine plus dipolar."""
        return build_hyperfine(self) + build_eed(self)

    def hamiltonian(self, orientation: Orientation) -> np.ndarray:
        """Full coherent Hamiltonian for one field orientation, rad/us."""
        b = field_vector(orientation, self.field_mT)
        return self.zero_field_hamiltonian + build_zeeman(self, b)

    def truncated(self, n_a: int, n_b: int) -> "SpinSystem":
        """Copy keeping only the first ``n_a`` and ``n_b`` nuclei per radical."""
        if n_a > len(self.nuclei_a) or n_b > len(self.nuclei_b):
            raise ValueError(f"cannot keep ({n_a}, {n_b}) nuclei of "
                             f"({len(self.nuclei_a)}, {len(self.nuclei_b)})")
        return SpinSystem(list(self.nuclei_a[:n_a]), list(self.nuclei_b[:n_b]),
                          self.dipolar, self.field_mT, self.gamma_e, self.frame_rotation)


def build_zeeman(system: SpinSystem, field_mT: np.ndarray) -> np.ndarray:
    """Electron Zeeman Hamiltonian -sum_i gamma_i S_i . B in rad/us."""
    b = np.asarray(field_mT, dtype=float)
    if b.shape != (3,):
        raise ValueError("field must be a Cartesian 3-vector in mT")
    if not np.all(np.isfinite(b)):
        raise ValueError("field vector has non-finite entries")
    s1, s2 = system.electron_ops
    g1, g2 = system.gamma_pair
    h = np.zeros((system.dim, system.dim), dtype=complex)
    for i in range(3):
        if b[i]:
            h -= b[i] * (g1 * s1[i] + g2 * s2[i])
    return h


def build_hyperfine(system: SpinSystem) -> np.ndarray:
    """Hyperfine Hamiltonian sum_k I_k . A_k . S_e(k) in rad/us.

    Tensors are rotated into the lab frame and converted from mT.  Couplings
    use the magnitude of the standard electron gyromagnetic ratio, keeping
    the mT calibration independent of any per-electron override.
    """
    d = system.dim
    dims = system.dims
    h = np.zeros((d, d), dtype=complex)
    rot = system.rotation()
    s1, s2 = system.electron_ops
    slot = 2
    for electron_ops, nuclei in ((s1, system.nuclei_a), (s2, system.nuclei_b)):
        for nuc in nuclei:
            a = MT_TO_RAD_PER_US * (rot @ nuc.tensor_mT @ rot.T)
            iops = [embed(op, slot, dims) for op in spin_operators(nuc.multiplicity)]
            for i in range(3):
                for j in range(3):
                    if a[i, j]:
                        h += a[i, j] * (iops[i] @ electron_ops[j])
            slot += 1
    return h


def build_eed(system: SpinSystem) -> np.ndarray:
    """Electron-electron dipolar Hamiltonian S1 . D . S2 in rad/us.

    For the point-dipole form D = -d(r) (3 u u^T - 1) with d(r) > 0; the
    molecular-frame interradical axis is rotated into the lab frame.
    """
    rot = system.rotation()
    dmat = rot @ system.dipolar.coupling_rad_per_us() @ rot.T
    s1, s2 = system.electron_ops
    h = np.zeros((system.dim, system.dim), dtype=complex)
    for i in range(3):
        for j in range(3):
            if dmat[i, j]:
                h += dmat[i, j] * (s1[i] @ s2[j])
    return h


def singlet_projector(system: SpinSystem) -> np.ndarray:
    """Projector onto the electronic singlet, 1/4 - S1 . S2."""
    s1, s2 = system.electron_ops
    p = 0.25 * np.eye(system.dim, dtype=complex)
    for i in range(3):
        p -= s1[i] @ s2[i]
    return p


def triplet_projector(system: SpinSystem) -> np.ndarray:
    """Projector onto the electronic triplet manifold."""
    return np.eye(system.dim, dtype=complex) - singlet_projector(system)
