"""Open-system dynamics of the pair and its recombination yield.

The master equation combines coherent evolution, projective recombination
at rate k_b through a chosen electron projector, uniform escape at rate
k_f, and optionally a random-field relaxation superoperator derived from a
Nakajima-Zwanzig kernel with exponential correlations.

Two equivalent yield routes are provided: a closed form in the eigenbasis
of the non-Hermitian effective Hamiltonian H - i (k_b/2) P_b, and a linear
solve against the vectorized Liouvillian.  Vectorization is column-stacking
throughout: vec(rho) = rho.flatten(order="F").
"""

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateDecompositionError, DimensionCapError,
                     DivergentYieldError, RpzenoError)
from .spincore import SpinSystem

__all__ = [
    "EffectiveHamiltonian", "EigenSystem", "RelaxationSpec",
    "effective_hamiltonian", "eigendecompose", "robust_eigendecompose",
    "yield_closed_form", "escape_yield", "trajectory",
    "vec", "unvec", "commutation_superoperator", "build_liouvillian",
    "spectral_density", "nz_relaxation", "yield_liouville",
    "coherent_yield", "relaxed_yield",
]

DEFAULT_DIM_CAP = 160


@dataclass(eq=False)
class EffectiveHamiltonian:
    """H - i (k_b/2) P_b with its ingredients kept for later reuse."""

    matrix: np.ndarray
    hamiltonian: np.ndarray
    projector: np.ndarray
    k_b: float


@dataclass(eq=False)
class EigenSystem:
    """Spectral factorization H_eff = V diag(values) V^-1.

    Eigenvalues are sorted by (real, imaginary) part and all imaginary
    parts are non-positive up to roundoff.
    """

    values: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray
    condition: float


def effective_hamiltonian(hamiltonian: np.ndarray, projector: np.ndarray,
                          k_b: float) -> EffectiveHamiltonian:
    """Assemble the non-Hermitian generator of the reduced propagation."""
    h = np.asarray(hamiltonian)
    if k_b < 0:
        raise ValueError(f"k_b must be non-negative, got {k_b}")
    scale = max(1.0, np.abs(h).max())
    if np.abs(h - h.conj().T).max() > 1e-10 * scale:
        raise ValueError("Hamiltonian must be Hermitian")
    return EffectiveHamiltonian(h - 0.5j * k_b * np.asarray(projector),
                                h, np.asarray(projector), k_b)


def eigendecompose(heff: EffectiveHamiltonian | np.ndarray, *,
                   cond_limit: float = 1e12) -> EigenSystem:
    """Eigendecompose H_eff, sorted by (Re, Im).

    Raises DegenerateDecompositionError when the eigenvector matrix is
    ill-conditioned (1-norm condition estimate above ``cond_limit``) or the
    reconstruction residual exceeds 1e-10 relative to ``H_eff``.
    """
    m = heff.matrix if isinstance(heff, EffectiveHamiltonian) else np.asarray(heff)
    lam, v = np.linalg.eig(m)
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    v = v[:, order]
    try:
        vinv = np.linalg.inv(v)
    except np.linalg.LinAlgError as exc:
        raise DegenerateDecompositionError(f"singular eigenvector matrix: {exc}") from exc
    cond = np.linalg.norm(v, 1) * np.linalg.norm(vinv, 1)
    if cond > cond_limit:
        raise DegenerateDecompositionError(
            f"eigenvector condition estimate {cond:.3e} above {cond_limit:.1e}; "
            "perturb k_b by one part in 1e9 or use the superoperator path")
    scale = max(1.0, np.linalg.norm(m))
    residual = np.linalg.norm(m @ v - v * lam[None, :]) / scale
    if residual > 1e-10:
        raise DegenerateDecompositionError(f"eigendecomposition residual {residual:.3e} too large")
    imag_tol = 1e-12 * max(1.0, np.abs(lam).max())
    if lam.imag.max() > imag_tol:
        raise RpzenoError(f"positive imaginary eigenvalue {lam.imag.max():.3e}; "
                          "the effective Hamiltonian should only decay")
    return EigenSystem(lam, v, vinv, float(cond))


def robust_eigendecompose(hamiltonian: np.ndarray, projector: np.ndarray,
                          k_b: float, *, cond_limit: float = 1e12) -> EigenSystem:
    """Eigendecompose, retrying once with k_b perturbed by 1e-9 relative."""
    heff = effective_hamiltonian(hamiltonian, projector, k_b)
    try:
        return eigendecompose(heff, cond_limit=cond_limit)
    except DegenerateDecompositionError:
        if k_b == 0.0:
            raise
        nudged = effective_hamiltonian(hamiltonian, projector, k_b * (1 + 1e-9))
        return eigendecompose(nudged, cond_limit=cond_limit)


def _finalize_yield(phi: complex, what: str, imag_tol: float = 1e-8) -> float:
    if abs(phi.imag) > imag_tol:
        raise RpzenoError(f"{what} has imaginary part {phi.imag:.3e} above {imag_tol:.1e}")
    val = phi.real
    if val < -1e-8 or val > 1 + 1e-8:
        raise DivergentYieldError(f"{what} {val} outside [0, 1] beyond tolerance")
    return float(min(max(val, 0.0), 1.0))


def _pairwise_sum(eig: EigenSystem, rho0: np.ndarray, weight_op: np.ndarray,
                  k_f: float) -> complex:
    lam = eig.values
    rho_t = eig.inverse @ rho0 @ eig.inverse.conj().T
    w_t = eig.vectors.conj().T @ weight_op @ eig.vectors
    numer = rho_t * w_t.T
    denom = k_f + 1j * (lam[:, None] - lam.conj()[None, :])
    scale = max(1.0, np.abs(lam).max())
    bad = np.abs(denom) < 1e-12 * scale
    if bad.any():
        if np.abs(numer[bad]).max() > 1e-14:
            raise DivergentYieldError("non-decaying component overlaps the initial state; "
                                      "the yield integral diverges")
        # a vanishing numerator makes the stuck component contribute nothing
        numer = np.where(bad, 0.0, numer)
        denom = np.where(bad, 1.0, denom)
    return complex(np.sum(numer / denom))


def yield_closed_form(eig: EigenSystem, rho0: np.ndarray, projector: np.ndarray,
                      k_b: float, k_f: float) -> float:
    """Recombination yield k_b Int_0^inf tr[P_b rho(t)] dt via the eigenbasis.

    ``eig`` must come from H - i(k_b/2) P_b with the same k_b and projector.
    """
    if k_f < 0:
        raise ValueError(f"k_f must be non-negative, got {k_f}")
    phi = k_b * _pairwise_sum(eig, rho0, projector, k_f)
    return _finalize_yield(phi, "recombination yield")


def escape_yield(eig: EigenSystem, rho0: np.ndarray, k_f: float) -> float:
    """Escape yield k_f Int_0^inf tr[rho(t)] dt for the same dynamics."""
    if k_f < 0:
        raise ValueError(f"k_f must be non-negative, got {k_f}")
    eye = np.eye(rho0.shape[0])
    phi = k_f * _pairwise_sum(eig, rho0, eye, k_f)
    return _finalize_yield(phi, "escape yield")


def trajectory(eig: EigenSystem, rho0: np.ndarray, k_f: float,
               times: np.ndarray) -> np.ndarray:
    """Density matrices along ``times``; shape (len(times), d, d)."""
    rho_t = eig.inverse @ rho0 @ eig.inverse.conj().T
    out = np.empty((len(times), *rho0.shape), dtype=complex)
    for idx, t in enumerate(times):
        phases = np.exp(-1j * eig.values * t)
        core = (phases[:, None] * rho_t) * phases.conj()[None, :]
        out[idx] = np.exp(-k_f * t) * (eig.vectors @ core @ eig.vectors.conj().T)
    return out


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(rho).flatten(order="F")


def unvec(x: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(x.size)))
    return x.reshape(d, d, order="F")


def commutation_superoperator(op: np.ndarray) -> np.ndarray:
    """Matrix of rho -> [op, rho] under column-stacking."""
    d = op.shape[0]
    eye = np.eye(d)
    return np.kron(eye, op) - np.kron(op.T, eye)


def build_liouvillian(heff: EffectiveHamiltonian | np.ndarray, k_f: float,
                      dim_cap: int = DEFAULT_DIM_CAP) -> np.ndarray:
    """Vectorized generator -i(H_eff rho - rho H_eff^dag) - k_f rho."""
    m = heff.matrix if isinstance(heff, EffectiveHamiltonian) else np.asarray(heff)
    d = m.shape[0]
    if d > dim_cap:
        raise DimensionCapError(f"dimension {d} above superoperator cap {dim_cap}")
    eye = np.eye(d)
    l_mat = -1j * (np.kron(eye, m) - np.kron(m.conj(), eye))
    if k_f:
        l_mat -= k_f * np.eye(d * d)
    return l_mat


def spectral_density(omega, variance: float, tau_c: float):
    """One-sided transform of variance * exp(-t/tau_c): variance/(1/tau_c - i w)."""
    if tau_c <= 0:
        raise ValueError(f"tau_c must be positive, got {tau_c}")
    return variance / (1.0 / tau_c - 1j * np.asarray(omega))


@dataclass
class RelaxationSpec:
    """Random-field relaxation: strength gamma (1/us) and correlation time tau_c (us).

    The fluctuating local fields act independently on every electron spin
    component with variance gamma/tau_c.  ``include_kf_in_kernel`` keeps the
    escape rate inside the memory kernel's propagator; switching it off
    exposes the sensitivity of results to that convention.
    """

    model: str = "none"
    gamma: float = 0.0
    tau_c: float = 1e-3
    include_kf_in_kernel: bool = True

    def __post_init__(self):
        if self.model not in ("none", "rfr"):
            raise ValueError(f"unknown relaxation model {self.model!r}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.tau_c <= 0:
            raise ValueError(f"tau_c must be positive, got {self.tau_c}")

    @property
    def active(self) -> bool:
        return self.model == "rfr" and self.gamma > 0

    @property
    def variance(self) -> float:
        return self.gamma / self.tau_c


def nz_relaxation(eig: EigenSystem, relax: RelaxationSpec, system: SpinSystem,
                  k_f: float = 0.0, dim_cap: int = DEFAULT_DIM_CAP) -> np.ndarray:
    """Nakajima-Zwanzig relaxation superoperator for random local fields.

    Built in the eigenbasis of the effective Hamiltonian: the kernel
    integral becomes the spectral density evaluated at every eigenvalue
    difference (shifted by k_f when the spec says so), sandwiched between
    the commutator superoperators of the six electron spin components.
    """
    d = system.dim
    if d > dim_cap:
        raise DimensionCapError(f"dimension {d} above superoperator cap {dim_cap}")
    if not relax.active:
        return np.zeros((d * d, d * d), dtype=complex)
    lam = eig.values
    shift = k_f if relax.include_kf_in_kernel else 0.0
    # kernel slot (m fast, n slow) must equal the one-sided transform of the
    # propagator mode exp((-i(lam_m - lam_n*) - k_f) t), hence the reversed sign
    omega = lam.conj()[None, :] - lam[:, None] + 1j * shift
    kernel = spectral_density(omega, relax.variance, relax.tau_c)
    basis = np.kron(eig.vectors.conj(), eig.vectors)
    basis_inv = np.kron(eig.inverse.conj(), eig.inverse)
    propagated = basis @ (kernel.flatten(order="F")[:, None] * basis_inv)
    out = np.zeros((d * d, d * d), dtype=complex)
    s1, s2 = system.electron_ops
    for gen in (*s1, *s2):
        m_j = commutation_superoperator(gen)
        out -= m_j.conj().T @ (propagated @ m_j)
    return out


def yield_liouville(l_total: np.ndarray, rho0: np.ndarray, projector: np.ndarray,
                    k_b: float) -> float:
    """Recombination yield -k_b tr[P_b L^-1 rho0] via one linear solve."""
    try:
        x = np.linalg.solve(l_total, vec(rho0))
    except np.linalg.LinAlgError as exc:
        raise DivergentYieldError(f"singular Liouvillian, yield undefined: {exc}") from exc
    phi = -k_b * complex(np.sum(np.asarray(projector).T * unvec(x)))
    return _finalize_yield(phi, "recombination yield")


def coherent_yield(hamiltonian: np.ndarray, projector: np.ndarray, rho0: np.ndarray,
                   k_b: float, k_f: float) -> float:
    """Yield without relaxation, through the spectral route."""
    eig = robust_eigendecompose(hamiltonian, projector, k_b)
    return yield_closed_form(eig, rho0, projector, k_b, k_f)


def relaxed_yield(system: SpinSystem, hamiltonian: np.ndarray, projector: np.ndarray,
                  rho0: np.ndarray, k_b: float, k_f: float, relax: RelaxationSpec,
                  dim_cap: int = DEFAULT_DIM_CAP) -> float:
    """Yield with the relaxation superoperator, through the solver route."""
    heff = effective_hamiltonian(hamiltonian, projector, k_b)
    l_total = build_liouvillian(heff, k_f, dim_cap)
    if relax.active:
        eig = robust_eigendecompose(hamiltonian, projector, k_b)
        l_total = l_total + nz_relaxation(eig, relax, system, k_f, dim_cap)
    return yield_liouville(l_total, rho0, projector, k_b)
