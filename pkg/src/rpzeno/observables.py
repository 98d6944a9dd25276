"""Orientation sampling, anisotropy metrics and coherence measures."""

from dataclasses import dataclass

import numpy as np

from .ciss import DensityOperator
from .dynamics import EigenSystem, trajectory
from .errors import QuadratureError, SensitivityUndefinedError
from .spincore import Orientation

__all__ = [
    "OrientationSet", "sample_orientations", "anisotropy",
    "partial_trace_nuclei", "relative_entropy_coherence",
    "time_integrated_coherence", "coherence_statistics",
]

_GOLDEN = (1 + np.sqrt(5)) / 2
_SCHEMES = ("fibonacci", "random-uniform")


@dataclass(eq=False)
class OrientationSet:
    """A deterministic batch of field directions."""

    theta: np.ndarray
    phi: np.ndarray
    scheme: str
    seed: int = 0

    @property
    def count(self) -> int:
        return len(self.theta)

    def __iter__(self):
        for t, p in zip(self.theta, self.phi):
            yield Orientation(float(t), float(p))


def sample_orientations(count: int, scheme: str = "fibonacci",
                        seed: int = 0) -> OrientationSet:
    """Sample field directions covering the sphere.

    The Fibonacci lattice is deterministic and quasi-uniform; the
    random-uniform scheme draws i.i.d. directions from a seeded generator.
    """
    if count < 2:
        raise ValueError(f"orientation count must be at least 2, got {count}")
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown orientation scheme {scheme!r}, expected one of {_SCHEMES}")
    if scheme == "fibonacci":
        i = np.arange(count)
        z = 1.0 - (2.0 * i + 1.0) / count
        theta = np.arccos(z)
        phi = np.mod(2 * np.pi * i / _GOLDEN, 2 * np.pi)
    else:
        rng = np.random.default_rng(seed)
        z = rng.uniform(-1.0, 1.0, size=count)
        theta = np.arccos(z)
        phi = rng.uniform(0.0, 2 * np.pi, size=count)
    theta.setflags(write=False)
    phi.setflags(write=False)
    return OrientationSet(theta, phi, scheme, seed)


def anisotropy(yields: np.ndarray):
    """(max - min, mean, relative anisotropy) of per-orientation yields.

    The relative anisotropy divides the spread by the mean and is undefined
    when the mean vanishes.
    """
    y = np.asarray(yields, dtype=float)
    if y.size < 2:
        raise ValueError("anisotropy needs at least two orientations")
    if not np.all(np.isfinite(y)):
        raise ValueError("yields contain non-finite values")
    delta = float(y.max() - y.min())
    mean = float(y.mean())
    if mean == 0.0:
        raise SensitivityUndefinedError("mean yield is zero, relative anisotropy undefined")
    return delta, mean, delta / mean


def partial_trace_nuclei(rho: np.ndarray, nuclear_dim: int) -> np.ndarray:
    """Reduce a (4 M x 4 M) pair state to its 4 x 4 electron block."""
    d = rho.shape[0]
    if d != 4 * nuclear_dim:
        raise ValueError(f"dimension {d} does not match nuclear_dim {nuclear_dim}")
    return np.einsum("imjm->ij", rho.reshape(4, nuclear_dim, 4, nuclear_dim))


def _entropy(probabilities: np.ndarray, base: float) -> float:
    p = np.clip(probabilities.real, 0.0, None)
    total = p.sum()
    if total <= 0:
        raise ValueError("state has no weight")
    p = p / total
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum() / np.log(base))


def relative_entropy_coherence(rho, partition: str = "global",
                               base: float = np.e, nuclear_dim: int | None = None) -> float:
    """Relative entropy of coherence in the Zeeman product basis.

    C(rho) = S(diag(rho)) - S(rho) with S the von Neumann entropy.  The
    ``local`` partition traces out the nuclei first.  Subnormalized states
    (trace below one, as under decaying dynamics) are renormalized before
    the entropies are taken.
    """
    if isinstance(rho, DensityOperator):
        nuclear_dim = rho.nuclear_dim
        rho = rho.matrix
    rho = np.asarray(rho, dtype=complex)
    if partition not in ("global", "local"):
        raise ValueError(f"partition must be 'global' or 'local', got {partition!r}")
    if base <= 1:
        raise ValueError("entropy base must exceed 1")
    scale = max(1.0, np.abs(rho).max())
    if np.abs(rho - rho.conj().T).max() > 1e-10 * scale:
        raise ValueError("state must be Hermitian")
    if partition == "local":
        if nuclear_dim is None:
            nuclear_dim = rho.shape[0] // 4
        rho = partial_trace_nuclei(rho, nuclear_dim)
    w = np.linalg.eigvalsh(rho)
    if w.min() < -1e-8 * max(1.0, abs(w).max()):
        raise ValueError(f"state not positive semidefinite (min eigenvalue {w.min():.3e})")
    c = _entropy(np.diag(rho).real, base) - _entropy(w, base)
    if c < -1e-10:
        raise ValueError(f"coherence came out negative ({c:.3e}); state is inconsistent")
    return max(c, 0.0)


def time_integrated_coherence(eig: EigenSystem, rho0: np.ndarray, k_f: float,
                              partition: str = "global", weighted: bool = True,
                              base: float = np.e, nuclear_dim: int | None = None,
                              rel_tol: float = 0.01, trace_floor: float = 1e-6,
                              points: int = 33, max_refine: int = 8) -> float:
    """Integral of the survival-weighted coherence over the pair lifetime.

    Integrates C(rho(t)/tr rho(t)) w(t) on a logarithmic time grid from zero
    until the surviving trace falls below ``trace_floor``, with w the trace
    itself (default) or one.  The grid is doubled until the trapezoid value
    changes by less than ``rel_tol`` relatively.
    """
    rate = k_f - 2.0 * eig.values.imag.max()
    if rate <= 1e-12:
        raise QuadratureError("dynamics do not decay; the time integral diverges")
    t_end = np.log(1.0 / trace_floor) / rate
    for _ in range(80):
        tail = trajectory(eig, rho0, k_f, np.array([t_end]))[0]
        if np.trace(tail).real < trace_floor:
            break
        t_end *= 2.0
    else:
        raise QuadratureError("could not bracket the decay time")

    def evaluate(n):
        ts = np.concatenate([[0.0], np.geomspace(t_end * 1e-6, t_end, n)])
        states = trajectory(eig, rho0, k_f, ts)
        vals = np.empty(len(ts))
        for i, state in enumerate(states):
            tr = np.trace(state).real
            if tr <= trace_floor * 1e-6:
                vals[i] = 0.0
                continue
            c = relative_entropy_coherence(state / tr, partition, base, nuclear_dim)
            vals[i] = c * (tr if weighted else 1.0)
        return float(np.trapezoid(vals, ts))

    previous = evaluate(points)
    for _ in range(max_refine):
        points *= 2
        current = evaluate(points)
        if abs(current - previous) <= rel_tol * max(abs(current), 1e-12):
            return current
        previous = current
    raise QuadratureError(f"time quadrature did not converge within {max_refine} refinements")


def coherence_statistics(values: np.ndarray):
    """(mean, max - min) over per-orientation coherence values."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no coherence values given")
    if not np.all(np.isfinite(v)):
        raise ValueError("coherence values contain non-finite entries")
    return float(v.mean()), float(v.max() - v.min())
