"""Parameter sweeps of the anisotropy over rate constants and chirality angle.

A sweep evaluates per-orientation recombination yields on a grid over up to
two of (k_b, k_f, chi) and reduces them to per-cell anisotropy statistics.
Work is split by orientation; without relaxation the k_f dependence is
analytic, so each orientation costs one eigendecomposition per (chi, k_b)
combination.  Units are reduced in orientation order, which makes results
independent of scheduling, and completed units can be checkpointed to disk
and resumed.
"""

import hashlib
import json
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ciss import CissConfig, initial_state, recombination_projector
from .dynamics import (RelaxationSpec, build_liouvillian, effective_hamiltonian,
                       nz_relaxation, robust_eigendecompose, yield_liouville,
                       DEFAULT_DIM_CAP)
from .errors import CheckpointMismatchError, RpzenoError
from .observables import sample_orientations, time_integrated_coherence
from .spincore import Orientation, SpinSystem

__all__ = [
    "AxisSpec", "OrientationSpec", "SweepGrid", "FailedCell", "SweepResult",
    "run_sweep", "factorized_kf_sweep", "hyperfine_series",
]

_AXIS_NAMES = ("chi", "k_b", "k_f")


@dataclass(frozen=True)
class AxisSpec:
    """One swept parameter: name, spacing, range and point count."""

    name: str
    scale: str
    start: float
    stop: float
    points: int

    def __post_init__(self):
        if self.name not in _AXIS_NAMES:
            raise ValueError(f"axis name must be one of {_AXIS_NAMES}, got {self.name!r}")
        if self.scale not in ("log", "linear"):
            raise ValueError(f"axis scale must be 'log' or 'linear', got {self.scale!r}")
        if self.points < 1:
            raise ValueError(f"axis needs at least one point, got {self.points}")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ValueError("log axis endpoints must be positive")
        if self.points > 1 and self.start == self.stop:
            raise ValueError("degenerate axis range")

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.start], dtype=float)
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class OrientationSpec:
    count: int = 300
    scheme: str = "fibonacci"
    seed: int = 0


@dataclass
class SweepGrid:
    """Axes plus fixed values for whatever is not swept."""

    axes: list = field(default_factory=list)
    fixed: dict = field(default_factory=dict)
    orientations: OrientationSpec = field(default_factory=OrientationSpec)
    compute_coherence: bool = False
    coherence_partition: str = "global"
    coherence_weighted: bool = True
    dim_cap: int = DEFAULT_DIM_CAP
    cell_time_budget: float = 60.0

    def __post_init__(self):
        names = [a.name for a in self.axes]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate sweep axes {names}")
        if not 1 <= len(names) <= 2:
            raise ValueError(f"a sweep needs one or two axes, got {len(names)}")
        for key in self.fixed:
            if key not in _AXIS_NAMES:
                raise ValueError(f"unknown fixed parameter {key!r}")
            if key in names:
                raise ValueError(f"{key!r} is both an axis and fixed")
        for required in ("k_b", "k_f"):
            if required not in names and required not in self.fixed:
                raise ValueError(f"{required} must be either an axis or fixed")

    def axis_values(self):
        return [a.values() for a in self.axes]

    def canonical_values(self, default_chi: float):
        """Values along (chi, k_b, k_f) regardless of which are axes."""
        out = {}
        for a in self.axes:
            out[a.name] = a.values()
        for key, val in self.fixed.items():
            out[key] = np.array([float(val)])
        if "chi" not in out:
            out["chi"] = np.array([default_chi])
        return out["chi"], out["k_b"], out["k_f"]


@dataclass(frozen=True)
class FailedCell:
    orientation: int
    cell: tuple
    message: str


@dataclass(eq=False)
class SweepResult:
    axis_names: list
    axis_values: list
    delta: np.ndarray
    mean: np.ndarray
    sensitivity: np.ndarray
    coherence_mean: np.ndarray | None
    coherence_spread: np.ndarray | None
    failed: list
    eig_count: int
    orientation_count: int
    complete: bool
    elapsed_s: float
    fingerprint: str

    @property
    def max_delta(self) -> float:
        return float(np.nanmax(self.delta)) if self.delta.size else float("nan")


def _fingerprint(system: SpinSystem, ciss: CissConfig, grid: SweepGrid,
                 relax: RelaxationSpec) -> str:
    h = hashlib.sha256()

    def put(*parts):
        for p in parts:
            if isinstance(p, np.ndarray):
                h.update(np.ascontiguousarray(p).tobytes())
            else:
                h.update(repr(p).encode())

    put("system", system.dims, system.field_mT, system.gamma_pair)
    put(system.rotation())
    for nuc in (*system.nuclei_a, *system.nuclei_b):
        put(nuc.multiplicity, np.asarray(nuc.tensor_mT))
    put("dipolar", system.dipolar.distance_nm,
        None if system.dipolar.axis is None else np.asarray(system.dipolar.axis),
        None if system.dipolar.tensor_mT is None else np.asarray(system.dipolar.tensor_mT))
    put("ciss", ciss.model.value, ciss.chi, ciss.channel_j, ciss.precursor.value)
    put("relax", relax.model, relax.gamma, relax.tau_c, relax.include_kf_in_kernel)
    for a in grid.axes:
        put("axis", a.name, a.scale, a.start, a.stop, a.points)
    put("fixed", sorted(grid.fixed.items()))
    put("orient", grid.orientations.count, grid.orientations.scheme, grid.orientations.seed)
    put("flags", grid.compute_coherence, grid.coherence_partition,
        grid.coherence_weighted, grid.dim_cap)
    return h.hexdigest()


def _yields_over_kf(eig, rho0, projector, k_b, kf_values):
    """Closed-form yields for every k_f at once, for one eigendecomposition."""
    lam = eig.values
    rho_t = eig.inverse @ rho0 @ eig.inverse.conj().T
    p_t = eig.vectors.conj().T @ projector @ eig.vectors
    numer = rho_t * p_t.T
    delta = lam[:, None] - lam.conj()[None, :]
    denom = kf_values[:, None, None] + 1j * delta[None, :, :]
    scale = max(1.0, np.abs(lam).max())
    tiny = np.abs(denom) < 1e-12 * scale
    if tiny.any() and np.abs(np.broadcast_to(numer, denom.shape)[tiny]).max() > 1e-14:
        raise RpzenoError("yield integral diverges for k_f = 0 with a non-decaying component")
    phis = k_b * (numer[None, :, :] / denom).sum(axis=(1, 2))
    if np.abs(phis.imag).max() > 1e-8:
        raise RpzenoError(f"yield has imaginary part {np.abs(phis.imag).max():.3e}")
    vals = phis.real
    if vals.min() < -1e-8 or vals.max() > 1 + 1e-8:
        raise RpzenoError("yield outside [0, 1] beyond tolerance")
    return np.clip(vals, 0.0, 1.0)


def _unit_payload(system, ciss, grid, relax):
    chi_values, kb_values, kf_values = grid.canonical_values(ciss.chi)
    states = []
    for chi in chi_values:
        cfg = ciss.with_chi(float(chi))
        rho0 = initial_state(cfg, system).matrix
        projector = recombination_projector(cfg, system)
        states.append((rho0, projector))
    orient = sample_orientations(grid.orientations.count, grid.orientations.scheme,
                                 grid.orientations.seed)
    return {
        "system": system, "relax": relax, "states": states,
        "chi_values": chi_values, "kb_values": kb_values, "kf_values": kf_values,
        "theta": np.asarray(orient.theta), "phi": np.asarray(orient.phi),
        "coherence": grid.compute_coherence,
        "coh_partition": grid.coherence_partition,
        "coh_weighted": grid.coherence_weighted,
        "dim_cap": grid.dim_cap, "budget": grid.cell_time_budget,
    }


def _compute_unit(payload, index):
    """Yields (and optional coherence) for one orientation over the full grid."""
    system = payload["system"]
    relax = payload["relax"]
    kb_values = payload["kb_values"]
    kf_values = payload["kf_values"]
    states = payload["states"]
    shape = (len(states), len(kb_values), len(kf_values))
    yields = np.full(shape, np.nan)
    coh = np.full(shape, np.nan) if payload["coherence"] else None
    failures = []
    eig_count = 0
    h_orient = system.hamiltonian(Orientation(float(payload["theta"][index]),
                                              float(payload["phi"][index])))
    m = system.nuclear_dim
    for ci, (rho0, projector) in enumerate(states):
        for bi, k_b in enumerate(kb_values):
            started = time.perf_counter()
            try:
                eig = robust_eigendecompose(h_orient, projector, float(k_b))
                eig_count += 1
                if relax.active:
                    for fi, k_f in enumerate(kf_values):
                        heff = effective_hamiltonian(h_orient, projector, float(k_b))
                        l_total = build_liouvillian(heff, float(k_f), payload["dim_cap"])
                        l_total += nz_relaxation(eig, relax, system, float(k_f),
                                                 payload["dim_cap"])
                        yields[ci, bi, fi] = yield_liouville(l_total, rho0, projector,
                                                             float(k_b))
                else:
                    yields[ci, bi, :] = _yields_over_kf(eig, rho0, projector,
                                                        float(k_b), kf_values)
                if coh is not None:
                    for fi, k_f in enumerate(kf_values):
                        coh[ci, bi, fi] = time_integrated_coherence(
                            eig, rho0, float(k_f),
                            partition=payload["coh_partition"],
                            weighted=payload["coh_weighted"], nuclear_dim=m)
            except RpzenoError as exc:
                yields[ci, bi, :] = np.nan
                failures.append((index, ci, bi, str(exc)))
            elapsed = time.perf_counter() - started
            if elapsed > payload["budget"]:
                yields[ci, bi, :] = np.nan
                failures.append((index, ci, bi,
                                 f"cell exceeded time budget ({elapsed:.1f} s)"))
    return index, yields, coh, eig_count, failures


def _pool_initializer():
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(1)
    except Exception:
        pass


def _atomic_savez(path, **arrays):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, **arrays)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _declared_view(canonical: np.ndarray, grid: SweepGrid) -> np.ndarray:
    positions = {"chi": 0, "k_b": 1, "k_f": 2}
    declared = [positions[a.name] for a in grid.axes]
    rest = [p for p in range(3) if p not in declared]
    out = np.transpose(canonical, declared + rest)
    return out.reshape(out.shape[: len(declared)])


def run_sweep(system: SpinSystem, ciss: CissConfig, grid: SweepGrid,
              relax: RelaxationSpec | None = None, *, threads: int = 1,
              checkpoint_path: str | None = None, checkpoint_interval: int = 20,
              max_units: int | None = None, progress=None) -> SweepResult:
    """Run the sweep and reduce per-orientation yields to cell statistics.

    ``threads`` > 1 distributes orientations over worker processes.  With a
    ``checkpoint_path``, completed orientations are saved periodically and
    picked up again by a later call with the same inputs; ``max_units``
    stops after that many new orientations (the result is then marked
    incomplete).  Failed cells are recorded and left as NaN.
    """
    started = time.perf_counter()
    relax = relax or RelaxationSpec()
    payload = _unit_payload(system, ciss, grid, relax)
    n_orient = grid.orientations.count
    shape = (len(payload["chi_values"]), len(payload["kb_values"]),
             len(payload["kf_values"]))
    fingerprint = _fingerprint(system, ciss, grid, relax)

    slabs = np.full((n_orient, *shape), np.nan)
    coh_slabs = np.full((n_orient, *shape), np.nan) if grid.compute_coherence else None
    eig_counts = np.zeros(n_orient, dtype=np.int64)
    done = np.zeros(n_orient, dtype=bool)
    failures: list[FailedCell] = []

    if checkpoint_path and os.path.exists(checkpoint_path):
        with np.load(checkpoint_path, allow_pickle=False) as ck:
            if str(ck["fingerprint"]) != fingerprint:
                raise CheckpointMismatchError(
                    f"checkpoint {checkpoint_path} belongs to a different configuration")
            done = ck["done"].copy()
            slabs = ck["slabs"].copy()
            eig_counts = ck["eig_counts"].copy()
            if grid.compute_coherence:
                coh_slabs = ck["coh_slabs"].copy()
            failures = [FailedCell(int(o), (int(a), int(b)), str(msg))
                        for o, a, b, msg in json.loads(str(ck["failures"]))]

    def save_checkpoint():
        if not checkpoint_path:
            return
        packed = json.dumps([[f.orientation, f.cell[0], f.cell[1], f.message]
                             for f in failures])
        arrays = dict(fingerprint=np.str_(fingerprint), done=done, slabs=slabs,
                      eig_counts=eig_counts, failures=np.str_(packed))
        if coh_slabs is not None:
            arrays["coh_slabs"] = coh_slabs
        _atomic_savez(checkpoint_path, **arrays)

    pending = [i for i in range(n_orient) if not done[i]]
    if max_units is not None:
        pending = pending[:max_units]

    def absorb(result):
        index, yields, coh, count, fails = result
        slabs[index] = yields
        if coh_slabs is not None and coh is not None:
            coh_slabs[index] = coh
        eig_counts[index] = count
        done[index] = True
        for orientation, ci, bi, message in fails:
            failures.append(FailedCell(orientation, (ci, bi), message))
        if progress:
            progress(int(done.sum()), n_orient)

    since_save = 0
    if threads > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=threads,
                                 initializer=_pool_initializer) as pool:
            for result in pool.map(_compute_unit, [payload] * len(pending), pending,
                                   chunksize=max(1, len(pending) // (threads * 8))):
                absorb(result)
                since_save += 1
                if since_save >= checkpoint_interval:
                    save_checkpoint()
                    since_save = 0
    else:
        for index in pending:
            absorb(_compute_unit(payload, index))
            since_save += 1
            if since_save >= checkpoint_interval:
                save_checkpoint()
                since_save = 0

    complete = bool(done.all())
    if checkpoint_path and (since_save or not complete):
        save_checkpoint()

    used = slabs[done] if not complete else slabs
    with np.errstate(invalid="ignore", divide="ignore"):
        delta3 = used.max(axis=0) - used.min(axis=0) if used.size else np.full(shape, np.nan)
        mean3 = used.mean(axis=0) if used.size else np.full(shape, np.nan)
        sens3 = np.where(mean3 > 0, delta3 / np.where(mean3 > 0, mean3, 1.0),
                         np.where(mean3 == 0, 0.0, np.nan))
    coh_mean = coh_spread = None
    if coh_slabs is not None and used.size:
        cused = coh_slabs[done] if not complete else coh_slabs
        coh_mean = _declared_view(cused.mean(axis=0), grid)
        coh_spread = _declared_view(cused.max(axis=0) - cused.min(axis=0), grid)

    return SweepResult(
        axis_names=[a.name for a in grid.axes],
        axis_values=grid.axis_values(),
        delta=_declared_view(delta3, grid),
        mean=_declared_view(mean3, grid),
        sensitivity=_declared_view(sens3, grid),
        coherence_mean=coh_mean,
        coherence_spread=coh_spread,
        failed=failures,
        eig_count=int(eig_counts[done].sum()),
        orientation_count=int(done.sum()),
        complete=complete,
        elapsed_s=time.perf_counter() - started,
        fingerprint=fingerprint,
    )


def factorized_kf_sweep(system: SpinSystem, ciss: CissConfig, kb_axis: AxisSpec,
                        kf_axis: AxisSpec, orientations: OrientationSpec,
                        **kwargs) -> SweepResult:
    """Two-axis (k_b, k_f) sweep exploiting the analytic k_f dependence.

    Exactly one eigendecomposition is spent per (orientation, k_b).  Not
    available with relaxation, whose kernel couples to k_f.
    """
    relax = kwargs.pop("relax", None)
    if relax is not None and relax.active:
        raise ValueError("k_f factorization is invalid with relaxation enabled")
    if kb_axis.name != "k_b" or kf_axis.name != "k_f":
        raise ValueError("axes must be k_b and k_f")
    grid = SweepGrid(axes=[kb_axis, kf_axis], orientations=orientations)
    return run_sweep(system, ciss, grid, relax, **kwargs)


def hyperfine_series(system: SpinSystem, stages, ciss: CissConfig, grid: SweepGrid,
                     relax: RelaxationSpec | None = None, **kwargs):
    """Sweep a nested family of systems with increasing nuclear content.

    ``stages`` lists (n_a, n_b) pairs; each keeps the first n nuclei of the
    corresponding radical, in configured order.  Returns (label, result)
    pairs for the shared grid.
    """
    results = []
    for n_a, n_b in stages:
        sub = system.truncated(n_a, n_b)
        label = f"N{n_a + n_b}"
        results.append((label, run_sweep(sub, ciss, grid, relax, **kwargs)))
    return results
