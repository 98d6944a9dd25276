"""Command line interface.

Subcommands: ``yield`` (per-orientation yields at fixed parameters),
``sweep`` (grid sweeps with optional heatmaps and checkpointing), ``eigen``
(effective-Hamiltonian spectra along preset field directions) and
``coherence`` (per-orientation time-integrated coherence).  Every run
writes CSV data plus a manifest.json with the canonical configuration, its
hash and SHA-256 digests of all artifacts.  Exit codes: 0 success, 2
configuration or usage error, 3 numerical failure, 4 data written but
rendering failed.
"""

import argparse
import copy
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .ciss import initial_state, recombination_projector
from .config import RunConfig, apply_grid_override, load_config, parse_grid_override
from .dynamics import (escape_yield, relaxed_yield, robust_eigendecompose,
                       yield_closed_form)
from .errors import ConfigError, RpzenoError, SensitivityUndefinedError
from .observables import (anisotropy, coherence_statistics, sample_orientations,
                          time_integrated_coherence)
from .spincore import Orientation
from .sweep import run_sweep

_DIRECTIONS = {"Bx": (np.pi / 2, 0.0), "By": (np.pi / 2, np.pi / 2), "Bz": (0.0, 0.0)}
_AXIS_COLUMNS = {"chi": "chi_rad", "k_b": "k_b_per_us", "k_f": "k_f_per_us"}
_AXIS_LABELS = {"chi": "chi (rad)", "k_b": "k_b (1/us)", "k_f": "k_f (1/us)"}


def _g17(x) -> str:
    return f"{float(x):.17g}"


class _Artifacts:
    """Atomic artifact writer that records digests for the manifest."""

    def __init__(self, outdir):
        self.outdir = outdir
        self.files = {}

    def write(self, name: str, payload: bytes) -> str:
        path = os.path.join(self.outdir, name)
        fd, tmp = tempfile.mkstemp(dir=self.outdir)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.files[name] = {"sha256": hashlib.sha256(payload).hexdigest(),
                            "bytes": len(payload)}
        return path

    def write_csv(self, name: str, header, rows):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([x if isinstance(x, str) else _g17(x) for x in row])
        return self.write(name, buf.getvalue().encode("utf-8"))


def _manifest(artifacts: _Artifacts, command: str, cfg: RunConfig, timings,
              summary, render_error=None):
    body = {
        "command": command,
        "version": __version__,
        "config_hash": cfg.config_hash(),
        "canonical_config": cfg.canonical(),
        "files": dict(artifacts.files),
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
        "summary": summary,
    }
    if render_error is not None:
        body["render_error"] = render_error
    payload = json.dumps(body, indent=2, sort_keys=True).encode("utf-8")
    artifacts.write("manifest.json", payload)


def _progress_printer(total):
    step = max(1, total // 10)

    def report(done, n):
        if done % step == 0 or done == n:
            print(f"progress: {done}/{n} orientations", file=sys.stderr)

    return report


def _safe_sensitivity(yields):
    try:
        return anisotropy(yields)
    except SensitivityUndefinedError:
        arr = np.asarray(yields, dtype=float)
        return float(arr.max() - arr.min()), 0.0, 0.0


def _render_result(result, axes, stem, artifacts: _Artifacts):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    panels = [("anisotropy (max - min)", result.delta)]
    if result.coherence_mean is not None:
        panels.append(("mean coherence", result.coherence_mean))
    fig, axs = plt.subplots(1, len(panels), figsize=(6.0 * len(panels), 4.6),
                            squeeze=False)
    for ax, (label, data) in zip(axs[0], panels):
        finite = np.isfinite(data).any()
        if len(axes) == 2:
            x, y = result.axis_values
            mesh = ax.pcolormesh(x, y, data.T, shading="nearest")
            fig.colorbar(mesh, ax=ax)
            if axes[1].scale == "log":
                ax.set_yscale("log")
            ax.set_ylabel(_AXIS_LABELS[axes[1].name])
            if finite:
                i, j = np.unravel_index(np.nanargmax(data), data.shape)
                ax.plot(x[i], y[j], "wx", markersize=9, markeredgewidth=2)
        else:
            x = result.axis_values[0]
            ax.plot(x, data, lw=1.5)
            if finite:
                i = int(np.nanargmax(data))
                ax.plot(x[i], data[i], "o", ms=6)
        if axes[0].scale == "log":
            ax.set_xscale("log")
        ax.set_xlabel(_AXIS_LABELS[axes[0].name])
        title = f"{label}: max {np.nanmax(data):.4g}" if finite else label
        ax.set_title(title)
    fig.tight_layout()
    for fmt in ("svg", "png"):
        buf = io.BytesIO()
        fig.savefig(buf, format=fmt, dpi=150)
        artifacts.write(f"{stem}.{fmt}", buf.getvalue())
    plt.close(fig)


def _sweep_table(result):
    names = result.axis_names
    header = [_AXIS_COLUMNS[n] for n in names] + ["delta", "mean", "sensitivity"]
    with_coh = result.coherence_mean is not None
    if with_coh:
        header += ["coherence_mean", "coherence_spread"]
    rows = []
    if len(names) == 1:
        for i, v in enumerate(result.axis_values[0]):
            row = [v, result.delta[i], result.mean[i], result.sensitivity[i]]
            if with_coh:
                row += [result.coherence_mean[i], result.coherence_spread[i]]
            rows.append(row)
    else:
        xs, ys = result.axis_values
        for i, vx in enumerate(xs):
            for j, vy in enumerate(ys):
                row = [vx, vy, result.delta[i, j], result.mean[i, j],
                       result.sensitivity[i, j]]
                if with_coh:
                    row += [result.coherence_mean[i, j], result.coherence_spread[i, j]]
                rows.append(row)
    return header, rows


def _failed_records(failures):
    return [{"orientation": f.orientation, "cell": list(f.cell), "message": f.message}
            for f in failures]


def cmd_yield(cfg: RunConfig, args, artifacts: _Artifacts) -> int:
    system = cfg.build_system()
    ciss = cfg.build_ciss()
    relax = cfg.build_relax()
    if isinstance(cfg.data["ciss"]["chi"], dict):
        raise ConfigError("the yield command needs a scalar chi", path="ciss.chi")
    k_b, k_f = cfg.fixed_rates()
    want_coh = cfg.data["observables"]["coherence"]
    if want_coh and relax.active:
        raise ConfigError("coherence output needs relaxation.model: none",
                          path="observables.coherence")
    orient = sample_orientations(**vars(cfg.orientation_spec()))
    rho0 = initial_state(ciss, system).matrix
    projector = recombination_projector(ciss, system)

    t0 = time.perf_counter()
    rows = []
    yields = []
    for o in orient:
        h = system.hamiltonian(o)
        if relax.active:
            phi_b = relaxed_yield(system, h, projector, rho0, k_b, k_f, relax)
            phi_f = 1.0 - phi_b
            row = [o.theta, o.phi, phi_b, phi_f]
        else:
            eig = robust_eigendecompose(h, projector, k_b)
            phi_b = yield_closed_form(eig, rho0, projector, k_b, k_f)
            phi_f = escape_yield(eig, rho0, k_f)
            row = [o.theta, o.phi, phi_b, phi_f]
            if want_coh:
                row.append(time_integrated_coherence(
                    eig, rho0, k_f, partition=cfg.data["observables"]["partition"],
                    weighted=cfg.data["observables"]["weighted"],
                    base=cfg.entropy_base(), nuclear_dim=system.nuclear_dim))
        rows.append(row)
        yields.append(phi_b)
    compute_s = time.perf_counter() - t0

    header = ["theta_rad", "phi_rad", "yield_recombined", "yield_escaped"]
    if want_coh and not relax.active:
        header.append("coherence")
    artifacts.write_csv("orientation_yields.csv", header, rows)
    delta, mean, sens = _safe_sensitivity(yields)
    summary = {"delta": delta, "mean": mean, "sensitivity": sens,
               "orientations": len(yields), "k_b_per_us": k_b, "k_f_per_us": k_f}
    print(f"yield: delta={delta:.6g} mean={mean:.6g} sensitivity={sens:.6g} "
          f"over {len(yields)} orientations")
    _manifest(artifacts, "yield", cfg, {"compute": compute_s}, summary)
    return 0


def cmd_sweep(cfg: RunConfig, args, artifacts: _Artifacts) -> int:
    system = cfg.build_system()
    ciss = cfg.build_ciss()
    relax = cfg.build_relax()
    grid = cfg.sweep_grid()
    if grid.compute_coherence and relax.active:
        raise ConfigError("coherence output needs relaxation.model: none",
                          path="observables.coherence")
    threads = args.threads or int(os.environ.get("RPZENO_THREADS", "1"))
    ck_name = cfg.data["sweep"]["checkpoint"]
    interval = cfg.data["sweep"]["checkpoint_interval"]
    stages = cfg.series_stages()
    progress = _progress_printer(grid.orientations.count)

    jobs = []
    if stages:
        for n_a, n_b in stages:
            sub = system.truncated(n_a, n_b)
            label = f"N{n_a + n_b}"
            ck = None if ck_name is None else os.path.join(
                artifacts.outdir, f"{os.path.splitext(ck_name)[0]}_{label}.npz")
            jobs.append((label, sub, ck))
    else:
        ck = None if ck_name is None else os.path.join(artifacts.outdir, ck_name)
        jobs.append((None, system, ck))

    t0 = time.perf_counter()
    results = []
    for label, sys_i, ck in jobs:
        if label:
            print(f"stage {label}: pair dimension {sys_i.dim}", file=sys.stderr)
        results.append((label, run_sweep(
            sys_i, ciss, grid, relax, threads=threads, checkpoint_path=ck,
            checkpoint_interval=interval, progress=progress)))
    compute_s = time.perf_counter() - t0

    failed = []
    summary_stages = []
    for label, result in results:
        suffix = f"_{label}" if label else ""
        header, rows = _sweep_table(result)
        artifacts.write_csv(f"sweep{suffix}.csv", header, rows)
        failed.extend({"stage": label, **rec}
                      for rec in _failed_records(result.failed))
        stage_summary = {
            "stage": label, "max_delta": result.max_delta,
            "eigendecompositions": result.eig_count,
            "orientations": result.orientation_count,
            "complete": result.complete, "failed_cells": len(result.failed),
            "elapsed_s": round(result.elapsed_s, 6),
        }
        summary_stages.append(stage_summary)
        tag = f" [{label}]" if label else ""
        print(f"sweep{tag}: max delta={result.max_delta:.6g} "
              f"({result.eig_count} eigendecompositions, "
              f"{len(result.failed)} failed cells)")

    render_error = None
    render_s = 0.0
    if cfg.data["output"]["render"]:
        t1 = time.perf_counter()
        try:
            for label, result in results:
                stem = f"heatmap_{label}" if label else "heatmap"
                _render_result(result, grid.axes, stem, artifacts)
        except Exception as exc:  # render failures must not lose the data
            render_error = f"{type(exc).__name__}: {exc}"
            print(f"render failed: {render_error}", file=sys.stderr)
        render_s = time.perf_counter() - t1

    summary = {"stages": summary_stages, "failed_cells": failed,
               "axes": [vars(a) for a in grid.axes]}
    _manifest(artifacts, "sweep", cfg, {"compute": compute_s, "render": render_s},
              summary, render_error)
    return 4 if render_error else 0


def cmd_eigen(cfg: RunConfig, args, artifacts: _Artifacts) -> int:
    system = cfg.build_system()
    ciss = cfg.build_ciss()
    if isinstance(cfg.data["ciss"]["chi"], dict):
        raise ConfigError("the eigen command needs a scalar chi", path="ciss.chi")
    kb_entry = cfg.data["kinetics"]["k_b"]
    if isinstance(kb_entry, dict):
        kb_axis = [a for a in cfg.axes() if a.name == "k_b"][0]
        kb_values = kb_axis.values()
    else:
        kb_values = np.array([kb_entry])
    projector = recombination_projector(ciss, system)

    t0 = time.perf_counter()
    rows = []
    for name in cfg.data["eigen"]["directions"]:
        theta, phi = _DIRECTIONS[name]
        h = system.hamiltonian(Orientation(theta, phi))
        for k_b in kb_values:
            eig = robust_eigendecompose(h, projector, float(k_b))
            for idx, lam in enumerate(eig.values):
                rows.append([name, float(k_b), float(idx), lam.real, lam.imag])
    compute_s = time.perf_counter() - t0

    header = ["direction", "k_b_per_us", "index", "real_rad_per_us", "imag_rad_per_us"]
    artifacts.write_csv("eigenvalues.csv", header, rows)
    summary = {"directions": cfg.data["eigen"]["directions"],
               "k_b_points": len(kb_values), "dimension": system.dim}
    print(f"eigen: {len(cfg.data['eigen']['directions'])} directions x "
          f"{len(kb_values)} k_b values, dimension {system.dim}")
    _manifest(artifacts, "eigen", cfg, {"compute": compute_s}, summary)
    return 0


def cmd_coherence(cfg: RunConfig, args, artifacts: _Artifacts) -> int:
    system = cfg.build_system()
    ciss = cfg.build_ciss()
    relax = cfg.build_relax()
    if relax.active:
        raise ConfigError("coherence needs relaxation.model: none",
                          path="relaxation.model")
    if isinstance(cfg.data["ciss"]["chi"], dict):
        raise ConfigError("the coherence command needs a scalar chi", path="ciss.chi")
    k_b, k_f = cfg.fixed_rates()
    orient = sample_orientations(**vars(cfg.orientation_spec()))
    rho0 = initial_state(ciss, system).matrix
    projector = recombination_projector(ciss, system)
    obs = cfg.data["observables"]

    t0 = time.perf_counter()
    rows = []
    values = []
    for o in orient:
        h = system.hamiltonian(o)
        eig = robust_eigendecompose(h, projector, k_b)
        c = time_integrated_coherence(eig, rho0, k_f, partition=obs["partition"],
                                      weighted=obs["weighted"], base=cfg.entropy_base(),
                                      nuclear_dim=system.nuclear_dim)
        rows.append([o.theta, o.phi, c])
        values.append(c)
    compute_s = time.perf_counter() - t0

    artifacts.write_csv("coherence.csv", ["theta_rad", "phi_rad", "coherence"], rows)
    mean, spread = coherence_statistics(values)
    summary = {"mean": mean, "spread": spread, "partition": obs["partition"],
               "weighted": obs["weighted"], "entropy_base": obs["entropy_base"],
               "orientations": len(values)}
    print(f"coherence: mean={mean:.6g} spread={spread:.6g} "
          f"({obs['partition']} partition, {len(values)} orientations)")
    _manifest(artifacts, "coherence", cfg, {"compute": compute_s}, summary)
    return 0


_COMMANDS = {"yield": cmd_yield, "sweep": cmd_sweep, "eigen": cmd_eigen,
             "coherence": cmd_coherence}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpzeno",
        description="Anisotropic recombination yields of spin-selective radical pairs.")
    parser.add_argument("--version", action="version", version=f"rpzeno {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("yield", "per-orientation yields at fixed parameters"),
                            ("sweep", "grid sweep of the yield anisotropy"),
                            ("eigen", "effective-Hamiltonian spectra"),
                            ("coherence", "per-orientation integrated coherence")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML configuration file")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--threads", type=int, default=0,
                       help="worker processes (default: RPZENO_THREADS or 1)")
        p.add_argument("--seed", type=int, help="override orientations.seed")
        p.add_argument("--no-render", action="store_true",
                       help="skip figure rendering")
        if name == "sweep":
            p.add_argument("--grid-override",
                           help="replace axes: name=scale:start:stop:points[,...] "
                                "with values in internal units (rad, 1/us)")
    return parser


def _configure(args) -> RunConfig:
    cfg = load_config(args.config)
    data = copy.deepcopy(cfg.data)
    if args.seed is not None:
        data["orientations"]["seed"] = int(args.seed)
    if args.out:
        data["output"]["directory"] = args.out
    if args.no_render:
        data["output"]["render"] = False
    cfg = RunConfig(data)
    if getattr(args, "grid_override", None):
        cfg = apply_grid_override(cfg, parse_grid_override(args.grid_override))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _configure(args)
        outdir = cfg.data["output"]["directory"]
        os.makedirs(outdir, exist_ok=True)
        artifacts = _Artifacts(outdir)
        return _COMMANDS[args.command](cfg, args, artifacts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RpzenoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
