"""Acceptance gate: each test checks one published behavior guarantee and
prints a PASS/FAIL line with its runtime, bypassing output capture."""

import os
import time
from contextlib import contextmanager

import numpy as np

import oracles
from conftest import ciss_pair_system, zeno_toy_system, random_system

from rpzeno import (AxisSpec, CissConfig, Orientation, OrientationSpec,
                    RelaxationSpec, SpinSystem, SweepGrid, build_liouvillian,
                    cli, effective_hamiltonian, embed, escape_yield,
                    initial_state, load_config, nz_relaxation,
                    recombination_projector, robust_eigendecompose, run_sweep,
                    spectral_density, unvec, vec, yield_closed_form,
                    yield_liouville)


@contextmanager
def criterion(cap, number, label, budget_s):
    """Time the enclosed block and print one PASS/FAIL line to the terminal."""

    def announce(line):
        with cap.disabled():
            print(line, flush=True)

    start = time.perf_counter()
    try:
        yield
    except BaseException:
        announce(f"FAIL criterion {number}: {label}")
        raise
    elapsed = time.perf_counter() - start
    if elapsed >= budget_s:
        announce(f"FAIL criterion {number}: {label} "
                 f"({elapsed:.1f} s exceeds the {budget_s:.0f} s budget)")
        raise AssertionError(f"criterion {number} took {elapsed:.1f} s, "
                             f"budget {budget_s:.0f} s")
    announce(f"PASS criterion {number}: {label} ({elapsed:.1f} s)")


def both_yields(system, ciss, orientation, k_b, k_f):
    h = system.hamiltonian(orientation)
    proj = recombination_projector(ciss, system)
    rho0 = initial_state(ciss, system).matrix
    eig = robust_eigendecompose(h, proj, k_b)
    return (yield_closed_form(eig, rho0, proj, k_b, k_f),
            escape_yield(eig, rho0, k_f))


def test_criterion_01_zero_angle_collapse(capfd):
    with criterion(capfd, 1, "zero-angle models collapse to the plain singlet "
                      "baseline", 10.0):
        rng = np.random.default_rng(20260823)
        o = Orientation(0.8, 0.4)
        for i in range(20):
            system = random_system(rng, with_rotation=i % 2 == 1,
                                   gamma_pair=None)
            precursor = "singlet" if i % 2 == 0 else "triplet"
            base = both_yields(system, CissConfig("none", 0.0, 0.0, precursor),
                               o, 20.0, 1.0)
            for model in ("cisp", "cisc", "channel"):
                got = both_yields(system,
                                  CissConfig(model, 0.0, 0.3, precursor),
                                  o, 20.0, 1.0)
                assert abs(got[0] - base[0]) < 1e-12
                assert abs(got[1] - base[1]) < 1e-12


def test_criterion_02_yield_conservation(capfd):
    with criterion(capfd, 2, "recombined plus escaped yields sum to one", 30.0):
        system = zeno_toy_system()
        kbs = np.geomspace(1e-1, 1e5, 10)
        kfs = np.geomspace(1e-2, 1e2, 10)
        for precursor in ("singlet", "triplet"):
            ciss = CissConfig("none", 0.0, 0.0, precursor)
            proj = recombination_projector(ciss, system)
            rho0 = initial_state(ciss, system).matrix
            for o in (Orientation(0.0, 0.0), Orientation(0.7, 0.3)):
                h = system.hamiltonian(o)
                for k_b in kbs:
                    eig = robust_eigendecompose(h, proj, k_b)
                    for k_f in kfs:
                        phi_b = yield_closed_form(eig, rho0, proj, k_b, k_f)
                        phi_f = escape_yield(eig, rho0, k_f)
                        assert abs(phi_b + phi_f - 1.0) < 1e-8


def test_criterion_03_three_route_agreement(capfd):
    with criterion(capfd, 3, "eigenbasis, superoperator and direct integration "
                      "yields agree", 120.0):
        system = ciss_pair_system()
        ciss = CissConfig("none")
        o = Orientation(1.0, 0.5)
        h = system.hamiltonian(o)
        proj = recombination_projector(ciss, system)
        rho0 = initial_state(ciss, system).matrix
        for k_b, k_f in [(10.0, 1.0), (100.0, 1.0), (1000.0, 0.5),
                         (50.0, 2.0), (5.0, 0.2)]:
            eig = robust_eigendecompose(h, proj, k_b)
            spectral = yield_closed_form(eig, rho0, proj, k_b, k_f)
            liouville = yield_liouville(
                build_liouvillian(effective_hamiltonian(h, proj, k_b), k_f),
                rho0, proj, k_b)
            direct = oracles.ode_yield(h, proj, rho0, k_b, k_f)
            assert abs(spectral - liouville) < 1e-6
            assert abs(spectral - direct) < 1e-6
            assert abs(liouville - direct) < 1e-6


def test_criterion_04_polarization_identity(capfd):
    with criterion(capfd, 4, "polarizing initial state carries polarization "
                      "-sin(chi)", 10.0):
        system = SpinSystem(field_mT=0.05)
        sz = np.diag([0.5, -0.5]).astype(complex)
        pol = embed(sz, 0, system.dims) - embed(sz, 1, system.dims)
        for chi in np.linspace(-np.pi / 2, np.pi / 2, 50):
            rho = initial_state(CissConfig("cisp", chi), system).matrix
            value = float(np.trace(rho @ pol).real)
            assert abs(value + np.sin(chi)) < 1e-12


def test_criterion_05_channel_endpoints_and_triplet_complement(capfd):
    with criterion(capfd, 5, "channel endpoints reproduce both closed-form models "
                      "and the triplet complement", 10.0):
        system = zeno_toy_system()
        m = system.nuclear_dim
        eye = np.eye(system.dim)
        chis = [-1.2, -0.4, 0.3, 1.1, np.pi / 2]
        for precursor in ("singlet", "triplet"):
            for chi in chis:
                for target, j in (("cisp", np.pi / 8), ("cisc", 0.0)):
                    ref = CissConfig(target, chi, 0.0, precursor)
                    via = CissConfig("channel", chi, j, precursor)
                    d_state = np.abs(initial_state(via, system).matrix
                                     - initial_state(ref, system).matrix)
                    d_proj = np.abs(recombination_projector(via, system)
                                    - recombination_projector(ref, system))
                    assert d_state.max() < 1e-13
                    assert d_proj.max() < 1e-13
        for model, j in (("none", 0.0), ("cisp", 0.0), ("cisc", 0.0),
                         ("channel", 0.37)):
            for chi in chis:
                rho_s = initial_state(CissConfig(model, chi, j, "singlet"),
                                      system).matrix
                rho_t = initial_state(CissConfig(model, chi, j, "triplet"),
                                      system).matrix
                assert np.abs(rho_t - (eye / (3 * m) - rho_s / 3)).max() < 1e-13


def test_criterion_06_zeno_signatures(capfd):
    with criterion(capfd, 6, "single-nucleus toy shows the quantum-Zeno signatures",
                   300.0):
        system = zeno_toy_system()
        ciss = CissConfig("none", 0.0, 0.0, "triplet")
        proj = recombination_projector(ciss, system)

        # (a) twelve eigenvalues for the 2 x 2 x 3 toy
        eig = robust_eigendecompose(system.hamiltonian(Orientation(0.0, 0.0)),
                                    proj, 1e3)
        assert eig.values.shape == (12,)

        # (b) the slow manifold decays like 1/k_b once k_b dominates
        kbs = np.geomspace(1e3, 1e5, 9)
        for o in (Orientation(0.0, 0.0), Orientation(1.1, 0.7)):
            h = system.hamiltonian(o)
            rates = []
            for k_b in kbs:
                im = np.abs(robust_eigendecompose(h, proj, k_b)
                            .values.imag)
                slow = im[im < k_b / 4]
                assert slow.size == 9
                rates.append(slow.max())
            slope = np.polyfit(np.log10(kbs), np.log10(rates), 1)[0]
            assert abs(slope + 1.0) < 0.1

        # (c) anisotropy peaks strictly inside the rate grid, deep in the
        # k_b >> k_f regime
        grid = SweepGrid(axes=[AxisSpec("k_b", "log", 1e-2, 1e6, 50)],
                         fixed={"k_f": 1.0},
                         orientations=OrientationSpec(count=300))
        result = run_sweep(system, ciss, grid)
        assert result.complete and not result.failed
        kb_values = result.axis_values[0]
        am = int(np.nanargmax(result.delta))
        assert 0 < am < kb_values.size - 1
        assert kb_values[am] >= 100 * 1.0
        assert np.isclose(kb_values[am], 1677.0, rtol=5e-3)
        assert np.isclose(result.delta[am], 0.115998, rtol=1e-3)


def test_criterion_07_chirality_enhancement_direction(capfd):
    with criterion(capfd, 7, "polarizing chirality boosts anisotropy far more than "
                      "the coherence-only model", 600.0):
        system = ciss_pair_system()
        grid = SweepGrid(axes=[AxisSpec("k_b", "log", 1e3, 1e3, 1)],
                         fixed={"k_f": 1.0},
                         orientations=OrientationSpec(count=300))
        deltas = {}
        for label, model, chi in [("none", "none", 0.0),
                                  ("cisp", "cisp", np.pi / 2),
                                  ("cisc", "cisc", np.pi / 2)]:
            result = run_sweep(system, CissConfig(model, chi), grid)
            assert result.complete and not result.failed
            deltas[label] = float(result.delta[0])
        assert deltas["cisp"] > deltas["none"]
        assert deltas["cisc"] < deltas["cisp"]
        assert np.isclose(deltas["none"], 7.793e-5, rtol=1e-2)
        assert np.isclose(deltas["cisp"], 1.546e-2, rtol=1e-2)
        assert np.isclose(deltas["cisc"], 8.531e-5, rtol=1e-2)


def test_criterion_08_relaxation_attenuates_but_preserves(capfd):
    with criterion(capfd, 8, "random-field relaxation attenuates the optimum "
                      "without erasing it", 600.0):
        system = zeno_toy_system()
        ciss = CissConfig("none", 0.0, 0.0, "triplet")
        grid = SweepGrid(axes=[AxisSpec("k_b", "log", 1e-2, 1e6, 50)],
                         fixed={"k_f": 1.0},
                         orientations=OrientationSpec(count=300))
        bare = run_sweep(system, ciss, grid)
        am = int(np.nanargmax(bare.delta))
        kb_opt = float(bare.axis_values[0][am])
        peak = float(bare.delta[am])

        spot = SweepGrid(axes=[AxisSpec("k_b", "log", kb_opt, kb_opt, 1)],
                         fixed={"k_f": 1.0},
                         orientations=OrientationSpec(count=300))
        relax = RelaxationSpec("rfr", gamma=1.0, tau_c=1e-3)
        noisy = run_sweep(system, ciss, spot, relax)
        assert noisy.complete and not noisy.failed
        attenuated = float(noisy.delta[0])
        assert attenuated < peak
        assert attenuated > 0.2 * peak
        assert np.isclose(attenuated / peak, 0.2216, rtol=1e-2)


def test_criterion_09_relaxation_kernel_structure(capfd):
    with criterion(capfd, 9, "relaxation kernel is trace-free and vanishes without "
                      "noise", 30.0):
        system = zeno_toy_system()
        ciss = CissConfig("none")
        proj = recombination_projector(ciss, system)
        eig = robust_eigendecompose(system.hamiltonian(Orientation(0.4, 1.1)),
                                    proj, 10.0)
        relax = RelaxationSpec("rfr", gamma=0.7, tau_c=2e-3)
        superop = nz_relaxation(eig, relax, system, k_f=1.0)
        rng = np.random.default_rng(11)
        d = system.dim
        for _ in range(100):
            a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            rho = a @ a.conj().T
            rho /= np.trace(rho).real
            assert abs(np.trace(unvec(superop @ vec(rho)))) < 1e-10
        silent = nz_relaxation(eig, RelaxationSpec("rfr", gamma=0.0),
                               system, k_f=1.0)
        assert np.abs(silent).max() == 0.0
        gamma, tau_c = 1.0, 1e-3
        assert abs(spectral_density(0.0, gamma / tau_c, tau_c) - gamma) < 1e-14


def test_criterion_10_determinism_and_resume(tmp_path, capfd):
    with criterion(capfd, 10, "sweeps are deterministic and resume byte-identically",
                   120.0):
        text = """
spin_system:
  field: 0.05 mT
  radical_a:
    nuclei:
      - multiplicity: 3
        tensor: {unit: mT, rows: [[0, 0, 0], [0, 0, 0], [0, 0, 2.5]]}
kinetics:
  k_b: {scale: log, start: 10 1/us, stop: 1e4 1/us, points: 4}
  k_f: 1 1/us
orientations:
  count: 8
  scheme: random-uniform
  seed: 5
sweep:
  checkpoint: part.ckpt.npz
  checkpoint_interval: 1
"""
        cfgpath = tmp_path / "run.cfg"
        cfgpath.write_text(text, encoding="utf-8")

        def csv_bytes(outdir):
            with open(os.path.join(outdir, "sweep.csv"), "rb") as fh:
                return fh.read()

        runs = []
        for name in ("a", "b"):
            outdir = str(tmp_path / name)
            assert cli.main(["sweep", "--config", str(cfgpath), "--out",
                             outdir, "--no-render"]) == 0
            runs.append(csv_bytes(outdir))
        assert runs[0] == runs[1]

        resume_dir = str(tmp_path / "resume")
        os.makedirs(resume_dir)
        cfg = load_config(str(cfgpath))
        partial = run_sweep(cfg.build_system(), cfg.build_ciss(),
                            cfg.sweep_grid(), cfg.build_relax(),
                            checkpoint_path=os.path.join(resume_dir,
                                                         "part.ckpt.npz"),
                            max_units=3)
        assert not partial.complete
        assert cli.main(["sweep", "--config", str(cfgpath), "--out",
                         resume_dir, "--no-render"]) == 0
        assert csv_bytes(resume_dir) == runs[0]


def test_criterion_11_performance_envelope(capfd):
    with criterion(capfd, 11, "large factorized rate sweep meets the performance "
                       "envelope", 1800.0):
        system = zeno_toy_system()
        grid = SweepGrid(axes=[AxisSpec("k_b", "log", 1e-2, 1e6, 200),
                               AxisSpec("k_f", "log", 1e-2, 1e2, 200)],
                         orientations=OrientationSpec(count=300))
        result = run_sweep(system, CissConfig("none"), grid, threads=1)
        assert result.complete and not result.failed
        assert result.eig_count == 300 * 200
        assert result.delta.shape == (200, 200)
        assert np.isfinite(result.delta).all()
        assert np.isfinite(result.mean).all()
