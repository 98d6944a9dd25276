"""Shared system builders for the test suite."""

import numpy as np

from rpzeno import DipolarSpec, NucleusSpec, SpinSystem

import oracles


def zeno_toy_system():
    """Twelve-dimensional reference pair: one spin-1 nucleus, point dipole."""
    nuc = NucleusSpec(3, np.diag([0.0, 0.0, 2.5]), "N1")
    dip = DipolarSpec(distance_nm=1.4, axis=np.array([0.0, 0.0, 1.0]))
    return SpinSystem(nuclei_a=[nuc], nuclei_b=[], dipolar=dip, field_mT=0.05)


def ciss_pair_system():
    """Two-nucleus pair used for the chirality comparisons."""
    nuc_a = NucleusSpec(3, np.diag([-0.1, -0.1, 1.7]), "N5")
    nuc_b = NucleusSpec(2, np.diag([0.3, 0.3, 0.9]), "H1")
    dip = DipolarSpec(distance_nm=1.9, axis=np.array([0.0, 0.0, 1.0]))
    return SpinSystem(nuclei_a=[nuc_a], nuclei_b=[nuc_b], dipolar=dip,
                      field_mT=0.05)


_LAYOUTS = [(2,), (3,), (2, 2), (3, 2)]


def random_system(rng, with_rotation=False, gamma_pair=None):
    """Small random spin system with reproducible parameters."""
    mults = _LAYOUTS[rng.integers(len(_LAYOUTS))]
    split = int(rng.integers(len(mults) + 1))
    nuclei = [NucleusSpec(m, 0.8 * rng.standard_normal((3, 3)), f"n{i}")
              for i, m in enumerate(mults)]
    if rng.random() < 0.7:
        axis = rng.standard_normal(3)
        axis = axis / np.linalg.norm(axis)
        dip = DipolarSpec(distance_nm=float(rng.uniform(1.0, 2.5)), axis=axis)
    else:
        dip = DipolarSpec.none()
    rotation = None
    if with_rotation:
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        rotation = q
    kwargs = {} if gamma_pair is None else {"gamma_e": gamma_pair}
    return SpinSystem(nuclei_a=nuclei[:split], nuclei_b=nuclei[split:],
                      dipolar=dip, field_mT=float(rng.uniform(0.02, 0.5)),
                      frame_rotation=rotation, **kwargs)


def raw_nuclei(system):
    """Nuclei of a system as plain (multiplicity, tensor) pairs."""
    return ([(n.multiplicity, np.asarray(n.tensor_mT)) for n in system.nuclei_a],
            [(n.multiplicity, np.asarray(n.tensor_mT)) for n in system.nuclei_b])


def oracle_h(system, orientation):
    """Reference Hamiltonian for a system at one field orientation."""
    nuc_a, nuc_b = raw_nuclei(system)
    dip = system.dipolar
    kwargs = {}
    if dip.is_point_dipole:
        kwargs["eed_distance"] = dip.distance_nm
        kwargs["eed_axis"] = np.asarray(dip.axis)
    elif np.any(np.asarray(dip.tensor_mT)):
        kwargs["eed_tensor_mT"] = np.asarray(dip.tensor_mT)
    rot = system.frame_rotation
    return oracles.pair_hamiltonian(
        nuc_a, nuc_b, system.field_mT, orientation.unit_vector(),
        rotation=None if rot is None else np.asarray(rot),
        gammas=system.gamma_pair, **kwargs)
