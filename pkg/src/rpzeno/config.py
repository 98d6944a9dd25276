"""Run configuration: a small YAML dialect with explicit physical units.

Every physical quantity is written as a ``"value unit"`` string (for
example ``field: 0.05 mT`` or ``k_b: 1e3 1/us``); matrices carry a sibling
``unit`` key.  Unknown keys, missing units and non-finite numbers are
rejected with the offending key path and its line and column.  A parsed
configuration can be re-emitted in canonical form (internal units, sorted
keys, defaults materialized); the canonical text reparses to an identical
configuration and its SHA-256 digest identifies checkpoint and manifest
compatibility.
"""

import hashlib
from dataclasses import dataclass

import numpy as np
import yaml

from .ciss import CissConfig
from .constants import DEFAULT_FIELD_MT, GAMMA_E
from .dynamics import RelaxationSpec
from .errors import ConfigError
from .spincore import DipolarSpec, NucleusSpec, SpinSystem
from .sweep import AxisSpec, OrientationSpec, SweepGrid

__all__ = ["RunConfig", "parse_config", "load_config", "parse_grid_override",
           "apply_grid_override"]

_UNIT_TABLES = {
    "field": {"mT": 1.0, "uT": 1e-3, "nT": 1e-6, "T": 1e3, "G": 0.1},
    "rate": {"1/us": 1.0, "us^-1": 1.0, "1/ns": 1e3, "ns^-1": 1e3,
             "1/ms": 1e-3, "ms^-1": 1e-3, "1/s": 1e-6, "s^-1": 1e-6},
    "time": {"us": 1.0, "ns": 1e-3, "ps": 1e-6, "ms": 1e3, "s": 1e6},
    "length": {"nm": 1.0, "angstrom": 0.1, "pm": 1e-3},
    "angle": {"rad": 1.0, "mrad": 1e-3, "deg": np.pi / 180.0},
    "gyromagnetic": {"rad/(us*mT)": 1.0},
}
_INTERNAL_UNIT = {"field": "mT", "rate": "1/us", "time": "us",
                  "length": "nm", "angle": "rad", "gyromagnetic": "rad/(us*mT)"}

_SCHEMA_TOP = ("spin_system", "ciss", "kinetics", "relaxation", "orientations",
               "observables", "sweep", "eigen", "output")


def _collect_marks(node, path, marks):
    marks[path] = (node.start_mark.line + 1, node.start_mark.column + 1)
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            child = f"{path}.{key_node.value}" if path else str(key_node.value)
            _collect_marks(value_node, child, marks)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _collect_marks(item, f"{path}[{i}]", marks)


class _Checker:
    def __init__(self, marks):
        self.marks = marks

    def where(self, path):
        probe = path
        while probe and probe not in self.marks:
            probe = probe.rsplit(".", 1)[0] if "." in probe else ""
        return self.marks.get(probe, (None, None))

    def fail(self, path, message):
        line, column = self.where(path)
        raise ConfigError(message, path=path, line=line, column=column)

    def mapping(self, value, path, allowed, required=()):
        if value is None:
            value = {}
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping, got {type(value).__name__}")
        for key in value:
            if key not in allowed:
                self.fail(f"{path}.{key}" if path else str(key),
                          f"unknown key {key!r}; accepted keys: {', '.join(sorted(allowed))}")
        for key in required:
            if key not in value:
                self.fail(path, f"missing required key {key!r}")
        return value

    def quantity(self, value, path, kind):
        table = _UNIT_TABLES[kind]
        example = f"1.0 {_INTERNAL_UNIT[kind]}"
        if isinstance(value, bool) or value is None:
            self.fail(path, f"expected a '{example}'-style quantity")
        if isinstance(value, (int, float)):
            self.fail(path, f"missing unit; write e.g. '{value} {_INTERNAL_UNIT[kind]}'")
        if not isinstance(value, str):
            self.fail(path, f"expected a '{example}'-style quantity")
        parts = value.split()
        if len(parts) != 2:
            self.fail(path, f"expected 'value unit', got {value!r}")
        try:
            magnitude = float(parts[0])
        except ValueError:
            self.fail(path, f"unreadable number {parts[0]!r}")
        if not np.isfinite(magnitude):
            self.fail(path, f"non-finite value {parts[0]!r}")
        if parts[1] not in table:
            self.fail(path, f"unknown {kind} unit {parts[1]!r}; "
                            f"accepted: {', '.join(sorted(table))}")
        return magnitude * table[parts[1]]

    def number(self, value, path, kind=float, minimum=None):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {type(value).__name__}")
        if kind is int and not isinstance(value, int):
            self.fail(path, f"expected an integer, got {value!r}")
        if not np.isfinite(value):
            self.fail(path, f"non-finite number {value!r}")
        if minimum is not None and value < minimum:
            self.fail(path, f"must be at least {minimum}, got {value}")
        return kind(value)

    def boolean(self, value, path):
        if not isinstance(value, bool):
            self.fail(path, f"expected true/false, got {value!r}")
        return value

    def choice(self, value, path, options):
        if value not in options:
            self.fail(path, f"expected one of {', '.join(options)}, got {value!r}")
        return value

    def numeric_rows(self, value, path, shape):
        arr = []
        if not isinstance(value, list) or len(value) != shape[0]:
            self.fail(path, f"expected {shape[0]} rows")
        for i, row in enumerate(value):
            if not isinstance(row, list) or len(row) != shape[1]:
                self.fail(f"{path}[{i}]", f"expected {shape[1]} numbers")
            arr.append([self.number(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)])
        return arr

    def vector(self, value, path, n):
        if not isinstance(value, list) or len(value) != n:
            self.fail(path, f"expected a list of {n} numbers")
        return [self.number(x, f"{path}[{i}]") for i, x in enumerate(value)]

    def tensor_block(self, value, path, kind):
        block = self.mapping(value, path, ("unit", "rows"), required=("unit", "rows"))
        table = _UNIT_TABLES[kind]
        unit = block["unit"]
        if unit not in table:
            self.fail(f"{path}.unit", f"unknown {kind} unit {unit!r}; "
                                      f"accepted: {', '.join(sorted(table))}")
        rows = self.numeric_rows(block["rows"], f"{path}.rows", (3, 3))
        factor = table[unit]
        return [[x * factor for x in row] for row in rows]

    def axis_block(self, value, path, kind):
        block = self.mapping(value, path, ("scale", "start", "stop", "points"),
                             required=("scale", "start", "stop", "points"))
        scale = self.choice(block["scale"], f"{path}.scale", ("log", "linear"))
        start = self.quantity(block["start"], f"{path}.start", kind)
        stop = self.quantity(block["stop"], f"{path}.stop", kind)
        points = self.number(block["points"], f"{path}.points", int, minimum=1)
        return {"scale": scale, "start": start, "stop": stop, "points": points}

    def quantity_or_axis(self, value, path, kind):
        if isinstance(value, dict):
            return {"axis": self.axis_block(value, path, kind)}
        return self.quantity(value, path, kind)

    def construct(self, factory, path):
        try:
            return factory()
        except ValueError as exc:
            self.fail(path, str(exc))


def _normalize(raw, checker: _Checker):
    top = checker.mapping(raw, "", _SCHEMA_TOP, required=("spin_system", "kinetics"))
    data = {}

    sysblock = checker.mapping(top["spin_system"], "spin_system",
                               ("field", "gamma_e", "frame_rotation",
                                "radical_a", "radical_b", "dipolar"))
    out = {"field": checker.quantity(sysblock.get("field", f"{DEFAULT_FIELD_MT} mT"),
                                     "spin_system.field", "field")}
    gamma = sysblock.get("gamma_e", f"{GAMMA_E!r} rad/(us*mT)")
    if isinstance(gamma, list):
        if len(gamma) != 2:
            checker.fail("spin_system.gamma_e", "per-electron form needs two entries")
        out["gamma_e"] = [checker.quantity(g, f"spin_system.gamma_e[{i}]", "gyromagnetic")
                          for i, g in enumerate(gamma)]
    else:
        g = checker.quantity(gamma, "spin_system.gamma_e", "gyromagnetic")
        out["gamma_e"] = [g, g]
    if "frame_rotation" in sysblock:
        out["frame_rotation"] = checker.numeric_rows(sysblock["frame_rotation"],
                                                     "spin_system.frame_rotation", (3, 3))
    else:
        out["frame_rotation"] = None

    for radical in ("radical_a", "radical_b"):
        block = checker.mapping(sysblock.get(radical), f"spin_system.{radical}", ("nuclei",))
        nuclei = block.get("nuclei", [])
        if nuclei is None:
            nuclei = []
        if not isinstance(nuclei, list):
            checker.fail(f"spin_system.{radical}.nuclei", "expected a list of nuclei")
        entries = []
        for i, nuc in enumerate(nuclei):
            path = f"spin_system.{radical}.nuclei[{i}]"
            nb = checker.mapping(nuc, path, ("label", "multiplicity", "tensor"),
                                 required=("multiplicity", "tensor"))
            entry = {
                "label": str(nb.get("label", f"{radical[-1].upper()}{i + 1}")),
                "multiplicity": checker.number(nb["multiplicity"], f"{path}.multiplicity",
                                               int, minimum=2),
                "tensor": checker.tensor_block(nb["tensor"], f"{path}.tensor", "field"),
            }
            entries.append(entry)
        out[radical] = {"nuclei": entries}

    dip = checker.mapping(sysblock.get("dipolar", {"mode": "none"}), "spin_system.dipolar",
                          ("mode", "distance", "axis", "tensor", "allow_general_tensor"),
                          required=("mode",))
    mode = checker.choice(dip["mode"], "spin_system.dipolar.mode", ("none", "axis", "tensor"))
    if mode == "axis":
        for key in ("distance", "axis"):
            if key not in dip:
                checker.fail("spin_system.dipolar", f"axis mode needs {key!r}")
        out["dipolar"] = {
            "mode": "axis",
            "distance": checker.quantity(dip["distance"], "spin_system.dipolar.distance",
                                         "length"),
            "axis": checker.vector(dip["axis"], "spin_system.dipolar.axis", 3),
        }
    elif mode == "tensor":
        if "tensor" not in dip:
            checker.fail("spin_system.dipolar", "tensor mode needs 'tensor'")
        out["dipolar"] = {
            "mode": "tensor",
            "tensor": checker.tensor_block(dip["tensor"], "spin_system.dipolar.tensor",
                                           "field"),
            "allow_general_tensor": checker.boolean(
                dip.get("allow_general_tensor", False),
                "spin_system.dipolar.allow_general_tensor"),
        }
    else:
        out["dipolar"] = {"mode": "none"}
    data["spin_system"] = out

    cb = checker.mapping(top.get("ciss"), "ciss",
                         ("model", "chi", "channel_j", "precursor"))
    data["ciss"] = {
        "model": checker.choice(cb.get("model", "none"), "ciss.model",
                                ("none", "cisp", "cisc", "channel")),
        "chi": checker.quantity_or_axis(cb.get("chi", "0 rad"), "ciss.chi", "angle"),
        "channel_j": checker.quantity(cb.get("channel_j", "0 rad"), "ciss.channel_j",
                                      "angle"),
        "precursor": checker.choice(cb.get("precursor", "singlet"), "ciss.precursor",
                                    ("singlet", "triplet")),
    }
    chi_entry = data["ciss"]["chi"]
    chi_bounds = ([chi_entry["axis"]["start"], chi_entry["axis"]["stop"]]
                  if isinstance(chi_entry, dict) else [chi_entry])
    for bound in chi_bounds:
        if abs(bound) > np.pi / 2 + 1e-12:
            checker.fail("ciss.chi", f"chi must lie in [-pi/2, pi/2], got {bound}")

    kb = checker.mapping(top["kinetics"], "kinetics", ("k_b", "k_f"),
                         required=("k_b", "k_f"))
    data["kinetics"] = {
        "k_b": checker.quantity_or_axis(kb["k_b"], "kinetics.k_b", "rate"),
        "k_f": checker.quantity_or_axis(kb["k_f"], "kinetics.k_f", "rate"),
    }

    declared_axes = [("chi", "ciss.chi", data["ciss"]["chi"]),
                     ("k_b", "kinetics.k_b", data["kinetics"]["k_b"]),
                     ("k_f", "kinetics.k_f", data["kinetics"]["k_f"])]
    for name, path, entry in declared_axes:
        if isinstance(entry, dict):
            ax = entry["axis"]
            checker.construct(lambda name=name, ax=ax: AxisSpec(
                name, ax["scale"], ax["start"], ax["stop"], ax["points"]), path)
    if sum(isinstance(e, dict) for _, _, e in declared_axes) > 2:
        checker.fail("kinetics", "at most two of chi, k_b and k_f may be axes")

    rb = checker.mapping(top.get("relaxation"), "relaxation",
                         ("model", "gamma", "tau_c", "include_kf_in_kernel"))
    data["relaxation"] = {
        "model": checker.choice(rb.get("model", "none"), "relaxation.model",
                                ("none", "rfr")),
        "gamma": checker.quantity(rb.get("gamma", "0 1/us"), "relaxation.gamma", "rate"),
        "tau_c": checker.quantity(rb.get("tau_c", "1 ns"), "relaxation.tau_c", "time"),
        "include_kf_in_kernel": checker.boolean(rb.get("include_kf_in_kernel", True),
                                                "relaxation.include_kf_in_kernel"),
    }

    ob = checker.mapping(top.get("orientations"), "orientations",
                         ("count", "scheme", "seed"))
    data["orientations"] = {
        "count": checker.number(ob.get("count", 300), "orientations.count", int, minimum=2),
        "scheme": checker.choice(ob.get("scheme", "fibonacci"), "orientations.scheme",
                                 ("fibonacci", "random-uniform")),
        "seed": checker.number(ob.get("seed", 0), "orientations.seed", int, minimum=0),
    }

    vb = checker.mapping(top.get("observables"), "observables",
                         ("coherence", "partition", "entropy_base", "weighted"))
    data["observables"] = {
        "coherence": checker.boolean(vb.get("coherence", False), "observables.coherence"),
        "partition": checker.choice(vb.get("partition", "global"), "observables.partition",
                                    ("global", "local")),
        "entropy_base": checker.choice(vb.get("entropy_base", "nats"),
                                       "observables.entropy_base", ("nats", "bits")),
        "weighted": checker.boolean(vb.get("weighted", True), "observables.weighted"),
    }

    sb = checker.mapping(top.get("sweep"), "sweep",
                         ("checkpoint", "checkpoint_interval", "cell_time_budget", "series"))
    series = None
    if "series" in sb and sb["series"] is not None:
        sser = checker.mapping(sb["series"], "sweep.series", ("stages",),
                               required=("stages",))
        stages = sser["stages"]
        if not isinstance(stages, list) or not stages:
            checker.fail("sweep.series.stages", "expected a non-empty list of [n_a, n_b] pairs")
        parsed = []
        for i, stage in enumerate(stages):
            if not isinstance(stage, list) or len(stage) != 2:
                checker.fail(f"sweep.series.stages[{i}]", "expected an [n_a, n_b] pair")
            parsed.append([checker.number(x, f"sweep.series.stages[{i}][{j}]", int,
                                          minimum=0) for j, x in enumerate(stage)])
        series = {"stages": parsed}
    checkpoint = sb.get("checkpoint")
    if checkpoint is not None and not isinstance(checkpoint, str):
        checker.fail("sweep.checkpoint", "expected a file name")
    data["sweep"] = {
        "checkpoint": checkpoint,
        "checkpoint_interval": checker.number(sb.get("checkpoint_interval", 20),
                                              "sweep.checkpoint_interval", int, minimum=1),
        "cell_time_budget": checker.quantity(sb.get("cell_time_budget", "60 s"),
                                             "sweep.cell_time_budget", "time"),
        "series": series,
    }

    eb = checker.mapping(top.get("eigen"), "eigen", ("directions",))
    directions = eb.get("directions", ["Bx", "Bz"])
    if not isinstance(directions, list) or not directions:
        checker.fail("eigen.directions", "expected a non-empty list")
    data["eigen"] = {"directions": [checker.choice(d, f"eigen.directions[{i}]",
                                                   ("Bx", "By", "Bz"))
                                    for i, d in enumerate(directions)]}

    pb = checker.mapping(top.get("output"), "output", ("directory", "render"))
    directory = pb.get("directory", "out")
    if not isinstance(directory, str) or not directory:
        checker.fail("output.directory", "expected a directory name")
    data["output"] = {"directory": directory,
                      "render": checker.boolean(pb.get("render", True), "output.render")}

    # construct every object once so structural errors surface with locations
    cfg = RunConfig(data)
    checker.construct(cfg.build_system, "spin_system")
    checker.construct(cfg.build_ciss, "ciss")
    checker.construct(cfg.build_relax, "relaxation")
    stages = cfg.series_stages()
    if stages:
        system = cfg.build_system()
        for i, (n_a, n_b) in enumerate(stages):
            if n_a > len(system.nuclei_a) or n_b > len(system.nuclei_b):
                checker.fail(f"sweep.series.stages[{i}]",
                             f"stage ({n_a}, {n_b}) exceeds available nuclei "
                             f"({len(system.nuclei_a)}, {len(system.nuclei_b)})")
    return data


def _q(value, kind):
    return f"{float(value)!r} {_INTERNAL_UNIT[kind]}"


def _q_or_axis(value, kind):
    if isinstance(value, dict):
        ax = value["axis"]
        return {"scale": ax["scale"], "start": _q(ax["start"], kind),
                "stop": _q(ax["stop"], kind), "points": ax["points"]}
    return _q(value, kind)


def _canonical_data(data):
    sysd = data["spin_system"]
    spin = {
        "field": _q(sysd["field"], "field"),
        "gamma_e": [_q(g, "gyromagnetic") for g in sysd["gamma_e"]],
        "dipolar": {"mode": sysd["dipolar"]["mode"]},
    }
    if sysd["frame_rotation"] is not None:
        spin["frame_rotation"] = [[float(x) for x in row]
                                  for row in sysd["frame_rotation"]]
    if sysd["dipolar"]["mode"] == "axis":
        spin["dipolar"]["distance"] = _q(sysd["dipolar"]["distance"], "length")
        spin["dipolar"]["axis"] = [float(x) for x in sysd["dipolar"]["axis"]]
    elif sysd["dipolar"]["mode"] == "tensor":
        spin["dipolar"]["tensor"] = {"unit": "mT",
                                     "rows": [[float(x) for x in row]
                                              for row in sysd["dipolar"]["tensor"]]}
        spin["dipolar"]["allow_general_tensor"] = sysd["dipolar"]["allow_general_tensor"]
    for radical in ("radical_a", "radical_b"):
        spin[radical] = {"nuclei": [
            {"label": n["label"], "multiplicity": n["multiplicity"],
             "tensor": {"unit": "mT", "rows": [[float(x) for x in row]
                                               for row in n["tensor"]]}}
            for n in sysd[radical]["nuclei"]]}

    out = {
        "spin_system": spin,
        "ciss": {"model": data["ciss"]["model"],
                 "chi": _q_or_axis(data["ciss"]["chi"], "angle"),
                 "channel_j": _q(data["ciss"]["channel_j"], "angle"),
                 "precursor": data["ciss"]["precursor"]},
        "kinetics": {"k_b": _q_or_axis(data["kinetics"]["k_b"], "rate"),
                     "k_f": _q_or_axis(data["kinetics"]["k_f"], "rate")},
        "relaxation": {"model": data["relaxation"]["model"],
                       "gamma": _q(data["relaxation"]["gamma"], "rate"),
                       "tau_c": _q(data["relaxation"]["tau_c"], "time"),
                       "include_kf_in_kernel": data["relaxation"]["include_kf_in_kernel"]},
        "orientations": dict(data["orientations"]),
        "observables": dict(data["observables"]),
        "sweep": {"checkpoint_interval": data["sweep"]["checkpoint_interval"],
                  "cell_time_budget": _q(data["sweep"]["cell_time_budget"], "time")},
        "eigen": {"directions": list(data["eigen"]["directions"])},
        "output": dict(data["output"]),
    }
    if data["sweep"]["checkpoint"] is not None:
        out["sweep"]["checkpoint"] = data["sweep"]["checkpoint"]
    if data["sweep"]["series"] is not None:
        out["sweep"]["series"] = {"stages": [[int(a), int(b)] for a, b in
                                             data["sweep"]["series"]["stages"]]}
    return out


@dataclass(eq=False)
class RunConfig:
    """Validated configuration in internal units plus object builders."""

    data: dict

    def build_system(self) -> SpinSystem:
        d = self.data["spin_system"]

        def nuclei(block):
            return [NucleusSpec(n["multiplicity"], np.array(n["tensor"]), n["label"])
                    for n in block["nuclei"]]

        dip = d["dipolar"]
        if dip["mode"] == "axis":
            dipolar = DipolarSpec(distance_nm=dip["distance"], axis=np.array(dip["axis"]))
        elif dip["mode"] == "tensor":
            dipolar = DipolarSpec(tensor_mT=np.array(dip["tensor"]),
                                  allow_general_tensor=dip["allow_general_tensor"])
        else:
            dipolar = DipolarSpec.none()
        rotation = None if d["frame_rotation"] is None else np.array(d["frame_rotation"])
        return SpinSystem(nuclei(d["radical_a"]), nuclei(d["radical_b"]), dipolar,
                          field_mT=d["field"], gamma_e=tuple(d["gamma_e"]),
                          frame_rotation=rotation)

    def build_ciss(self) -> CissConfig:
        d = self.data["ciss"]
        chi = 0.0 if isinstance(d["chi"], dict) else d["chi"]
        return CissConfig(d["model"], chi, d["channel_j"], d["precursor"])

    def build_relax(self) -> RelaxationSpec:
        d = self.data["relaxation"]
        return RelaxationSpec(d["model"], d["gamma"], d["tau_c"],
                              d["include_kf_in_kernel"])

    def orientation_spec(self) -> OrientationSpec:
        d = self.data["orientations"]
        return OrientationSpec(d["count"], d["scheme"], d["seed"])

    def _axis(self, name, spec) -> AxisSpec:
        ax = spec["axis"]
        return AxisSpec(name, ax["scale"], ax["start"], ax["stop"], ax["points"])

    def axes(self) -> list:
        """Declared sweep axes in block order chi, k_b, k_f."""
        found = []
        if isinstance(self.data["ciss"]["chi"], dict):
            found.append(self._axis("chi", self.data["ciss"]["chi"]))
        for name in ("k_b", "k_f"):
            if isinstance(self.data["kinetics"][name], dict):
                found.append(self._axis(name, self.data["kinetics"][name]))
        return found

    def fixed_rates(self):
        """(k_b, k_f) as scalars; an axis here is a configuration error."""
        rates = []
        for name in ("k_b", "k_f"):
            value = self.data["kinetics"][name]
            if isinstance(value, dict):
                raise ConfigError(f"{name} must be a scalar for this command",
                                  path=f"kinetics.{name}")
            rates.append(value)
        return tuple(rates)

    def sweep_grid(self) -> SweepGrid:
        axes = self.axes()
        if not axes:
            raise ConfigError("a sweep needs at least one axis over chi, k_b or k_f")
        if len(axes) > 2:
            raise ConfigError("at most two of chi, k_b, k_f may be axes")
        fixed = {}
        for name in ("k_b", "k_f"):
            if not isinstance(self.data["kinetics"][name], dict):
                fixed[name] = self.data["kinetics"][name]
        obs = self.data["observables"]
        return SweepGrid(axes=axes, fixed=fixed, orientations=self.orientation_spec(),
                         compute_coherence=obs["coherence"],
                         coherence_partition=obs["partition"],
                         coherence_weighted=obs["weighted"],
                         cell_time_budget=self.data["sweep"]["cell_time_budget"] * 1e-6)

    def entropy_base(self) -> float:
        return 2.0 if self.data["observables"]["entropy_base"] == "bits" else float(np.e)

    def series_stages(self):
        series = self.data["sweep"]["series"]
        if series is None:
            return None
        return [tuple(stage) for stage in series["stages"]]

    def canonical(self) -> str:
        return yaml.safe_dump(_canonical_data(self.data), sort_keys=True,
                              default_flow_style=False)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.canonical() == other.canonical()


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate configuration text."""
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ConfigError(f"syntax error in {source}: {getattr(exc, 'problem', exc)}",
                              line=mark.line + 1, column=mark.column + 1) from exc
        raise ConfigError(f"syntax error in {source}: {exc}") from exc
    if raw is None:
        raise ConfigError(f"{source} is empty")
    marks = {}
    if node is not None:
        _collect_marks(node, "", marks)
    data = _normalize(raw, _Checker(marks))
    return RunConfig(data)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=path)


def parse_grid_override(text: str):
    """Parse ``name=scale:start:stop:points`` axis overrides, comma separated.

    Values are in internal units (rad for chi, 1/us for rates).  Returns a
    mapping from axis name to the parsed axis description.
    """
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            name, rest = part.split("=", 1)
            scale, start, stop, points = rest.split(":")
            spec = {"axis": {"scale": scale.strip(), "start": float(start),
                             "stop": float(stop), "points": int(points)}}
        except ValueError as exc:
            raise ConfigError(f"bad grid override {part!r}; "
                              "expected name=scale:start:stop:points") from exc
        name = name.strip()
        if name not in ("chi", "k_b", "k_f"):
            raise ConfigError(f"grid override axis must be chi, k_b or k_f, got {name!r}")
        if spec["axis"]["scale"] not in ("log", "linear"):
            raise ConfigError(f"grid override scale must be log or linear in {part!r}")
        out[name] = spec
    if not out:
        raise ConfigError("empty grid override")
    return out


def apply_grid_override(config: RunConfig, overrides) -> RunConfig:
    """New RunConfig with the given axes replacing scalars or axes."""
    import copy
    data = copy.deepcopy(config.data)
    for name, spec in overrides.items():
        if name == "chi":
            data["ciss"]["chi"] = spec
        else:
            data["kinetics"][name] = spec
    return RunConfig(data)
