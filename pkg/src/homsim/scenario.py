"""Declarative experiment scenarios.

A scenario file is a flat ``key = value`` text format with one key per
line, ``#`` comments, and physical units spelled out in the key names
(``..._ns``, ``..._mhz``).  Preset files shipping with the package pin
the parameters of the experiments they reproduce, so every number is
auditable; a file may start from ``preset = <name>`` and override
individual keys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .elements import (
    DetectorConfig,
    Etalon,
    FilterConfig,
    MemoryConfig,
    NoiseModel,
    QubitLevel,
    SinePhaseScan,
    SourceConfig,
    UniformPhase,
    qubit_level_for,
)

SCAN_VARIABLES = ("polarization_angle_deg", "delay_ns")
ROI_POLICIES = ("centered", "delay_split")

_LEVEL_NAME = {QubitLevel.L0: "V", QubitLevel.L_HALF: "A",
               QubitLevel.L_PI: "H", QubitLevel.L_3HALF: "D"}


class ScenarioParseError(Exception):
    """Structured scenario-file error with the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ScanSpec:
    """Scan variable and its strictly increasing grid."""

    variable: str
    grid: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.variable not in SCAN_VARIABLES:
            raise ValueError(f"unknown scan variable {self.variable!r}")
        if not self.grid:
            raise ValueError("scan grid must be non-empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("scan grid must be strictly increasing")


@dataclass(frozen=True)
class RoiPolicy:
    """How the analysis windows are placed each cycle.

    ``centered``: one window of the total width centered on the signal
    arrival time (polarization scans).  ``delay_split``: two half-width
    windows tracking each arm's signal, merged plus background filler as
    they overlap (delay scans).  ``reference_width_ns`` is the ROI width
    at which the scenario's SBR is quoted; it defaults to the total
    width, and evaluating a different width rescales the background.
    """

    policy: str
    total_width_ns: float
    reference_width_ns: float | None = None

    def __post_init__(self) -> None:
        if self.policy not in ROI_POLICIES:
            raise ValueError(f"unknown roi policy {self.policy!r}")
        if self.total_width_ns <= 0.0:
            raise ValueError("roi total width must be > 0")
        if self.reference_width_ns is None:
            object.__setattr__(self, "reference_width_ns", self.total_width_ns)

    def with_width(self, width_ns: float) -> "RoiPolicy":
        """Same policy evaluated at a different total width (the SBR
        reference width is kept)."""
        return RoiPolicy(self.policy, width_ns, self.reference_width_ns)


@dataclass(frozen=True)
class Scenario:
    """Complete description of one HOM experiment."""

    name: str
    source_a: SourceConfig
    source_b: SourceConfig
    qubit_a: QubitLevel
    qubit_b: QubitLevel
    emit_time_ns: float
    memory_a: MemoryConfig | None
    memory_b: MemoryConfig | None
    noise_a: NoiseModel
    noise_b: NoiseModel
    filters_a: FilterConfig | None
    filters_b: FilterConfig | None
    detector_1: DetectorConfig
    detector_2: DetectorConfig
    roi: RoiPolicy
    scan: ScanSpec
    n_triggers: int
    master_seed: int
    triggers_per_trial: int = 100_000
    overlap_scale: float = 1.0
    save_tags: bool = False

    def __post_init__(self) -> None:
        if self.n_triggers <= 0:
            raise ValueError("n_triggers must be > 0")
        if self.triggers_per_trial <= 0:
            raise ValueError("triggers_per_trial must be > 0")
        if not 0.0 <= self.overlap_scale <= 1.0:
            raise ValueError("overlap_scale must be in [0, 1]")
        if (self.memory_a is None) != (self.memory_b is None):
            raise ValueError("either both memories or neither must be configured")
        if self.source_a.rep_rate_khz != self.source_b.rep_rate_khz:
            raise ValueError("sources must share one repetition rate")
        if self.emit_time_ns <= 0.0:
            raise ValueError("emit_time_ns must be > 0")

    @property
    def trigger_period_ns(self) -> float:
        return self.source_a.trigger_period_ns

    @property
    def n_trials(self) -> int:
        return -(-self.n_triggers // self.triggers_per_trial)

    def read_time_ns(self, arm: str) -> float:
        mem = self.memory_a if arm == "a" else self.memory_b
        if mem is None:
            return self.emit_time_ns
        return self.emit_time_ns + mem.storage_time_us * 1e3


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _parse_lines(text: str) -> dict[str, tuple[str, int]]:
    """key -> (raw value, line number)."""
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioParseError(f"expected 'key = value', got {raw!r}", lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ScenarioParseError(f"empty key or value in {raw!r}", lineno)
        if key in out:
            raise ScenarioParseError(f"duplicate key {key!r}", lineno)
        out[key] = (value, lineno)
    return out


class _KeyBag:
    """Typed access to the parsed keys, tracking which keys were used."""

    def __init__(self, raw: dict[str, tuple[str, int]]):
        self.raw = raw
        self.used: set[str] = set()

    def _get(self, key: str):
        self.used.add(key)
        return self.raw.get(key)

    def has(self, key: str) -> bool:
        return key in self.raw

    def any_with_prefix(self, prefix: str) -> bool:
        return any(k.startswith(prefix) for k in self.raw)

    def _convert(self, key: str, conv, default, required: bool):
        item = self._get(key)
        if item is None:
            if required:
                raise ScenarioParseError(f"missing required key {key!r}")
            return default
        value, lineno = item
        try:
            return conv(value)
        except (ValueError, KeyError) as exc:
            raise ScenarioParseError(f"bad value for {key!r}: {exc}", lineno)

    def number(self, key: str, default: float | None = None, required: bool = False) -> float:
        return self._convert(key, _to_float, default, required)

    def integer(self, key: str, default: int | None = None, required: bool = False) -> int:
        return self._convert(key, lambda v: int(v, 0), default, required)

    def boolean(self, key: str, default: bool = False) -> bool:
        return self._convert(key, _to_bool, default, False)

    def string(self, key: str, default: str | None = None, required: bool = False) -> str:
        return self._convert(key, str, default, required)

    def unknown_keys(self) -> list[tuple[str, int]]:
        return [(k, ln) for k, (v, ln) in self.raw.items() if k not in self.used]


def _to_float(v: str) -> float:
    if v.lower() in ("inf", "infinite"):
        return math.inf
    return float(v)


def _to_bool(v: str) -> bool:
    lv = v.lower()
    if lv in ("true", "yes", "1"):
        return True
    if lv in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {v!r}")


def _parse_grid(v: str) -> tuple[float, ...]:
    if ":" in v:
        parts = v.split(":")
        if len(parts) != 3:
            raise ValueError("grid range must be start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("grid count must be >= 1")
        if count == 1:
            return (start,)
        step = (stop - start) / (count - 1)
        return tuple(start + i * step for i in range(count))
    return tuple(float(x) for x in v.split(","))


def _parse_phase_model(v: str):
    if v == "uniform":
        return UniformPhase()
    if v.startswith("sine"):
        parts = v.split(":")
        if len(parts) == 2:
            return SinePhaseScan(rate_khz=float(parts[1]))
        if len(parts) == 3:
            return SinePhaseScan(rate_khz=float(parts[1]), depth_rad=float(parts[2]))
        raise ValueError("sine phase model is sine:<rate_khz>[:<depth_rad>]")
    raise ValueError(f"unknown phase model {v!r}")


def _source_from(bag: _KeyBag, prefix: str) -> SourceConfig:
    return SourceConfig(
        pulse_fwhm_ns=bag.number(f"{prefix}.pulse_fwhm_ns", required=True),
        mean_photons=bag.number(f"{prefix}.mean_photons", required=True),
        phase_model=bag._convert(f"{prefix}.phase_model", _parse_phase_model,
                                 UniformPhase(), False),
        eom_extinction_db=bag.number(f"{prefix}.eom_extinction_db", math.inf),
        dop=bag.number(f"{prefix}.dop", 1.0),
        rep_rate_khz=bag.number(f"{prefix}.rep_rate_khz", 40.0),
    )


def _memory_from(bag: _KeyBag, prefix: str) -> MemoryConfig | None:
    if not bag.any_with_prefix(prefix + "."):
        return None
    return MemoryConfig(
        eta_store_h=bag.number(f"{prefix}.eta_store_h", required=True),
        eta_store_v=bag.number(f"{prefix}.eta_store_v", required=True),
        transmission=bag.number(f"{prefix}.transmission", required=True),
        storage_time_us=bag.number(f"{prefix}.storage_time_us", 1.0),
        retrieved_fwhm_ns=bag.number(f"{prefix}.retrieved_fwhm_ns", 400.0),
        leakage_fraction=bag.number(f"{prefix}.leakage_fraction", 0.0),
        eit_fwhm_mhz=bag.number(f"{prefix}.eit_fwhm_mhz", 1.0),
    )


def _filters_from(bag: _KeyBag, prefix: str) -> FilterConfig | None:
    if not bag.any_with_prefix(prefix + "."):
        return None
    etalons = []
    for i in range(1, 9):
        key = f"{prefix}.etalon{i}_fwhm_mhz"
        if not bag.has(key):
            break
        etalons.append(Etalon(
            fwhm_mhz=bag.number(key, required=True),
            fsr_ghz=bag.number(f"{prefix}.etalon{i}_fsr_ghz", 13.6),
            insertion_loss_db=bag.number(f"{prefix}.etalon{i}_loss_db", 0.0),
        ))
    if not etalons:
        raise ScenarioParseError(f"{prefix}: filter block without etalon lines")
    return FilterConfig(tuple(etalons))


def _detector_from(bag: _KeyBag, prefix: str) -> DetectorConfig:
    return DetectorConfig(
        efficiency=bag.number(f"{prefix}.efficiency", 1.0),
        jitter_sigma_ns=bag.number(f"{prefix}.jitter_sigma_ns", 10.0),
        resolution_ps=bag.integer(f"{prefix}.resolution_ps", 100),
        dead_time_ns=bag.number(f"{prefix}.dead_time_ns", 0.0),
    )


def parse_scenario_text(text: str, name: str = "<inline>") -> Scenario:
    """Parse scenario text; see :func:`parse_scenario` for file paths."""
    raw = _parse_lines(text)
    if not raw:
        raise ScenarioParseError("empty scenario: no keys found "
                                 "(start from a preset or give the full config)")
    if "preset" in raw:
        preset_name, lineno = raw.pop("preset")
        base = _parse_lines(_preset_text(preset_name, lineno))
        base.update(raw)
        raw = base

    bag = _KeyBag(raw)
    try:
        scenario = Scenario(
            name=bag.string("name", name),
            source_a=_source_from(bag, "source_a"),
            source_b=_source_from(bag, "source_b"),
            qubit_a=qubit_level_for(bag.string("source_a.qubit", "H")),
            qubit_b=qubit_level_for(bag.string("source_b.qubit", "H")),
            emit_time_ns=bag.number("emit_time_ns", 2000.0),
            memory_a=_memory_from(bag, "memory_a"),
            memory_b=_memory_from(bag, "memory_b"),
            noise_a=NoiseModel(bag.number("noise_a.sbr", math.inf),
                               bag.number("noise_a.dark_rate_cps", 0.0)),
            noise_b=NoiseModel(bag.number("noise_b.sbr", math.inf),
                               bag.number("noise_b.dark_rate_cps", 0.0)),
            filters_a=_filters_from(bag, "filter_a"),
            filters_b=_filters_from(bag, "filter_b"),
            detector_1=_detector_from(bag, "detector_1"),
            detector_2=_detector_from(bag, "detector_2"),
            roi=RoiPolicy(
                policy=bag.string("roi.policy", required=True),
                total_width_ns=bag.number("roi.total_width_ns", required=True),
                reference_width_ns=bag.number("roi.reference_width_ns", None),
            ),
            scan=ScanSpec(
                variable=bag.string("scan.variable", required=True),
                grid=bag._convert("scan.grid", _parse_grid, None, True),
            ),
            n_triggers=bag.integer("run.n_triggers", required=True),
            master_seed=bag.integer("run.master_seed", 12345),
            triggers_per_trial=bag.integer("run.triggers_per_trial", 100_000),
            overlap_scale=bag.number("run.overlap_scale", 1.0),
            save_tags=bag.boolean("run.save_tags", False),
        )
    except ScenarioParseError:
        raise
    except ValueError as exc:
        raise ScenarioParseError(str(exc))

    unknown = bag.unknown_keys()
    if unknown:
        key, lineno = unknown[0]
        raise ScenarioParseError(f"unknown key {key!r}", lineno)
    return scenario


def parse_scenario(path) -> Scenario:
    """Parse and validate a scenario file."""
    path = Path(path)
    return parse_scenario_text(path.read_text(), name=path.stem)


# ---------------------------------------------------------------------------
# serialization (canonical form; parse(serialize(s)) == s)
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    if v == math.inf:
        return "inf"
    return repr(float(v))


def _emit_source(lines: list[str], prefix: str, cfg: SourceConfig, qubit: QubitLevel) -> None:
    lines.append(f"{prefix}.pulse_fwhm_ns = {_fmt(cfg.pulse_fwhm_ns)}")
    lines.append(f"{prefix}.mean_photons = {_fmt(cfg.mean_photons)}")
    if isinstance(cfg.phase_model, SinePhaseScan):
        lines.append(f"{prefix}.phase_model = sine:{_fmt(cfg.phase_model.rate_khz)}:"
                     f"{_fmt(cfg.phase_model.depth_rad)}")
    else:
        lines.append(f"{prefix}.phase_model = uniform")
    lines.append(f"{prefix}.eom_extinction_db = {_fmt(cfg.eom_extinction_db)}")
    lines.append(f"{prefix}.dop = {_fmt(cfg.dop)}")
    lines.append(f"{prefix}.rep_rate_khz = {_fmt(cfg.rep_rate_khz)}")
    lines.append(f"{prefix}.qubit = {_LEVEL_NAME[qubit]}")


def serialize_scenario(s: Scenario) -> str:
    """Canonical text form of a scenario (round-trips through
    :func:`parse_scenario_text`)."""
    lines = [f"name = {s.name}"]
    _emit_source(lines, "source_a", s.source_a, s.qubit_a)
    _emit_source(lines, "source_b", s.source_b, s.qubit_b)
    lines.append(f"emit_time_ns = {_fmt(s.emit_time_ns)}")
    for arm, mem in (("a", s.memory_a), ("b", s.memory_b)):
        if mem is None:
            continue
        p = f"memory_{arm}"
        lines.append(f"{p}.eta_store_h = {_fmt(mem.eta_store_h)}")
        lines.append(f"{p}.eta_store_v = {_fmt(mem.eta_store_v)}")
        lines.append(f"{p}.transmission = {_fmt(mem.transmission)}")
        lines.append(f"{p}.storage_time_us = {_fmt(mem.storage_time_us)}")
        lines.append(f"{p}.retrieved_fwhm_ns = {_fmt(mem.retrieved_fwhm_ns)}")
        lines.append(f"{p}.leakage_fraction = {_fmt(mem.leakage_fraction)}")
        lines.append(f"{p}.eit_fwhm_mhz = {_fmt(mem.eit_fwhm_mhz)}")
    for arm, noise in (("a", s.noise_a), ("b", s.noise_b)):
        lines.append(f"noise_{arm}.sbr = {_fmt(noise.sbr)}")
        lines.append(f"noise_{arm}.dark_rate_cps = {_fmt(noise.dark_rate_cps)}")
    for arm, filt in (("a", s.filters_a), ("b", s.filters_b)):
        if filt is None:
            continue
        for i, et in enumerate(filt.etalons, start=1):
            lines.append(f"filter_{arm}.etalon{i}_fwhm_mhz = {_fmt(et.fwhm_mhz)}")
            lines.append(f"filter_{arm}.etalon{i}_fsr_ghz = {_fmt(et.fsr_ghz)}")
            lines.append(f"filter_{arm}.etalon{i}_loss_db = {_fmt(et.insertion_loss_db)}")
    for idx, det in (("1", s.detector_1), ("2", s.detector_2)):
        lines.append(f"detector_{idx}.efficiency = {_fmt(det.efficiency)}")
        lines.append(f"detector_{idx}.jitter_sigma_ns = {_fmt(det.jitter_sigma_ns)}")
        lines.append(f"detector_{idx}.resolution_ps = {det.resolution_ps}")
        lines.append(f"detector_{idx}.dead_time_ns = {_fmt(det.dead_time_ns)}")
    lines.append(f"roi.policy = {s.roi.policy}")
    lines.append(f"roi.total_width_ns = {_fmt(s.roi.total_width_ns)}")
    lines.append(f"roi.reference_width_ns = {_fmt(s.roi.reference_width_ns)}")
    lines.append(f"scan.variable = {s.scan.variable}")
    lines.append("scan.grid = " + ",".join(_fmt(v) for v in s.scan.grid))
    lines.append(f"run.n_triggers = {s.n_triggers}")
    lines.append(f"run.master_seed = {s.master_seed}")
    lines.append(f"run.triggers_per_trial = {s.triggers_per_trial}")
    lines.append(f"run.overlap_scale = {_fmt(s.overlap_scale)}")
    lines.append(f"run.save_tags = {'true' if s.save_tags else 'false'}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _preset_text(name: str, lineno: int | None = None) -> str:
    ref = resources.files("homsim") / "presets" / f"{name}.scn"
    if not ref.is_file():
        raise ScenarioParseError(f"unknown preset {name!r}; available: "
                                 + ", ".join(list_presets()), lineno)
    return ref.read_text()


def list_presets() -> list[str]:
    base = resources.files("homsim") / "presets"
    return sorted(p.name[:-4] for p in base.iterdir() if p.name.endswith(".scn"))


def load_preset(name: str) -> Scenario:
    """Load one of the packaged experiment presets."""
    return parse_scenario_text(_preset_text(name), name=name)
