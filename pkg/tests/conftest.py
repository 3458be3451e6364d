"""Shared scenario builders for the test suite."""

import math

import pytest

from homsim.elements import DetectorConfig, MemoryConfig, NoiseModel, SourceConfig
from homsim.elements import qubit_level_for
from homsim.scenario import RoiPolicy, ScanSpec, Scenario


def make_scenario(**overrides) -> Scenario:
    """Source-only polarization-scan scenario with clean defaults; every
    field can be overridden by keyword."""
    source = SourceConfig(pulse_fwhm_ns=200.0, mean_photons=0.2)
    fields = dict(
        name="test",
        source_a=source,
        source_b=source,
        qubit_a=qubit_level_for("H"),
        qubit_b=qubit_level_for("H"),
        emit_time_ns=2000.0,
        memory_a=None,
        memory_b=None,
        noise_a=NoiseModel(),
        noise_b=NoiseModel(),
        filters_a=None,
        filters_b=None,
        detector_1=DetectorConfig(efficiency=0.5),
        detector_2=DetectorConfig(efficiency=0.5),
        roi=RoiPolicy("centered", 700.0),
        scan=ScanSpec("polarization_angle_deg", (0.0, 45.0, 90.0)),
        n_triggers=100_000,
        master_seed=20260810,
    )
    fields.update(overrides)
    return Scenario(**fields)


def make_memory_scenario(**overrides) -> Scenario:
    """Matched dual-memory scenario with finite SBR (delay scan)."""
    source = SourceConfig(pulse_fwhm_ns=400.0, mean_photons=10.0)
    memory = MemoryConfig(eta_store_h=0.2, eta_store_v=0.2, transmission=0.02,
                          storage_time_us=1.0, retrieved_fwhm_ns=400.0,
                          leakage_fraction=0.3)
    fields = dict(
        source_a=source,
        source_b=source,
        memory_a=memory,
        memory_b=memory,
        noise_a=NoiseModel(sbr=5.0),
        noise_b=NoiseModel(sbr=5.0),
        detector_1=DetectorConfig(efficiency=1.0),
        detector_2=DetectorConfig(efficiency=1.0),
        roi=RoiPolicy("delay_split", 800.0),
        scan=ScanSpec("delay_ns", (-1200.0, -600.0, 0.0, 600.0, 1200.0)),
    )
    fields.update(overrides)
    return make_scenario(**fields)
