"""Named scenarios: the in-air calibration, the two precharged tests, sweeps."""
from __future__ import annotations

from dataclasses import replace

from .driver import HydrogenConfig, ScenarioConfig

H1_C_TOTAL = 31.5     # mol/m3, 4 wt-ppm
H2_C_TOTAL = 126.0    # mol/m3, 16 wt-ppm
SWEEP_C_TOTAL = H1_C_TOTAL
CREL_VALUES = (0.0, 0.25, 0.5, 0.75, 1.0)
B_VALUES = (0.0, 1.0e-3, 2.0e-3, 3.0e-3, 4.0e-3)   # m3/mol


def in_air() -> ScenarioConfig:
    return ScenarioConfig()


def charged(C_total: float) -> ScenarioConfig:
    return replace(in_air(), hydrogen=HydrogenConfig(C_total=C_total))


def h1() -> ScenarioConfig:
    return charged(H1_C_TOTAL)


def h2() -> ScenarioConfig:
    return charged(H2_C_TOTAL)


def sweep_base() -> ScenarioConfig:
    return charged(SWEEP_C_TOTAL)


SCENARIOS = {"in-air": in_air, "h1": h1, "h2": h2}
SWEEPS = {"sweep-crel": ("C_rel", CREL_VALUES), "sweep-b": ("B", B_VALUES)}
PRESET_NAMES = tuple(SCENARIOS) + tuple(SWEEPS) + ("validate-point",)
