"""Staggered deformation/diffusion simulation of the round-bar tensile test."""
from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .fem.mechanics import EquilibriumError, MechanicsSolver, SolverSettings
from .fem.mesh import Mesh, build_round_bar_mesh
from .fem.transport import TransportSolver, TransportState
from .gurson import GursonParams
from .tensor import ElasticConstants
from .traps import TrapParams, hydrogen_strain_field, total_to_lattice

log = logging.getLogger(__name__)

HYDROGEN_MEASURES = ("lattice", "lattice_plus_traps")
FAILURE_RULES = ("both", "band", "load_drop")
SWEEP_AXES = ("C_rel", "B", "C_total")
LOAD_DROP_FRACTION = 0.5
WORKERS_ENV = "NVCDAMAGE_WORKERS"

# Frozen calibration. The in-air curve fixes the mesh (e_f) and does not
# constrain fc/fF; the coalescence onset was set from the H1 elongation.
CALIBRATED_FC = 0.30
CALIBRATED_FF = 0.40


def calibrated_gurson() -> GursonParams:
    return GursonParams(fc=CALIBRATED_FC, fF=CALIBRATED_FF)


@dataclass(frozen=True)
class GeometryConfig:
    radius: float = 1.5875e-3   # m
    gage: float = 25.4e-3       # full gage length, m

    def __post_init__(self):
        if not (self.radius > 0.0 and self.gage > 0.0):
            raise ValueError("geometry must be positive")


@dataclass(frozen=True)
class MeshConfig:
    nr: int = 16
    nz: int = 20
    delta_R_fraction: float = 0.005
    grading: float = 3.0

    def __post_init__(self):
        if self.nr < 2 or self.nz < 2:
            raise ValueError("nr and nz must be >= 2")
        if not 0.0 <= self.delta_R_fraction < 0.1:
            raise ValueError("delta_R_fraction must lie in [0, 0.1)")
        if self.grading < 1.0:
            raise ValueError("grading must be >= 1")


@dataclass(frozen=True)
class HydrogenConfig:
    C_total: float = 0.0                    # mol/m3, homogeneous precharge
    measure: str = "lattice_plus_traps"     # concentration seen by the material
    softening: bool = True
    h_nucleation: bool = True

    def __post_init__(self):
        if self.C_total < 0.0:
            raise ValueError("C_total must be non-negative")
        if self.measure not in HYDROGEN_MEASURES:
            raise ValueError(f"measure must be one of {HYDROGEN_MEASURES}")


@dataclass(frozen=True)
class RunConfig:
    strain_rate: float = 1.0e-5    # 1/s
    dt: float = 100.0              # s
    max_eng_strain: float = 0.4
    output_every: int = 1
    failure_rule: str = "both"

    def __post_init__(self):
        if not self.strain_rate > 0.0:
            raise ValueError("strain_rate must be positive")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.dt * self.strain_rate > 1.0e-3 * (1.0 + 1e-12):
            raise ValueError("dt * strain_rate must not exceed 1e-3")
        if not self.max_eng_strain > 0.0:
            raise ValueError("max_eng_strain must be positive")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")
        if self.failure_rule not in FAILURE_RULES:
            raise ValueError(f"failure_rule must be one of {FAILURE_RULES}")


@dataclass(frozen=True)
class ScenarioConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    elastic: ElasticConstants = field(default_factory=ElasticConstants)
    gurson: GursonParams = field(default_factory=calibrated_gurson)
    traps: TrapParams = field(default_factory=TrapParams)
    hydrogen: HydrogenConfig = field(default_factory=HydrogenConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def material(self) -> GursonParams:
        """Constitutive parameters with disabled mechanisms switched off."""
        g = self.gurson
        if not self.hydrogen.softening:
            g = g.with_(Cc=math.inf)
        if not self.hydrogen.h_nucleation:
            g = g.with_(B=0.0)
        return g

    def build_mesh(self) -> Mesh:
        m = self.mesh
        return build_round_bar_mesh(self.geometry.radius, 0.5 * self.geometry.gage,
                                    m.delta_R_fraction, m.nr, m.nz, m.grading)


@dataclass
class TensileRecord:
    """Output time series; stress in Pa, lengths in m, hydrogen in mol."""
    time: list[float] = field(default_factory=list)
    eng_strain: list[float] = field(default_factory=list)
    eng_stress: list[float] = field(default_factory=list)
    neck_radius: list[float] = field(default_factory=list)
    max_f: list[float] = field(default_factory=list)
    max_epbar: list[float] = field(default_factory=list)
    CL_center: list[float] = field(default_factory=list)
    total_H: list[float] = field(default_factory=list)
    failed: bool = False
    e_f: float | None = None
    failure_reason: str = ""
    wall_time: float = 0.0
    max_H_cv: float = 0.0
    peak_stress: float = 0.0   # over every increment, not only output rows

    def __len__(self) -> int:
        return len(self.time)

    def append(self, **row) -> None:
        for k, v in row.items():
            getattr(self, k).append(float(v))
        self.peak_stress = max(self.peak_stress, self.eng_stress[-1])

    @property
    def uts(self) -> float:
        return self.peak_stress

    @property
    def final_strain(self) -> float:
        """``e_f`` if failure was detected, otherwise the last strain reached."""
        if self.e_f is not None:
            return self.e_f
        return self.eng_strain[-1] if self.eng_strain else 0.0


@dataclass
class FailureStatus:
    failed: bool
    e_f: float | None = None
    reason: str = ""


def detect_failure(fail_flags: np.ndarray, mesh: Mesh, record: TensileRecord,
                   rule: str = "both") -> FailureStatus:
    """Check for specimen failure after the latest recorded increment.

    ``fail_flags`` is a boolean (n_el, 4) array of failed Gauss points.
    Rule ``band``: every element of the mid-plane row holds a failed point.
    Rule ``load_drop``: engineering stress below half of the running maximum.
    """
    if rule not in FAILURE_RULES:
        raise ValueError(f"unknown failure rule {rule!r}")
    if len(record) == 0:
        return FailureStatus(False)
    strain = record.eng_strain[-1]
    if rule in ("both", "band"):
        row = np.asarray(fail_flags)[mesh.midplane_elements()]
        if row.any(axis=1).all():
            return FailureStatus(True, strain, "failed band across the mid-plane ligament")
    if rule in ("both", "load_drop"):
        if record.eng_stress[-1] < LOAD_DROP_FRACTION * record.uts:
            return FailureStatus(True, strain, "load dropped below half of the UTS")
    return FailureStatus(False)


class SolverFailure(RuntimeError):
    """Mechanical solve failed before the specimen was judged failed."""


class TensileSimulation:
    """Holds the coupled state; :meth:`advance` performs one staggered step."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.mesh = config.build_mesh()
        self.material = config.material()
        self.mech = MechanicsSolver(self.mesh, self.material, config.elastic, SolverSettings())
        self.transport = TransportSolver(self.mesh, config.traps)
        self.tp = config.traps.pack()
        CL0 = total_to_lattice(config.hydrogen.C_total, 0.0, config.traps)
        self.H = self.transport.initial_state(self.mesh.nodes, CL0)
        self.CH = self._material_hydrogen(self.H)
        self.eH = np.zeros_like(self.CH)
        self.time = 0.0
        self.step_count = 0
        self.half_gage = 0.5 * config.geometry.gage
        self.area0 = math.pi * config.geometry.radius ** 2
        self.neck_node = self.mesh.node_id(self.mesh.nr, 0)
        self.center_node = self.mesh.node_id(0, 0)

    def _material_hydrogen(self, H: TransportState) -> np.ndarray:
        CL, CT, _NT = self.transport.gauss_point_values(H, self.mech.state.ep)
        if self.config.hydrogen.measure == "lattice":
            return CL
        return CL + CT

    def hydrogen_cv(self) -> float:
        """Volume-weighted coefficient of variation of C_L + C_T."""
        tot = self.H.C_L + self.H.C_T
        m = self.H.mass
        mean = np.dot(m, tot) / m.sum()
        if mean <= 0.0:
            return 0.0
        return float(math.sqrt(np.dot(m, (tot - mean) ** 2) / m.sum()) / mean)

    def advance(self) -> float:
        """One increment: mechanics at frozen hydrogen, then transport.

        Returns the engineering stress in Pa.
        """
        cfg = self.config
        dt = cfg.run.dt
        du = cfg.run.strain_rate * dt * self.half_gage
        Fint = self.mech.solve_increment(du, self.CH, self.eH)
        st = self.mech.state
        sigma_kk = st.sig[:, :, :3].sum(axis=2)
        self.H = self.transport.step(self.H, st.X, sigma_kk, st.ep, dt)
        CH_new = self._material_hydrogen(self.H)
        # lagged dilatation: applied with the next mechanical increment
        self.eH = hydrogen_strain_field(CH_new - self.CH, CH_new, cfg.traps)
        self.CH = CH_new
        self.time += dt
        self.step_count += 1
        return self.mech.reaction(Fint) / self.area0

    def record_row(self, record: TensileRecord, stress: float) -> None:
        st = self.mech.state
        record.append(
            time=self.time,
            eng_strain=self.config.run.strain_rate * self.time,
            eng_stress=stress,
            neck_radius=st.X[self.neck_node, 0],
            max_f=st.f.max(),
            max_epbar=st.ep.max(),
            CL_center=self.H.C_L[self.center_node],
            total_H=self.H.total,
        )

    def failed_points(self) -> np.ndarray:
        return self.mech.state.fail > 0

    def coalescing(self) -> bool:
        """Any point past coalescence onset (softening faster than hardening)."""
        return bool((self.mech.state.f >= self.material.fc).any() or self.failed_points().any())


def run_tensile(config: ScenarioConfig) -> TensileRecord:
    """Simulate the tensile test until failure or ``max_eng_strain``."""
    t0 = time.perf_counter()
    sim = TensileSimulation(config)
    run = config.run
    record = TensileRecord()
    probe = TensileRecord()  # every increment, for failure detection
    n_steps = int(round(run.max_eng_strain / (run.strain_rate * run.dt)))
    cv = sim.hydrogen_cv()
    for k in range(n_steps):
        try:
            stress = sim.advance()
        except EquilibriumError as exc:
            if sim.coalescing():
                record.failed = True
                record.e_f = sim.config.run.strain_rate * sim.time
                record.failure_reason = "equilibrium lost after void coalescence"
                log.info("solver breakdown after material failure at e = %.4f", record.e_f)
                if len(record) == 0 or record.time[-1] != sim.time:
                    sim.record_row(record, probe.eng_stress[-1] if len(probe) else 0.0)
                break
            raise SolverFailure(
                f"increment {k + 1} (eng. strain {run.strain_rate * (sim.time + run.dt):.4f}): {exc}"
            ) from exc
        cv = max(cv, sim.hydrogen_cv())
        sim.record_row(probe, stress)
        status = detect_failure(sim.failed_points(), sim.mesh, probe, run.failure_rule)
        if (k + 1) % run.output_every == 0 or status.failed or k == n_steps - 1:
            sim.record_row(record, stress)
        if status.failed:
            record.failed = True
            record.e_f = status.e_f
            record.failure_reason = status.reason
            break
    record.peak_stress = max(record.peak_stress, probe.peak_stress)
    record.max_H_cv = cv
    record.wall_time = time.perf_counter() - t0
    return record


# -- sweeps -------------------------------------------------------------------

def sweep_config(base: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    """Configuration for one sweep point.

    ``C_rel`` sets ``Cc = C_total / C_rel`` with hydrogen nucleation off,
    ``B`` sets the nucleation coefficient with softening off, ``C_total``
    changes the precharge only.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    h = base.hydrogen
    if axis == "C_rel":
        if not 0.0 <= value <= 1.0:
            raise ValueError("C_rel values must lie in [0, 1]")
        if h.C_total <= 0.0:
            raise ValueError("a C_rel sweep needs a positive C_total")
        Cc = math.inf if value == 0.0 else h.C_total / value
        return replace(base, gurson=base.gurson.with_(Cc=Cc),
                       hydrogen=replace(h, softening=value > 0.0, h_nucleation=False))
    if axis == "B":
        if value < 0.0:
            raise ValueError("B must be non-negative")
        return replace(base, gurson=base.gurson.with_(B=value),
                       hydrogen=replace(h, softening=False, h_nucleation=True))
    return replace(base, hydrogen=replace(h, C_total=value))


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    if raw.strip():
        n = int(raw)
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1")
        return n
    return max(1, min(os.cpu_count() or 1, 4))


def sweep(base: ScenarioConfig, axis: str, values, workers: int | None = None) -> list[TensileRecord]:
    """One record per value, in the order given."""
    configs = [sweep_config(base, axis, float(v)) for v in values]
    if not configs:
        return []
    workers = worker_count() if workers is None else workers
    if workers == 1 or len(configs) == 1:
        return [run_tensile(c) for c in configs]
    with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
        return list(pool.map(run_tensile, configs))
