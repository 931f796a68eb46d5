"""Measurement-state and two-photon interferometry simulator."""

from .measure import ApparatusSpec, premeasure, run_cat_scenario
from .optics import PhaseSettings, calibrate, correlation, marginals, rto_joint_probs
from .qstate import (
    DensityOperator,
    PureState,
    SubsystemLayout,
    densify,
    measurement_state,
    partial_trace,
    purity,
    schmidt,
    von_neumann_entropy,
)
from .streams import Rng

__version__ = "0.1.0"
