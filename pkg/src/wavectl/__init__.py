"""Boundary control and stabilization of one-dimensional wave equations."""

from .config import ConfigError, ExperimentConfig, parse_config
from .dalembert import (
    BoundaryLaw,
    CharacteristicField,
    DirichletControl,
    DirichletZero,
    NeumannControl,
    NeumannFeedback,
    SingularClosureError,
    decompose,
    eval_free,
    simulate_linear,
)
from .experiments import ExperimentError, run_experiment
from .optctrl import (
    dirichlet_exact_control,
    moving_horizon_gain,
    neumann_exact_control,
    optimized_feedback_control,
)
from .wavecore import ControlSignal, EnergyTrace, GridFunction, Trajectory, detect_jump, energy

__all__ = [
    "BoundaryLaw",
    "CharacteristicField",
    "ConfigError",
    "ControlSignal",
    "DirichletControl",
    "DirichletZero",
    "EnergyTrace",
    "ExperimentConfig",
    "ExperimentError",
    "GridFunction",
    "NeumannControl",
    "NeumannFeedback",
    "SingularClosureError",
    "Trajectory",
    "decompose",
    "detect_jump",
    "dirichlet_exact_control",
    "energy",
    "eval_free",
    "moving_horizon_gain",
    "neumann_exact_control",
    "optimized_feedback_control",
    "parse_config",
    "run_experiment",
    "simulate_linear",
]
