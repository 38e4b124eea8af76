"""Instance files, random generators, experiments and the command line."""

from .binary import TablePropagator, ValueCover
from .instances import (
    Built,
    ConLine,
    Instance,
    InstanceError,
    build_model,
    emit_instance,
    parse_instance,
    parse_text,
)
from .generators import model_b_instance, mystery_instance, roots_instance
from .experiments import EXPERIMENTS, run_experiment, write_tsv

__all__ = [
    "Built",
    "ConLine",
    "EXPERIMENTS",
    "Instance",
    "InstanceError",
    "TablePropagator",
    "ValueCover",
    "build_model",
    "emit_instance",
    "model_b_instance",
    "mystery_instance",
    "parse_instance",
    "parse_text",
    "roots_instance",
    "run_experiment",
    "write_tsv",
]
