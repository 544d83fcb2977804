"""Forward scattering: modal and boundary-integral solvers, data sets, noise."""
from .data import ScatterDataSet, SolverError, add_noise, generate_dataset, modal_solution, read_dataset, write_dataset
from .mie import (
    AliasingError,
    ModalSolution,
    SingularConfigurationError,
    default_m_max,
    far_field,
    far_field_power,
    mie_eval_incident,
    mie_eval_scattered,
    mie_project_incident,
    mie_solve,
)
from .nystrom import NystromSystem, ResonanceError, nystrom_solve

__all__ = [
    "ScatterDataSet",
    "SolverError",
    "add_noise",
    "generate_dataset",
    "modal_solution",
    "read_dataset",
    "write_dataset",
    "AliasingError",
    "ModalSolution",
    "SingularConfigurationError",
    "default_m_max",
    "far_field",
    "far_field_power",
    "mie_eval_incident",
    "mie_eval_scattered",
    "mie_project_incident",
    "mie_solve",
    "NystromSystem",
    "ResonanceError",
    "nystrom_solve",
]
