"""Simulation and analysis toolkit for sequential photonic cluster-state
generation from a precessing emitter qubit.

Subpackage map:

- :mod:`qdcluster.linalg` - dense complex linear algebra, density matrices
- :mod:`qdcluster.states` - exact states and gates of the idealized protocol
- :mod:`qdcluster.process` - the one-cycle channel, Choi algebra, fidelities
- :mod:`qdcluster.model` - physically degraded cycle from device parameters
- :mod:`qdcluster.tomography` - simulated correlations and map reconstruction
- :mod:`qdcluster.entanglement` - negativity, localizable entanglement, bounds
- :mod:`qdcluster.cli` - reproducible command-line experiments
"""

from .linalg import (
    DensityMatrix,
    partial_trace,
    partial_transpose,
    pauli_decompose,
    psd_sqrt,
    tensor_product,
)
from .states import (
    PureState,
    de_state,
    gate_G,
    ideal_cycle_isometry,
    ideal_state,
    project_qubit,
)
from .process import (
    ProcessMap,
    apply,
    apply_chain,
    choi,
    depolarizing_process_map,
    ideal_process_map,
    is_cptp,
    process_fidelity,
)
from .model import PhysicalParams, dephasing_channel, initialization_state, model_process_map
from .tomography import (
    CountRecord,
    MeasurementSetting,
    default_settings,
    predict_probability,
    project_cptp,
    reconstruct,
    simulate_counts,
)
from .entanglement import (
    LEResult,
    fidelity_states,
    fit_exponential,
    le_curve,
    localizable_entanglement,
    negativity,
    tripartite_fidelity_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix", "partial_trace", "partial_transpose", "pauli_decompose",
    "psd_sqrt", "tensor_product",
    "PureState", "de_state", "gate_G", "ideal_cycle_isometry", "ideal_state",
    "project_qubit",
    "ProcessMap", "apply", "apply_chain", "choi", "depolarizing_process_map",
    "ideal_process_map", "is_cptp", "process_fidelity",
    "PhysicalParams", "dephasing_channel", "initialization_state", "model_process_map",
    "CountRecord", "MeasurementSetting", "default_settings", "predict_probability",
    "project_cptp", "reconstruct", "simulate_counts",
    "LEResult", "fidelity_states", "fit_exponential", "le_curve",
    "localizable_entanglement", "negativity", "tripartite_fidelity_bounds",
    "__version__",
]
