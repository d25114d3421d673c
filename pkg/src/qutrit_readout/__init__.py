"""Dispersive readout simulator for superconducting qubits and qutrits."""
__version__ = "0.1.0"

from .params import QutritCavityParams
from .operators import (FockConfig, build_fock_operators, build_qutrit_operators, dissipator,
                        measurement_superop, tensor)
from .lindblad import (LindbladModel, QubitDecayParams, build_composite_generator, evolve_lindblad,
                       qubit_decay_analytic, ramsey_probabilities)
from .coherent import (CavityAmplitudes, CoherenceEnvelopes, dephasing_rates, evolve_amplitudes,
                       evolve_coherences, reconstruct_composite_state, steady_state_amplitudes,
                       steady_state_dephasing, thermal_variance)
from .effective import EffectiveQutritModel, evolve_effective_state, evolve_populations
from .heterodyne import HeterodyneConfig, run_ensemble, von_neumann_entropy

__all__ = [
    "QutritCavityParams", "FockConfig", "build_fock_operators", "build_qutrit_operators",
    "dissipator", "measurement_superop", "tensor", "LindbladModel", "QubitDecayParams",
    "build_composite_generator", "evolve_lindblad", "qubit_decay_analytic",
    "ramsey_probabilities", "CavityAmplitudes", "CoherenceEnvelopes", "dephasing_rates",
    "evolve_amplitudes", "evolve_coherences", "reconstruct_composite_state",
    "steady_state_amplitudes", "steady_state_dephasing", "thermal_variance",
    "EffectiveQutritModel", "evolve_effective_state", "evolve_populations", "HeterodyneConfig",
    "run_ensemble", "von_neumann_entropy",
]
