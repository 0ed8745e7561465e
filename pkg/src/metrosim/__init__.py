"""Fisher-information bounds for parameter estimation with two-qubit probes
under local dephasing."""

from .model import (HamiltonianSpec, Kind, MeasurementFamily, MeasurementParams, Param,
                    ProbeFamily, ProbeParams, build_hamiltonian, build_measurement,
                    build_probe, concurrence_of_probe)
from .estimation import ExperimentConfig, FisherResult, measured_fi, qfi, uncertainty_bound
from .optimize import OptimizationTask, Optimum, minimize, scan_alpha, scan_time

__version__ = "0.1.0"
