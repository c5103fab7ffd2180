"""Damped-polarization quantization of the electromagnetic field in absorptive dielectrics."""
from importlib.metadata import PackageNotFoundError, version as _version

from .errors import *  # noqa: F401,F403
from .medium import CouplingKind, CouplingSpec, MediumParams, UnitSystem, kernel_laplace, memory_kernel
from .response import LaplaceResponse, kramers_kronig_residual, real_frequency_response, susceptibility
from .laplace import PoleSet, TransferFunction, find_dispersion_poles, invert_by_residues, invert_numerical
from .modes import ModeIndex, commutator_check, energy_report, evolve_coefficients, long_time_amplitude
from .langevin import LangevinProblem, fdt_residual, integrate_mean, noise_correlation
from .radreact import reaction_field_mode, vacuum_field_mode

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
