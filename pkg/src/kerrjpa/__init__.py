"""Kerr/Duffing parametric amplifier simulator and operating-point optimizer."""

__version__ = "0.1.0"

from .calibration import FitResult, LineBudget, NoiseSample, fit_added_noise, thermal_occupancy
from .core import (
    CriticalParams,
    DeviceParams,
    SquidGeometry,
    critical_params,
    jacobian,
    kerr_constant,
    linearize,
    photon_number,
    solve_photon_number,
    steady_output,
)
from .distortion import deamp_ratio, optimal_point, phasor_sweep, principal_axes
from .exceptions import BistableError, DomainError, KerrJPAError, NumericalError
from .gain import (
    Contour,
    GainMap,
    OperatingPoint,
    direct_gain,
    gain_map,
    iso_gain_contour,
    lmg,
    locate_critical_point,
)
from .squeezing import AmpModel, LossChannel, SqueezeResult, squeezing_vs_theta

__all__ = [
    "__version__",
    "AmpModel",
    "BistableError",
    "Contour",
    "CriticalParams",
    "DeviceParams",
    "DomainError",
    "FitResult",
    "GainMap",
    "KerrJPAError",
    "LineBudget",
    "LossChannel",
    "NoiseSample",
    "NumericalError",
    "OperatingPoint",
    "SqueezeResult",
    "SquidGeometry",
    "critical_params",
    "deamp_ratio",
    "direct_gain",
    "fit_added_noise",
    "gain_map",
    "iso_gain_contour",
    "jacobian",
    "kerr_constant",
    "linearize",
    "lmg",
    "locate_critical_point",
    "optimal_point",
    "phasor_sweep",
    "photon_number",
    "principal_axes",
    "solve_photon_number",
    "squeezing_vs_theta",
    "steady_output",
    "thermal_occupancy",
]
