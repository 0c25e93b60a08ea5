"""Casimir pressure between plates with thin metallic films, local and nonlocal."""
from .constants import EV_PER_NM3_TO_PA, HBAR_C, K_B
from .lifshitz import (
    LOCAL,
    NONLOCAL,
    ForceError,
    ForceJob,
    ForceResult,
    IdealMirror,
    PlateConfig,
    Tolerances,
    force_pp,
    force_zero_temperature,
    matsubara_frequency,
    percent_difference,
)
from .materials import ConstantDielectric, DomainError, Drude, DrudeParams, SurfaceScattering, Vacuum
from .reflection_local import Layer, LayerStack, stack_reflection
from .reflection_nonlocal import Parity, TruncationError, film_impedances

__version__ = "0.1.0"
