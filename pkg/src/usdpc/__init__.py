"""Ultrasound differential phase contrast: simulation, beamforming and DPC reconstruction."""

import warnings

__version__ = "0.1.0"

# numba probes an old system TBB before falling back to another threading layer
warnings.filterwarnings("ignore", message="The TBB threading layer")

from .acoustics import (  # noqa: F401
    AnalyticFrame,
    Medium,
    ProbeGeometry,
    RFDataSet,
    RFFrame,
    TransmitPulse,
    analytic_signal,
    element_positions,
    pulse_waveform,
)
from .beamform import BeamformGrid, ComplexImage, bmode, compound_coherent, das_beamform  # noqa: F401
from .dpc import (  # noqa: F401
    DPCImage,
    DpcParams,
    dpc_pair,
    dpc_pipeline,
    gaussian_smooth,
    predelay_frame,
    register_pair,
    shear_offset,
)
from .forward import SimulationConfig, simulate_rf, simulate_sequence  # noqa: F401
from .memory import predict_shift, track_speckle, validate_memory_effect  # noqa: F401
from .phantom import DiskInclusion, Phantom, Region, build_standard_phantoms  # noqa: F401
from .sos import excursion, integrate_transverse, linearity_fit, phase_to_delta_sos  # noqa: F401
