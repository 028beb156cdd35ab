"""Simulation toolkit for secure mmWave beamforming with quantized phased arrays.

Subpackages cover coordinate geometry, planar/linear array responses and the
quantized DFT codebook, the circulant-shift defense and its exact phase-noise
law, an antenna-subset-modulation baseline, link-level Monte-Carlo SER, and a
finite-horizon trajectory attack for an airborne eavesdropper.
"""

__version__ = "0.1.0"

from . import geometry
from . import array
from . import csb_defense
from . import asm_baseline
from . import channel_sim
from . import airspy

__all__ = [
    "geometry",
    "array",
    "csb_defense",
    "asm_baseline",
    "channel_sim",
    "airspy",
    "__version__",
]
