"""Speaker identification by hyperdimensional formant encoding.

Spectra are encoded as bipolar hypervectors through local binary patterns
and permuted N-grams, summed into per-speaker profiles in one pass,
classified by cosine similarity and optionally refined with GLVQ.
"""

from .encoder import Encoder, EncoderConfig
from .glvq import GlvqConfig, PrototypeSet
from .model import Model, load, save

__all__ = ["Encoder", "EncoderConfig", "GlvqConfig", "Model", "PrototypeSet", "load", "save"]
__version__ = "0.1.0"
