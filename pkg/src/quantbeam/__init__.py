"""Low-resolution ADC receivers for mmWave cellular links.

Modules: :mod:`aqnm` (quantizer design and the effective-SINR model),
:mod:`ofdm` (single-link OFDM check), :mod:`power` (front-end budgets),
:mod:`geometry` and :mod:`system` (multicell simulation) and :mod:`cli`.
"""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
