"""Gear fault diagnosis from scale-level features of wavelet coefficients.

The processing chain is signal, optional empirical mode decomposition, real
Morlet CWT, per-frame scale selection, scale histograms and a one-versus-all
linear SVM.
"""

from .cwt import ScaleGrid, Scalogram, WaveletParams, cwt, scale_for_frequency
from .emd import ImfSet, SiftConfig, decompose, extract_imf
from .errors import GearScaleError
from .features import FeatureVector, FrameObjective, ScaleTrace, scale_distribution, select_scales, signal_features
from .signal import Signal, generate_example1, generate_example2, generate_gear_dataset, load_signal
from .svm import MulticlassModel, train_binary, train_ova

__version__ = "0.1.0"
