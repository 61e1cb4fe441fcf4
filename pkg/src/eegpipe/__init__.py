"""eegpipe: batch EEG feature extraction and classification toolkit.

Signal path: multichannel recordings -> drift/line-noise removal -> five-band
decomposition -> windowed band-power matrices, Morlet scalograms, and
magnitude-squared coherence -> per-subject feature tables -> a small
cross-validated ML harness (naive Bayes, logistic regression, kNN, linear
regression).
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
