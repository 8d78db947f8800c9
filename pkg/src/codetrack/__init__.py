"""Correlation-filter visual tracking with jointly learned feature codes.

Subpackage map:

* :mod:`codetrack.fourier`  – 2-D transforms, windows, labels
* :mod:`codetrack.coding`   – codebook learning and k-NN graph Laplacian
* :mod:`codetrack.solver`   – joint codes+filter ADMM solver
* :mod:`codetrack.dcf`      – baseline dual correlation filter, responses
* :mod:`codetrack.features` – grayscale / HOG layer extraction
* :mod:`codetrack.tracker`  – full per-frame tracking pipeline
* :mod:`codetrack.metrics`  – precision / success-rate benchmark metrics
* :mod:`codetrack.bench`    – dataset ingestion and batch evaluation
* :mod:`codetrack.cli`      – command-line entry point
"""

__version__ = "0.1.0"
