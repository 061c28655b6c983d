"""qkml: quantum-kernel machine learning on a dense statevector simulator.

Subpackages cover the full pipeline: circuit simulation, data-encoding
feature maps, fidelity kernels, an SMO-trained SVM, decision-tree and
random-forest baselines, evaluation metrics, the tabular ingestion
pipeline, and a quanvolutional hybrid network.  ``qkml.cli`` exposes the
command-line entry point.
"""

__version__ = "0.1.0"

from .accel import active_backend

__all__ = ["active_backend", "__version__"]
