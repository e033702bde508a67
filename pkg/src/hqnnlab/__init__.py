"""Hybrid quantum-classical neural network laboratory.

Submodules:
    qsim       dense statevector simulation
    archspace  circuit/hybrid architecture space and sampling
    hybridnet  hybrid models, forward passes and gradients
    metrics    expressibility, trainability, accuracy
    data       synthetic two-class data and IDX image ingestion
    trainer    Adam training loop under the three configurations
    nas        NSGA-II multi-objective architecture search
    cli        command-line orchestration
"""

__version__ = "0.1.0"
