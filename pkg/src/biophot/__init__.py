"""Quantum-optics toolkit at desk scale: coupled-mode coherence dynamics,
photon click-stream statistics, and two-qubit polarization tomography."""

__version__ = "0.1.0"
