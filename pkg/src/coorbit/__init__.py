"""Numerical comparison of matrix dilation groups.

Decides, with finite-scale numerical evidence, whether two matrix dilation
groups generate the same scale of wavelet coorbit spaces: induced frequency
covers, word and chain metrics, weak-equivalence count trends,
quasi-isometry certificates, and decomposition/Besov norm cross-checks.
"""

from .config import RunConfig, Tolerances, artifact_version

__version__ = "0.1.0"
__all__ = ["RunConfig", "Tolerances", "artifact_version"]
