"""Run configuration and the central tolerance block.

Every threshold that decides a verdict lives here, so that reports can
embed the exact policy they were produced under.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

PACKAGE_NAME = "coorbit"
PACKAGE_VERSION = "0.1.0"


def artifact_version() -> str:
    """Version string embedded in every report."""
    return f"{PACKAGE_NAME}-{PACKAGE_VERSION}"


@dataclass(frozen=True)
class Tolerances:
    """Numeric thresholds; defaults are the documented desk-scale policy."""

    singular_det: float = 1e-12      # |det| below this counts as singular
    commutator: float = 1e-10        # abelian-flow generator commutation
    chart_consistency: float = 1e-9  # coords vs matrix agreement
    eig_sign: float = 1e-9           # eigenvalue sign / modulus margin
    mat_exp_rel: float = 1e-10       # exponential vs eigendecomposition
    quantize: float = 1e-8           # matrix hashing step for Cayley BFS
    ellipsoid_bisect: float = 1e-10  # ellipsoid gap bisection
    stabilization: float = 0.01      # "1% window rule" for boundedness
    qi_growth: float = 0.25          # R2 growth per window doubling
    partition_sum: float = 1e-6      # partition-of-unity sum deviation
    calderon: float = 1e-4           # post-normalization Calderon deviation
    parseval: float = 1e-8           # grid Parseval consistency
    tail_warning: float = 0.10       # frequency-tail mass warning
    linear_band_lo: float = 0.8      # growth exponent band for "linear"
    linear_band_hi: float = 1.2
    growth_residual: float = 0.1


@dataclass(frozen=True)
class RunConfig:
    """Pipeline configuration: windows, budgets, seed, grid size."""

    window: int = 8                  # base window K; trend windows are (K, 2K, 4K)
    sample_budget: int = 512         # per-pair sample budget for nonexact intersections
    coverage_budget: int = 4096      # coverage-check sample count
    support_samples: int = 256       # support-equality sample count
    seed: int = 0                    # mandatory: all sampled paths draw from this
    grid_size: int = 128             # FFT grid points per axis (power of two)
    grid_extent: float = 3.141592653589793
    with_qi: bool = False
    with_norms: bool = False
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.window < 4:
            raise ValueError("window must be >= 4")
        if self.sample_budget < 64:
            raise ValueError("sample_budget must be >= 64")
        if self.coverage_budget < 256:
            raise ValueError("coverage_budget must be >= 256")
        if self.grid_size < 8 or self.grid_size & (self.grid_size - 1):
            raise ValueError("grid_size must be a power of two >= 8")
        if self.grid_size > 256:
            raise ValueError("grid_size must be <= 256")

    @property
    def windows(self) -> tuple[int, int, int]:
        return (self.window, 2 * self.window, 4 * self.window)

    def snapshot(self) -> dict:
        """JSON-ready copy of the full configuration."""
        d = asdict(self)
        d["version"] = artifact_version()
        return d
