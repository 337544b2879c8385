"""Product-state scars of spin-S XYZ chains and their stability theory.

The construction surface (parameters, parent couplings, textures) is
re-exported here; the physics lives in submodules:

    elliptic            Jacobi elliptic functions and complete integrals
    scars               scar textures, parent couplings, closure residuals
    rotframe            co-moving frames for the three helix families
    lattice_classical   Landau-Lifshitz integration and Lyapunov estimates
    spinwave            Holstein-Primakoff contrast on finite rings
    bogoliubov          Bloch-level stability theory and decay rates
    ed_oracle           exact diagonalization of small rings
    cli                 the `xyzscar` command-line frontend
"""

from .scars import (
    ScarParams,
    XYZCouplings,
    commensurate_q,
    energy_density,
    gz_condition_residuals,
    parent_couplings,
    scar_texture,
)

__version__ = "0.1.0"

__all__ = [
    "ScarParams",
    "XYZCouplings",
    "commensurate_q",
    "energy_density",
    "gz_condition_residuals",
    "parent_couplings",
    "scar_texture",
    "__version__",
]
