"""Toric fans, their symmetry semigroups, and the associated lattice statistical mechanics."""

from .fan_symmetry import LatticeMap, SymmetryData, decompose_primitive, enumerate_G, is_compatible
from .lattice_fan import Cone, Fan, OrbitLattice, load_fan, orbit_lattice, relint_image_cone, validate_fan
from .qsm_engine import (gibbs_state, partition_additive, partition_factored, partition_multiplicative,
                         riemann_zeta, torified_partition)
from .spectral_model import EnergyLaw, ScalingHom, bind_law, load_law, symmetric_norm_law

__all__ = [
    "Cone", "EnergyLaw", "Fan", "LatticeMap", "OrbitLattice", "ScalingHom", "SymmetryData",
    "bind_law", "decompose_primitive", "enumerate_G", "gibbs_state", "is_compatible", "load_fan",
    "load_law", "orbit_lattice", "partition_additive", "partition_factored",
    "partition_multiplicative", "relint_image_cone", "riemann_zeta", "symmetric_norm_law",
    "torified_partition", "validate_fan",
]
__version__ = "0.1.0"
