"""Cut-and-project model sets in 2-step nilpotent Lie groups, with exact arithmetic.

Submodules: ``group`` (group laws, norms, dilations), ``scheme`` (lattices, windows,
model sets, slabs), ``complexity`` (patch census and region bounds), ``arrangements``
(regions, characteristic polynomials, incidence bounds), ``io`` and ``cli``.
"""

from .group import GroupSpec, GroupPoint, HyperplaneH, abelian, heisenberg, filiform
from .scheme import SchemeSpec, model_set_batch, slab_batch, check_flc
from .complexity import patch_census, complexity_census, good_pair_search, exponent_fit
from .arrangements import Arrangement, ConvexBody, count_regions_in_B
from .io import load_scheme, load_experiment

__version__ = "0.1.0"

__all__ = [
    "GroupSpec", "GroupPoint", "HyperplaneH", "abelian", "heisenberg", "filiform",
    "SchemeSpec", "model_set_batch", "slab_batch", "check_flc",
    "patch_census", "complexity_census", "good_pair_search", "exponent_fit",
    "Arrangement", "ConvexBody", "count_regions_in_B", "load_scheme", "load_experiment",
]
