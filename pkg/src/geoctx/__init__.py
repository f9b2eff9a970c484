"""Finite geometric contexts, sheaves on finite sites and elementary schemes."""

from __future__ import annotations

from .category import FiniteCategory, poset_category, validate_category
from .dsl import Workspace, elaborate, load, load_file, parse, print_document
from .errors import GeoError
from .geometry import (
    Atlas,
    FiniteSpace,
    GeometricContext,
    context_from_finite_space,
    decompose,
    find_open_atlas,
    glue,
    gluing_data,
    is_elementary_scheme,
    is_geometric_sheaf,
    is_open_immersion,
    is_P_morphism_of_sheaves,
    is_schematic_morphism,
    make_context,
    scheme_fibred_product,
    scheme_product,
    validate_geometric_context,
)
from .presheaf import NatTrans, Presheaf, Sieve, Subpresheaf, yoneda, yoneda_morphism
from .report import Verdict
from .sheaves import image_factorization, is_epimorphism, is_monomorphism, sheaf_coproduct, sheaf_pushout
from .topology import Site, closure, is_covering_family, is_sheaf, sheafify

__version__ = "0.1.0"

__all__ = [
    "Atlas", "FiniteCategory", "FiniteSpace", "GeoError", "GeometricContext", "NatTrans", "Presheaf",
    "Sieve", "Site", "Subpresheaf", "Verdict", "Workspace", "closure", "context_from_finite_space",
    "decompose", "elaborate", "find_open_atlas", "glue", "gluing_data", "image_factorization",
    "is_P_morphism_of_sheaves", "is_covering_family", "is_elementary_scheme", "is_epimorphism",
    "is_geometric_sheaf", "is_monomorphism", "is_open_immersion", "is_schematic_morphism", "is_sheaf",
    "load", "load_file", "make_context", "parse", "poset_category", "print_document",
    "scheme_fibred_product", "scheme_product", "sheaf_coproduct", "sheaf_pushout", "sheafify",
    "validate_category", "validate_geometric_context", "yoneda", "yoneda_morphism",
]
