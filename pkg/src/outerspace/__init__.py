"""Exact computations in relative outer space for free products: stretch
factors, train tracks, minimally displaced sets, and limit trees."""

__version__ = "0.1.0"

from .freeprod import (EllipticElement, FPAutomorphism, FreeFactorSystem,
                       FreeLetter, FreeProductWord, GroupImage, IndexOutOfRange,
                       UnverifiedInverse, cyclic_reduce, identity_automorphism,
                       inner_automorphism, is_conjugate, is_hyperbolic, normalize)
from .marked_graph import (DecoratedLoop, DecoratedPath, FaceAtInfinity,
                           MarkedGraph, MarkedGraphError, NonPositiveScale,
                           Skeleton, build_marked_graph, fold_turn)
from .candidates import (CandidateShape, candidate_elements, candidate_shapes,
                         shape_vector)
from .lipschitz import (CertifiedValue, MinSimplexResult, displacement, is_thick,
                        min_displacement_on_simplex, points_equal, stretch,
                        sym_distance, systole)
