"""Inversion of local binary descriptors (BRIEF and FREAK families).

Patches are described by differences of box means and their signs; the
package reconstructs patches from real measurements with a primal-dual
l1 solver and from signs with binary iterative hard thresholding.
"""
from .exceptions import (
    DescriptorTypeError, FormatError, ParameterError, PatternMismatchError, ShapeError,
)
from .pipeline import (
    DescriptorExtractor, GridMode, KeypointMode, describe_image, invert_descriptors,
    reconstruct_image,
)
from .proxops import ValidityDomain
from .sensing import (
    Descriptor, Pattern, PatternKind, adjoint, binarize, build_brief, build_freak, describe,
    forward, operator_norm, make_pattern,
)
from .solver_biht import BihtConfig, BihtReconstructor, reconstruct_binary
from .solver_pd import PdConfig, PrimalDualReconstructor, reconstruct_real

__version__ = "0.1.0"

__all__ = [
    "DescriptorTypeError", "FormatError", "ParameterError", "PatternMismatchError", "ShapeError",
    "DescriptorExtractor", "GridMode", "KeypointMode", "describe_image", "invert_descriptors",
    "reconstruct_image", "ValidityDomain", "Descriptor", "Pattern", "PatternKind", "adjoint",
    "binarize", "build_brief", "build_freak", "describe", "forward", "operator_norm",
    "make_pattern", "BihtConfig", "BihtReconstructor", "reconstruct_binary", "PdConfig",
    "PrimalDualReconstructor", "reconstruct_real",
]
