"""CSS4 incomputability test bench: bit sources, Z-liar scanning and KS comparison."""

__version__ = "0.1.0"

from .bitio import BitString, TritString, champernowne, chunk_to_digits, morphism_phi, read_rbf, write_rbf
from .csstest import ZScanReport, composite_profile, default_composites, scan, z_predicate
from .errors import IncbenchError, NotComposite
from .numth import euler_liars, is_carmichael, jacobi, mod_pow, solovay_strassen, ss_witness
from .stats import aggregate, ks_two_sample

__all__ = [
    "BitString",
    "TritString",
    "champernowne",
    "chunk_to_digits",
    "morphism_phi",
    "read_rbf",
    "write_rbf",
    "ZScanReport",
    "composite_profile",
    "default_composites",
    "scan",
    "z_predicate",
    "IncbenchError",
    "NotComposite",
    "euler_liars",
    "is_carmichael",
    "jacobi",
    "mod_pow",
    "solovay_strassen",
    "ss_witness",
    "aggregate",
    "ks_two_sample",
]
