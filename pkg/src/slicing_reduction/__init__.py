"""Numerical verification toolkit for the covariogram route to isotropic-constant bounds."""
__version__ = "0.1.0"

from .alpha1d import AlphaConcave1D, RadialProfile, g_function, monotonicity_suite, random_alpha_concave
from .ballbodies import (BallBodyQuery, ballbody_radial, ballbody_volume, equality_case_fingerprint,
                         inclusion_alpha_check, inclusion_logconcave_check, moment_transfer_check)
from .bodies import (AffineImage, ConvexBody, Cube, EuclideanBall, IsotropyData, RegularSimplex,
                     VPolytope, body_from_json, isotropic_normalize, isotropy_data, random_vpolytope)
from .combinatorics import catalan, dn, dn_le_sqrt2_exact, dn_table, lemma41_holds, lemma42_holds, volume_bound
from .covariogram import Covariogram
from .errors import ConfigError, DomainError
from .report import VerificationReport
from .verifier import (Theorem1Config, Theorem1Report, dn_limit_scan, symmetric_reduction_report,
                       theorem1_verify, volume_bound_check)
