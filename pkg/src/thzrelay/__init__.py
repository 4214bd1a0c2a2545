"""Performance analysis of dual-hop amplify-and-forward THz relay links.

The package evaluates outage probability, average BER, average SNR and an
ergodic-capacity lower bound over α-μ fading with pointing errors, each
with a closed-form path, a quadrature path and a Monte-Carlo oracle.
"""

from .channel_model import (FadingParams, LinkBudget, PointingParams, db_to_linear, dbm_to_watt,
                            linear_to_db, path_gain, pointing_from_geometry, snr_anchor,
                            watt_to_dbm)
from .errors import (DomainError, EvaluationError, ParameterError, PreconditionError,
                     ThzRelayError)
from .statistics import (DualHopModel, HopStatistics, derive_constants, e2e_cdf_min_bound,
                         e2e_pdf_min_bound, envelope_pdf, exact_af_snr, hop_snr_cdf, hop_snr_pdf)

__version__ = "0.1.0"
