"""Cross-moments of nonlinear functions of correlated Gaussians.

Hermite projections and the Mehler series, checks of the squared-correlation
inequality with independent quadrature and Monte Carlo oracles,
conditionally i.i.d. channels, and identification of a memoryless
nonlinearity observed in additive Gaussian noise.
"""

from ._core import BACKEND
from .channels import (
    BernoulliXorChannel,
    FiniteChannel,
    GaussianChannel,
    conditional_mean,
    enumerate_expectation,
    gaussian_as_channel,
    lemma2_check,
)
from .errors import (
    ChannelError,
    DegeneracyError,
    GausscorrError,
    NonIntegrableError,
    ParityError,
    ParseError,
    PreconditionError,
)
from .functions import CORPUS, SMOOTH_CORPUS, FunctionSpec, parse_function
from .hermite import HermiteSeries, QuadratureRule, gauss_hermite_rule, hermite_eval, project, reconstruct
from .ident import (
    IdentResult,
    alpha_from_snr,
    identify_forward,
    identify_forward_oracle,
    identify_inverse,
    k1_score,
    k2_difference,
    k2_score,
    recover_scale,
)
from .inequality import (
    CorrelationReport,
    corollary_check,
    lemma1_check,
    maxcorr_bound,
    parity_of,
    proportional,
)
from .mehler import GaussianPairParams, cross_moment, cross_moment_quadrature, density
from .simulate import (
    ChainConfig,
    ChainDataset,
    estimate_moment,
    read_dataset,
    run_chain,
    sample_bivariate,
    write_dataset,
)

__version__ = "0.1.0"
