"""Portfolio credit loss distributions from copula factor models."""
from .calibrate import (
    CalibrationProblem,
    CalibrationResult,
    QuoteSet,
    TrancheQuote,
    calibrate,
    fit_recovery_mle,
    gaussian_mixture_problem,
)
from .copulas import (
    Copula,
    Family,
    MixtureCopula,
    clayton,
    frank,
    gaussian,
    gumbel,
    independence,
    joe,
    mixture,
    stochastic_correlation_copula,
    student_t,
)
from .engine import (
    LossDistribution,
    Portfolio,
    TrancheSpec,
    cdo2_pmf,
    default_count_pmf,
    joint_nl_pmf,
    loss_pmf,
    tranche_pmf,
)
from .errors import (
    CalibrationError,
    ConfigError,
    CopulaLossError,
    DataError,
    DegenerateConditioningError,
    DomainError,
    NumericError,
    ResourceError,
)
from .factor import ConstantIntensity, FactorModel, PiecewiseCurve, SpreadImplied
from .lossmodel import BernoulliLoss, BetaBinomialLoss, ConstantLoss, LossGrid, linear_bb
from .pricing import TrancheContract, price_tranches, upfront
from .quadrature import gauss_legendre_rule

__version__ = "0.1.0"

__all__ = [
    "BernoulliLoss",
    "BetaBinomialLoss",
    "calibrate",
    "CalibrationError",
    "CalibrationProblem",
    "CalibrationResult",
    "cdo2_pmf",
    "clayton",
    "ConfigError",
    "ConstantIntensity",
    "ConstantLoss",
    "Copula",
    "CopulaLossError",
    "DataError",
    "default_count_pmf",
    "DegenerateConditioningError",
    "DomainError",
    "FactorModel",
    "Family",
    "fit_recovery_mle",
    "frank",
    "gauss_legendre_rule",
    "gaussian",
    "gaussian_mixture_problem",
    "gumbel",
    "independence",
    "joe",
    "joint_nl_pmf",
    "linear_bb",
    "loss_pmf",
    "LossDistribution",
    "LossGrid",
    "mixture",
    "MixtureCopula",
    "NumericError",
    "PiecewiseCurve",
    "Portfolio",
    "price_tranches",
    "QuoteSet",
    "ResourceError",
    "SpreadImplied",
    "stochastic_correlation_copula",
    "student_t",
    "tranche_pmf",
    "TrancheContract",
    "TrancheQuote",
    "TrancheSpec",
    "upfront",
]
