"""Locally stationary basis (LSB) time series models.

Parameter curves ``theta(u) = h(w(u)' beta)`` on rescaled time drive white
noise, AR, Exp and fractionally differenced families. The package fits
them by exact or block Whittle likelihood, computes Fisher information
and curve bands, tests stationarity, selects models by NIC, simulates
and forecasts.
"""

__version__ = "0.1.0"

from .basis import (BasisKind, BasisSet, DomainError, LinkFunction, LinkKind,  # noqa: E402
                    ParameterCurveSpec, curve_gradient, eval_basis, eval_curve)
from .estimation import FitResult, default_start, fit  # noqa: E402
from .forecasting import Forecast, forecast  # noqa: E402
from .inference import (CurveBand, FisherInfo, RankError, coefficient_ses,  # noqa: E402
                        curve_band, fisher_info)
from .kernels import BACKEND, CovarianceNotPD  # noqa: E402
from .levinson import (DenseCovariance, PredictionState, build_dense_cov,  # noqa: E402
                       innovations_exact, tv_ld_step)
from .likelihood import (ExactLikConfig, WhittleConfig, default_blocks,  # noqa: E402
                         exact_nll, local_periodogram, whittle_nll)
from .models import (Family, LsbModelSpec, PoleError, acvf_quadrature_oracle,  # noqa: E402
                     ar_model, exp_model, fd_model, local_acvf, lsbar1_design, pacf_to_ar,
                     preset, sdf, transfer, validate, white_noise)
from .optimize import OptimConfig, OptimResult, minimize  # noqa: E402
from .selection import NicGrid, grid_search, nic, windowed_stats  # noqa: E402
from .simulation import SimConfig, derive_seed, simulate  # noqa: E402
from .stationarity import TestResult, chisq_sf, test_stationarity  # noqa: E402
