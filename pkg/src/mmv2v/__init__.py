"""Path loss, shadowing and link-budget models for 26.555 GHz V2V links."""

__version__ = "0.1.0"

from .errors import (DataFormatError, DomainError, FitError, NoCrossingError,
                     OutOfValidityWarning, SpanLengthWarning, UndefinedEstimateError)
from .models import (Antenna, Blocking, Environment, ModelKey, Mounting, PathLossModel,
                     Unavailable, Visibility, evaluate_mean, extrapolate_frequency,
                     rebase_reference, sample_path_loss, tr37885_model)
from .registry import DEFAULT_REGISTRY, Registry, registry_lookup
from .linkbudget import (PRESETS, LinkBudget, max_measurable_pl, noise_floor,
                         range_for_model)
from .shadowing import (DecorrelationKey, ShadowingProcess, decorrelation_registry,
                        estimate_decorrelation_time)
from .estimation import FitResult, Sample, fit_ml, fit_ols, log_likelihood
from .ingestion import (MeasurementRecord, PositionFix, RawSpan, Tags, average_span,
                        filter_transitions, fuse_distance, lee_check, to_path_loss)
