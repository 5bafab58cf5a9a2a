"""Censored maximum-likelihood fitting of single-slope path loss models.

Losses above the receiver's censoring level are not observed; such samples
only say ``L >= censor_level``. The likelihood mixes the normal density for
observed samples with the normal upper-tail mass for censored ones
(right-censored Tobit regression on ``x = log10(d / 10)``).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm

from .errors import DataFormatError, DomainError, FitError
from .models import REFERENCE_DISTANCE_M, PathLossModel

SIGMA_FLOOR_DB = 1e-3


@dataclass(frozen=True)
class Sample:
    """One ``(distance, path loss)`` observation.

    When ``censored`` is true, ``path_loss`` holds the censoring level and the
    true loss is only known to be at least that large.
    """

    distance: float
    path_loss: float
    censored: bool = False

    def __post_init__(self):
        if not self.distance > 0:
            raise DomainError(f"sample distance must be > 0, got {self.distance}")


@dataclass(frozen=True)
class FitResult:
    a: float
    b: float
    c: float
    log_likelihood: float
    n_observed: int
    n_censored: int
    converged: bool
    iterations: int

    def to_model(self, source: str = "fit_ml") -> PathLossModel:
        return PathLossModel(self.a, self.b, self.c, source=source)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def samples_from_arrays(distance, path_loss, censored=None) -> List[Sample]:
    d = np.asarray(distance, dtype=float)
    pl = np.asarray(path_loss, dtype=float)
    cens = np.zeros(d.shape, dtype=bool) if censored is None else np.asarray(censored, dtype=bool)
    return [Sample(float(di), float(pi), bool(ci)) for di, pi, ci in zip(d, pl, cens)]


def apply_censoring(distance, path_loss, censor_level: float) -> List[Sample]:
    """Clip losses at ``censor_level`` and flag the clipped samples as censored."""
    pl = np.asarray(path_loss, dtype=float)
    cens = pl >= censor_level
    return samples_from_arrays(distance, np.where(cens, censor_level, pl), cens)


def _arrays(samples: Sequence[Sample]):
    if len(samples) == 0:
        raise DomainError("empty sample set")
    d = np.fromiter((s.distance for s in samples), float, len(samples))
    y = np.fromiter((s.path_loss for s in samples), float, len(samples))
    cens = np.fromiter((s.censored for s in samples), bool, len(samples))
    return np.log10(d / REFERENCE_DISTANCE_M), y, cens


def _check_censoring(y, cens, censor_level):
    if np.any(cens) and not np.allclose(y[cens], censor_level, rtol=0, atol=1e-9):
        raise DomainError("censored samples must carry path_loss equal to censor_level")
    over = ~cens & (y > censor_level)
    if np.any(over):
        i = int(np.flatnonzero(over)[0])
        raise DomainError(
            f"sample {i} is marked observed but its loss {y[i]:g} dB exceeds the "
            f"censoring level {censor_level:g} dB")


def _loglik(a, b, c, x, y, cens, censor_level):
    mu = a * x + b
    obs = ~cens
    ll = np.sum(norm.logpdf((y[obs] - mu[obs]) / c)) - obs.sum() * math.log(c)
    if np.any(cens):
        ll += np.sum(norm.logsf((censor_level - mu[cens]) / c))
    return float(ll)


def log_likelihood(a: float, b: float, c: float, samples: Sequence[Sample],
                   censor_level: float) -> float:
    """Censored log-likelihood of the model ``{a, b, c}`` for ``samples``."""
    if not c > 0:
        raise DomainError(f"c must be > 0, got {c}")
    x, y, cens = _arrays(samples)
    if np.any(cens) and not np.allclose(y[cens], censor_level, rtol=0, atol=1e-9):
        raise DomainError("censored samples must carry path_loss equal to censor_level")
    return _loglik(a, b, c, x, y, cens, censor_level)


def fit_ols(samples: Iterable[Sample]) -> Tuple[float, float, float]:
    """Least-squares ``(a, b, c)`` over the uncensored samples.

    ``c`` is the residual standard deviation with ``n - 2`` degrees of freedom
    (zero for exactly two samples).
    """
    observed = [s for s in samples if not s.censored]
    if len(observed) < 2:
        raise FitError(f"least squares needs >= 2 observed samples, got {len(observed)}")
    x, y, _ = _arrays(observed)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise FitError("degenerate design: all sample distances are equal")
    a = float(xc @ (y - y.mean())) / sxx
    b = float(y.mean() - a * x.mean())
    n = len(observed)
    if n == 2:
        return a, b, 0.0
    resid = y - (a * x + b)
    return a, b, math.sqrt(float(resid @ resid) / (n - 2))


def fit_ml(samples: Sequence[Sample], censor_level: float,
           init: Optional[Tuple[float, float, float]] = None, *,
           max_iter: int = 10_000, xatol: float = 1e-6) -> FitResult:
    """Maximum-likelihood ``{A, B, C}`` with right-censoring at ``censor_level``.

    Nelder-Mead over ``(a, b, log c)``, started from the observed-only least
    squares fit unless ``init`` is given. ``c`` is floored at 1e-3 dB so exact,
    noise-free data still has a finite optimum. ``converged`` is true when the
    simplex shrinks below ``xatol`` in every coordinate within ``max_iter``.
    """
    if not math.isfinite(censor_level):
        raise FitError(f"censor level must be finite, got {censor_level}")
    x, y, cens = _arrays(samples)
    _check_censoring(y, cens, censor_level)
    n_obs = int((~cens).sum())
    if n_obs < 3:
        raise FitError(f"ML fit needs >= 3 observed samples, got {n_obs}")
    if np.unique(x[~cens]).size < 2:
        raise FitError("degenerate design: observed samples span a single distance")

    if init is None:
        init = fit_ols(samples)
    a0, b0, c0 = init
    theta0 = np.array([a0, b0, math.log(max(c0, SIGMA_FLOOR_DB))])

    def neg_ll(theta):
        c = max(math.exp(theta[2]), SIGMA_FLOOR_DB)
        return -_loglik(theta[0], theta[1], c, x, y, cens, censor_level)

    # absolute step sizes keep the search equivariant to shifts of the data
    simplex = np.vstack([theta0, theta0 + [1.0, 0, 0], theta0 + [0, 1.0, 0],
                         theta0 + [0, 0, 0.1]])
    res = minimize(neg_ll, theta0, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": xatol,
                            "fatol": np.inf, "maxiter": max_iter})
    a, b, s = (float(v) for v in res.x)
    c = max(math.exp(s), SIGMA_FLOOR_DB)
    return FitResult(a=a, b=b, c=c, log_likelihood=-float(res.fun),
                     n_observed=n_obs, n_censored=int(cens.sum()),
                     converged=res.status == 0, iterations=int(res.nit))


def read_samples_csv(path) -> List[Sample]:
    """Read ``distance_m,path_loss_db,censored`` rows (header optional)."""
    samples = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if lineno == 1 and row[0].strip() == "distance_m":
                continue
            if len(row) not in (2, 3):
                raise DataFormatError(f"expected 2 or 3 columns, got {len(row)}", path, lineno)
            try:
                d, pl = float(row[0]), float(row[1])
                flag = row[2].strip() if len(row) == 3 else "0"
                if flag not in ("0", "1"):
                    raise ValueError(f"censored flag must be 0 or 1, got {flag!r}")
                samples.append(Sample(d, pl, flag == "1"))
            except ValueError as exc:
                raise DataFormatError(str(exc), path, lineno) from None
    return samples
