"""Temporally correlated log-normal shadowing.

Shadowing follows an exponential (Gudmundson) autocorrelation
``R(tau) = sigma**2 * exp(-|tau| / t_d)``, which sampled every ``dt`` seconds
is exactly a first-order autoregression with coefficient
``rho = exp(-dt / t_d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError, NoCrossingError, UndefinedEstimateError
from .models import Mounting, Unavailable, parse_enum

INV_E = math.exp(-1.0)


class ShadowingProcess:
    """Stateful correlated shadowing generator.

    Parameters
    ----------
    sigma : float
        Marginal standard deviation in dB.
    t_d : float
        Decorrelation time in seconds: lag at which the autocorrelation is 1/e.
    dt : float
        Step interval in seconds.
    rng : numpy Generator or seed, optional
        Used to draw the initial state from Normal(0, sigma) when ``state``
        is not given.
    state : float, optional
        Explicit initial state in dB.
    """

    def __init__(self, sigma: float, t_d: float, dt: float, rng=None, state=None):
        if not sigma >= 0:
            raise DomainError(f"sigma must be >= 0, got {sigma}")
        if not (t_d > 0 and math.isfinite(t_d)):
            raise DomainError(f"t_d must be a finite positive time, got {t_d}")
        if not (dt > 0 and math.isfinite(dt)):
            raise DomainError(f"dt must be a finite positive time, got {dt}")
        self.sigma = float(sigma)
        self.t_d = float(t_d)
        self.dt = float(dt)
        if state is None:
            state = self.sigma * np.random.default_rng(rng).standard_normal()
        self.state = float(state)

    @property
    def rho(self) -> float:
        return math.exp(-self.dt / self.t_d)

    def __repr__(self):
        return (f"ShadowingProcess(sigma={self.sigma}, t_d={self.t_d}, "
                f"dt={self.dt}, state={self.state})")

    def step(self, rng: Union[np.random.Generator, int, None]) -> float:
        """Advance one interval and return the new shadowing value in dB."""
        rho = self.rho
        innovation = self.sigma * np.random.default_rng(rng).standard_normal()
        self.state = rho * self.state + math.sqrt(1.0 - rho * rho) * innovation
        return self.state

    def generate(self, n: int, rng: Union[np.random.Generator, int, None]) -> np.ndarray:
        """Advance ``n`` intervals at once.

        Consumes the random stream exactly like ``n`` consecutive
        :meth:`step` calls with the same generator, and yields the same values.
        """
        if n < 0:
            raise DomainError(f"n must be >= 0, got {n}")
        rng = np.random.default_rng(rng)
        if n == 0:
            return np.empty(0)
        rho = self.rho
        drive = math.sqrt(1.0 - rho * rho) * self.sigma * rng.standard_normal(n)
        out, _ = lfilter([1.0], [1.0, -rho], drive, zi=[rho * self.state])
        self.state = float(out[-1])
        return out


def autocorrelation(series) -> np.ndarray:
    """Biased, normalized autocorrelation ``r(k)`` for ``k = 0 .. N-1``.

    The series is mean-removed first; ``r(0) == 1``.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise DomainError("series must be one-dimensional")
    if x.size == 0 or np.ptp(x) == 0:
        raise UndefinedEstimateError("series has zero variance; autocorrelation undefined")
    x = x - x.mean()
    n = x.size
    nfft = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(spec * np.conj(spec), nfft)[:n] / n
    if not acov[0] > 0:
        raise UndefinedEstimateError("series has zero variance; autocorrelation undefined")
    return acov / acov[0]


def crossing_lag(series, max_lag: Optional[int] = None) -> float:
    """Fractional lag at which the autocorrelation first drops below 1/e.

    Only lags up to ``max_lag`` (default: all) are searched.
    """
    x = np.asarray(series, dtype=float)
    if x.size < 10:
        raise DomainError(f"series needs at least 10 samples, got {x.size}")
    r = autocorrelation(x)
    if max_lag is not None:
        if max_lag < 1:
            raise DomainError(f"max_lag must be >= 1, got {max_lag}")
        r = r[:max_lag + 1]
    below = np.flatnonzero(r < INV_E)
    if below.size == 0:
        raise NoCrossingError(
            f"autocorrelation stays above 1/e up to lag {r.size - 1}", max_lag=r.size - 1)
    k = int(below[0])
    # r[0] == 1 so k >= 1; interpolate between lags k-1 and k
    return (k - 1) + (r[k - 1] - INV_E) / (r[k - 1] - r[k])


def estimate_decorrelation_time(series, dt: float, max_lag: Optional[int] = None) -> float:
    """Decorrelation time in seconds from a uniformly sampled shadowing series."""
    if not dt > 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    return crossing_lag(series, max_lag) * dt


@dataclass(frozen=True)
class DecorrelationKey:
    """Mounting point and quantized speed classes (m/s)."""

    mounting: Mounting
    v_rx: float
    v_rel: float

    def __post_init__(self):
        object.__setattr__(self, "mounting", parse_enum(Mounting, self.mounting))
        if self.mounting not in (Mounting.ROOFTOP, Mounting.BUMPER):
            raise DomainError("decorrelation times exist for rooftop and bumper mounts only")
        if self.v_rx not in RX_SPEED_CLASSES:
            raise DomainError(f"v_rx={self.v_rx} m/s is off the grid {RX_SPEED_CLASSES}")
        if self.v_rel not in REL_SPEED_CLASSES:
            raise DomainError(f"v_rel={self.v_rel} m/s is off the grid {REL_SPEED_CLASSES}")


RX_SPEED_CLASSES = (0, 10, 20)
REL_SPEED_CLASSES = (0, 2, 4)

# rows: v_rx in RX_SPEED_CLASSES; columns: v_rel in REL_SPEED_CLASSES; omnidirectional antennas
_TABLE_2 = {
    Mounting.ROOFTOP: [
        [14.57, None, 22.44],
        [1.09, 1.00, 4.91],
        [1.66, 2.64, 9.04]],
    Mounting.BUMPER: [
        [128.02, None, None],
        [1.41, 2.21, 5.34],
        [4.40, 4.37, 3.07]],
}


def decorrelation_registry(key: DecorrelationKey) -> Union[float, Unavailable]:
    """Published decorrelation time in seconds, or :class:`Unavailable`."""
    row = RX_SPEED_CLASSES.index(key.v_rx)
    col = REL_SPEED_CLASSES.index(key.v_rel)
    value = _TABLE_2[key.mounting][row][col]
    return Unavailable(key, "Table 2 cell marked '--'") if value is None else value
