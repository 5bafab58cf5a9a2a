"""Single-slope path loss models.

A model predicts the large-scale loss at distance ``d`` as::

    L(d) = a_slope * log10(d / ref_distance) + b_bias + N(0, c_sigma)

with the reference distance fixed at 10 m for every published model.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .errors import DomainError, OutOfValidityWarning

REFERENCE_DISTANCE_M = 10.0
CARRIER_GHZ = 26.555


class Antenna(str, enum.Enum):
    OMNIDIRECTIONAL = "omnidirectional"
    DIRECTIONAL = "directional"


class Mounting(str, enum.Enum):
    ROOFTOP = "rooftop"
    BUMPER = "bumper"
    UNDER_CHASSIS = "underchassis"


class Visibility(str, enum.Enum):
    LOS = "los"
    NLOS = "nlos"


class Environment(str, enum.Enum):
    URBAN = "urban"
    RURAL = "rural"
    FIELDS = "fields"
    SCREENS = "screens"
    FOREST = "forest"
    HOUSING = "housing"


class Blocking(str, enum.Enum):
    NONE = "none"
    ONE_CAR = "onecar"
    MULTI_CAR = "multicar"


_ALIASES = {
    Antenna: {"omni": "omnidirectional", "biconical": "omnidirectional",
              "dir": "directional", "horn": "directional"},
    Mounting: {"roof": "rooftop", "under": "underchassis",
               "under-chassis": "underchassis", "under_chassis": "underchassis",
               "chassis": "underchassis"},
    Visibility: {},
    Environment: {},
    Blocking: {"one": "onecar", "case-a": "onecar", "a": "onecar",
               "multi": "multicar", "case-b": "multicar", "b": "multicar"},
}


def parse_enum(cls, text):
    """Parse a case-insensitive enum name or one of its short aliases."""
    if isinstance(text, cls):
        return text
    token = str(text).strip().lower()
    token = _ALIASES.get(cls, {}).get(token, token)
    try:
        return cls(token)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown {cls.__name__.lower()} {text!r}; expected one of: {choices}") from None


@dataclass(frozen=True)
class ModelKey:
    """Categorical coordinates of a fitted model."""

    antenna: Antenna
    mounting: Mounting
    visibility: Visibility
    environment: Environment
    blocking: Blocking = Blocking.NONE

    def __post_init__(self):
        for field, cls in (("antenna", Antenna), ("mounting", Mounting),
                           ("visibility", Visibility), ("environment", Environment),
                           ("blocking", Blocking)):
            object.__setattr__(self, field, parse_enum(cls, getattr(self, field)))
        if self.blocking is not Blocking.NONE and self.mounting is not Mounting.BUMPER:
            raise ValueError("blocking-car classes were only measured with bumper mounts")

    @classmethod
    def parse(cls, text: str) -> "ModelKey":
        """Parse the comma-joined form, e.g. ``omni,rooftop,los,urban[,onecar]``."""
        parts = [p for p in (s.strip() for s in text.split(",")) if p]
        if len(parts) not in (4, 5):
            raise ValueError(
                f"model key {text!r} needs 4 or 5 comma-separated fields: "
                "antenna,mounting,visibility,environment[,blocking]")
        return cls(*parts)

    def format(self) -> str:
        return ",".join(getattr(self, f.name).value for f in dataclasses.fields(self))

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name).value for f in dataclasses.fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelKey":
        return cls(**{f.name: data[f.name] for f in dataclasses.fields(cls)
                      if f.name in data})


@dataclass(frozen=True)
class PathLossModel:
    """A fitted ``{A, B, C}`` triple with its reference distance and provenance.

    Attributes
    ----------
    a_slope : float
        dB per decade of distance.
    b_bias : float
        Mean loss at ``ref_distance`` in dB.
    c_sigma : float
        Shadowing standard deviation in dB.
    ref_distance : float
        Reference distance in meters.
    validity : tuple of float, optional
        ``(d_min, d_max)`` in meters over which the fit was measured.
    source : str
        Provenance label.
    """

    a_slope: float
    b_bias: float
    c_sigma: float
    ref_distance: float = REFERENCE_DISTANCE_M
    validity: Optional[Tuple[float, float]] = None
    source: str = ""

    def __post_init__(self):
        if not self.c_sigma >= 0:
            raise DomainError(f"c_sigma must be >= 0, got {self.c_sigma}")
        if not self.ref_distance > 0:
            raise DomainError(f"ref_distance must be > 0, got {self.ref_distance}")
        if self.validity is not None:
            d_min, d_max = self.validity
            if not 0 < d_min < d_max:
                raise DomainError(f"validity must satisfy 0 < d_min < d_max, got {self.validity}")
            object.__setattr__(self, "validity", (float(d_min), float(d_max)))

    def in_validity(self, d) -> bool:
        """True when every distance in ``d`` lies inside the validity range."""
        if self.validity is None:
            return True
        d = np.asarray(d, dtype=float)
        return bool(np.all((d >= self.validity[0]) & (d <= self.validity[1])))

    @property
    def extrapolated(self) -> bool:
        return "extrapolated" in self.source

    def to_dict(self) -> dict:
        d_min, d_max = self.validity if self.validity is not None else (None, None)
        return {"a": self.a_slope, "b": self.b_bias, "c": self.c_sigma,
                "ref_m": self.ref_distance, "d_min_m": d_min, "d_max_m": d_max,
                "source": self.source}

    @classmethod
    def from_dict(cls, data: dict) -> "PathLossModel":
        d_min, d_max = data.get("d_min_m"), data.get("d_max_m")
        if (d_min is None) != (d_max is None):
            raise ValueError("d_min_m and d_max_m must both be given or both be null")
        validity = None if d_min is None else (d_min, d_max)
        return cls(a_slope=data["a"], b_bias=data["b"], c_sigma=data["c"],
                   ref_distance=data.get("ref_m", REFERENCE_DISTANCE_M),
                   validity=validity, source=data.get("source", ""))


@dataclass(frozen=True)
class Unavailable:
    """Marker for a table cell that has no published value.

    Falsy, so ``model = lookup(key) or fallback`` reads naturally.
    """

    key: object = None
    reason: str = "no model published"

    def __bool__(self):
        return False


def _as_distance(d):
    arr = np.asarray(d, dtype=float)
    if not np.all(arr > 0):
        raise DomainError("distance must be > 0")
    return arr


def _unwrap(arr):
    return float(arr) if arr.ndim == 0 else arr


def _check_validity(model, arr):
    if not model.in_validity(arr):
        lo, hi = model.validity
        warnings.warn(f"distance outside model validity [{lo:g}, {hi:g}] m "
                      f"({model.source or 'unnamed model'})",
                      OutOfValidityWarning, stacklevel=3)


def evaluate_mean(model: PathLossModel, d):
    """Mean path loss in dB at distance ``d`` (scalar or array, meters).

    Distances outside ``model.validity`` still produce a value but emit an
    :class:`OutOfValidityWarning`.
    """
    arr = _as_distance(d)
    _check_validity(model, arr)
    return _unwrap(model.a_slope * np.log10(arr / model.ref_distance) + model.b_bias)


def sample_path_loss(model: PathLossModel, d, rng: Union[np.random.Generator, int, None]):
    """Mean path loss plus independent Normal(0, c_sigma) shadowing at each ``d``."""
    rng = np.random.default_rng(rng)
    arr = _as_distance(d)
    _check_validity(model, arr)
    mean = model.a_slope * np.log10(arr / model.ref_distance) + model.b_bias
    return _unwrap(mean + model.c_sigma * rng.standard_normal(arr.shape))


def tr37885_model(fc, visibility) -> PathLossModel:
    """3GPP TR 37.885 highway V2V model in single-slope form at a 10 m reference.

    ``fc`` is the carrier in GHz. The LoS model is
    ``32.4 + 20 log10(d) + 20 log10(fc)`` and the NLoS model
    ``36.85 + 30 log10(d) + 18.9 log10(fc)``; shadowing is 3 dB and 4 dB.
    """
    if not fc > 0:
        raise DomainError(f"carrier frequency must be > 0 GHz, got {fc}")
    visibility = parse_enum(Visibility, visibility)
    if visibility is Visibility.LOS:
        return PathLossModel(20.0, 32.4 + 20.0 + 20.0 * math.log10(fc), 3.0,
                             source="TR37.885-LoS")
    return PathLossModel(30.0, 36.85 + 30.0 + 18.9 * math.log10(fc), 4.0,
                         source="TR37.885-NLoS")


def rebase_reference(model: PathLossModel, new_ref: float) -> PathLossModel:
    """Same model expressed against a different reference distance."""
    if not new_ref > 0:
        raise DomainError(f"reference distance must be > 0, got {new_ref}")
    if new_ref == model.ref_distance:
        return model
    bias = model.b_bias + model.a_slope * math.log10(new_ref / model.ref_distance)
    return dataclasses.replace(model, b_bias=bias, ref_distance=float(new_ref))


def extrapolate_frequency(model: PathLossModel, f_from: float, f_to: float) -> PathLossModel:
    """Shift the bias by the free-space ``20 log10(f_to / f_from)`` term."""
    if not (f_from > 0 and f_to > 0):
        raise DomainError(f"frequencies must be > 0 GHz, got {f_from} and {f_to}")
    if f_to == f_from:
        return model
    label = f"extrapolated {f_from:g}->{f_to:g} GHz"
    source = f"{model.source}; {label}" if model.source else label
    return dataclasses.replace(model, b_bias=model.b_bias + 20.0 * math.log10(f_to / f_from),
                               source=source)
