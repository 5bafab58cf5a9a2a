"""Registry of the published 26.555 GHz V2V path loss models.

Lookup canonicalizes keys before matching:

* blocking-car models were measured on the highway with bumper mounts only,
  so visibility and environment are ignored when ``blocking`` is set;
* under-chassis models are published without an antenna type, so both
  antenna labels resolve to the same entry.
"""

from __future__ import annotations

import json
from typing import Dict, Iterable, Iterator, List, Tuple, Union

from .models import (Antenna, Blocking, Environment, ModelKey, Mounting,
                     PathLossModel, Unavailable, Visibility)

_ENV_ORDER = (Environment.URBAN, Environment.RURAL, Environment.FIELDS,
              Environment.SCREENS, Environment.FOREST, Environment.HOUSING)

# (antenna, mounting, visibility) -> one triple per environment in _ENV_ORDER.
_TABLE_1 = {
    (Antenna.OMNIDIRECTIONAL, Mounting.ROOFTOP, Visibility.LOS): [
        (22.4, 82.1, 3.7), (20.0, 82.3, 4.1), (19.4, 82.6, 3.9),
        (23.1, 79.9, 5.3), (17.6, 83.8, 3.9), (22.9, 82.1, 3.6)],
    (Antenna.OMNIDIRECTIONAL, Mounting.ROOFTOP, Visibility.NLOS): [
        (33.2, 74.7, 5.5), (20.4, 84.0, 5.4), (20.5, 84.7, 5.0),
        (21.7, 80.4, 4.6), (21.2, 82.7, 6.0), (35.2, 72.4, 5.8)],
    (Antenna.OMNIDIRECTIONAL, Mounting.BUMPER, Visibility.LOS): [
        (25.1, 79.9, 5.2), (19.4, 84.9, 5.9), (24.6, 80.6, 5.3),
        (19.6, 81.7, 3.8), None, (29.9, 80.3, 3.8)],
    (Antenna.OMNIDIRECTIONAL, Mounting.BUMPER, Visibility.NLOS): [
        (14.5, 93.0, 4.1), (18.6, 87.7, 4.9), (14.5, 92.9, 4.6),
        (28.0, 76.5, 4.0), None, None],
    (Antenna.DIRECTIONAL, Mounting.ROOFTOP, Visibility.LOS): [
        (15.0, 80.6, 8.9), (13.9, 86.4, 7.8), (11.8, 86.8, 9.2),
        (15.5, 84.0, 3.7), (11.7, 88.6, 4.5), (13.8, 80.4, 9.2)],
    (Antenna.DIRECTIONAL, Mounting.ROOFTOP, Visibility.NLOS): [
        None, (16.9, 90.1, 6.4), (20.1, 87.4, 6.8),
        (24.4, 77.7, 4.9), None, None],
    (Antenna.DIRECTIONAL, Mounting.BUMPER, Visibility.LOS): [
        None, (5.2, 94.1, 9.1), (16.2, 93.5, 6.4), None, None, None],
    (Antenna.DIRECTIONAL, Mounting.BUMPER, Visibility.NLOS): [
        None, (16.2, 93.5, 6.4), (17.3, 92.4, 6.2), None, None, None],
}

_UNDER_CHASSIS_LOS = [
    (36.9, 91.7, 3.3), (22.1, 95.3, 3.4), (23.9, 94.1, 3.8),
    (20.9, 94.5, 3.7), None, None]

# (antenna, blocking) -> (triple, validity range)
_BLOCKING = {
    (Antenna.OMNIDIRECTIONAL, Blocking.ONE_CAR): ((12.5, 92.8, 4.1), (30.0, 50.0)),
    (Antenna.OMNIDIRECTIONAL, Blocking.MULTI_CAR): ((12.0, 94.8, 3.9), (100.0, 200.0)),
    (Antenna.DIRECTIONAL, Blocking.ONE_CAR): ((1.5, 104.3, 5.1), (30.0, 50.0)),
    (Antenna.DIRECTIONAL, Blocking.MULTI_CAR): ((6.9, 106.5, 5.6), (100.0, 200.0)),
}

Entry = Tuple[ModelKey, Union[PathLossModel, Unavailable]]


def canonical_key(key: ModelKey) -> ModelKey:
    """Map a key onto the coordinates under which its model is stored."""
    if key.blocking is not Blocking.NONE:
        return ModelKey(key.antenna, Mounting.BUMPER, Visibility.NLOS,
                        Environment.RURAL, key.blocking)
    if key.mounting is Mounting.UNDER_CHASSIS:
        return ModelKey(Antenna.OMNIDIRECTIONAL, Mounting.UNDER_CHASSIS,
                        key.visibility, key.environment)
    return key


def _published_entries() -> List[Entry]:
    entries: List[Entry] = []
    for (antenna, mounting, visibility), row in _TABLE_1.items():
        for env, triple in zip(_ENV_ORDER, row):
            key = ModelKey(antenna, mounting, visibility, env)
            tag = "Table 1" if triple else "Table 1 (unavailable)"
            entries.append((key, PathLossModel(*triple, source=tag) if triple
                            else Unavailable(key, tag)))
    for env, triple in zip(_ENV_ORDER, _UNDER_CHASSIS_LOS):
        key = ModelKey(Antenna.OMNIDIRECTIONAL, Mounting.UNDER_CHASSIS, Visibility.LOS, env)
        entries.append((key, PathLossModel(*triple, source="Under-chassis LOS") if triple
                        else Unavailable(key, "no under-chassis model for this surrounding")))
    for (antenna, blocking), (triple, validity) in _BLOCKING.items():
        case = "A" if blocking is Blocking.ONE_CAR else "B"
        key = ModelKey(antenna, Mounting.BUMPER, Visibility.NLOS, Environment.RURAL, blocking)
        entries.append((key, PathLossModel(*triple, validity=validity,
                                           source=f"Blocking cars, Case {case}")))
    return entries


class Registry:
    """Immutable mapping from model keys to published models.

    Iteration yields ``(key, model_or_unavailable)`` pairs in a stable order.
    """

    def __init__(self, entries: Iterable[Entry]):
        table: Dict[ModelKey, Union[PathLossModel, Unavailable]] = {}
        for key, model in entries:
            ckey = canonical_key(key)
            if ckey in table:
                raise ValueError(f"duplicate registry key {ckey.format()}")
            table[ckey] = model if model is not None else Unavailable(ckey)
        self._table = table

    def __iter__(self) -> Iterator[Entry]:
        return iter(self._table.items())

    def __len__(self):
        return len(self._table)

    def lookup(self, key: ModelKey) -> Union[PathLossModel, Unavailable]:
        ckey = canonical_key(key)
        if ckey in self._table:
            return self._table[ckey]
        if key.mounting is Mounting.UNDER_CHASSIS and key.visibility is Visibility.NLOS:
            return Unavailable(key, "under-chassis models exist for LOS only")
        return Unavailable(key, "no model for this key")

    def available(self) -> List[Tuple[ModelKey, PathLossModel]]:
        return [(k, m) for k, m in self if m]

    def unavailable(self) -> List[ModelKey]:
        return [k for k, m in self if not m]

    def to_records(self) -> list:
        return [{"key": key.to_dict(), "model": model.to_dict() if model else None}
                for key, model in self]

    def to_json(self) -> str:
        return json.dumps(self.to_records(), indent=2) + "\n"

    @classmethod
    def from_records(cls, records: list) -> "Registry":
        entries = []
        for i, rec in enumerate(records):
            try:
                key = ModelKey.from_dict(rec["key"])
                model = PathLossModel.from_dict(rec["model"]) if rec["model"] is not None else None
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"registry entry {i}: {exc}") from exc
            entries.append((key, model))
        return cls(entries)

    @classmethod
    def from_json(cls, text: str) -> "Registry":
        records = json.loads(text)
        if not isinstance(records, list):
            raise ValueError("registry document must be a JSON array")
        return cls.from_records(records)


DEFAULT_REGISTRY = Registry(_published_entries())


def registry_lookup(key: ModelKey) -> Union[PathLossModel, Unavailable]:
    """Published model for ``key``, or :class:`Unavailable`."""
    return DEFAULT_REGISTRY.lookup(key)
