"""Scenario description and its YAML configuration format.

A configuration document looks like::

    dimensions:
      beams: 16            # K
      feeds: 16            # N, defaults to K
      users_per_beam: 2    # N_u
    geometry:
      altitude: 35786.0e3  # m
      beam_radius: 125.0e3 # m
    link_budget:
      wavelength: 0.015    # m
      bandwidth: 500.0e6   # Hz
      receive_gain_db: 41.7
      noise_temperature: 207.0
    pattern:
      peak_gain_db: 52.0
      half_power_angle: null  # rad, defaults to atan(beam_radius / altitude)
    fading:
      kind: clear_sky      # or lognormal
      mean_db: 0.0
      std_db: 0.0
    per_feed_power: 55.0   # W
    noise_variance: 1.0
    seed: 1234             # optional
    sweep:                 # optional, used by the sweep command
      precoders: [mmse, block_svd]
      users_per_beam: [2, 3, 4, 5, 6]
      runs: 100
      master_seed: 0

Every section and key is optional; missing values take the defaults
shown.  Unknown keys are rejected.
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .channel import BeamPattern, FadingModel, LinkBudget, build_channel_set, build_geometry
from .errors import ConfigError
from .precoding import PRECODERS


@dataclass(frozen=True)
class Scenario:
    """Everything needed to draw channels for one system configuration."""

    n_beams: int = 16
    n_feeds: int = None
    n_users: int = 2
    altitude: float = 35786.0e3
    beam_radius: float = 125.0e3
    wavelength: float = 0.015
    bandwidth: float = 500.0e6
    receive_gain_db: float = 41.7
    noise_temperature: float = 207.0
    peak_gain_db: float = 52.0
    half_power_angle: float = None
    fading_kind: str = "clear_sky"
    fading_mean_db: float = 0.0
    fading_std_db: float = 0.0
    per_feed_power: float = 55.0
    noise_variance: float = 1.0

    def __post_init__(self):
        if self.n_feeds is None:
            object.__setattr__(self, "n_feeds", self.n_beams)

    @property
    def budget(self):
        return LinkBudget.from_db(self.wavelength, self.bandwidth, self.receive_gain_db, self.noise_temperature)

    @property
    def pattern(self):
        if self.half_power_angle is None:
            return BeamPattern.for_beam(self.beam_radius, self.altitude, self.peak_gain_db)
        return BeamPattern(10.0 ** (self.peak_gain_db / 10.0), self.half_power_angle)

    @property
    def fading(self):
        return FadingModel(self.fading_kind, self.fading_mean_db, self.fading_std_db)

    def with_users(self, n_users):
        return dataclasses.replace(self, n_users=int(n_users))

    def realize(self, seed=None):
        """Draw a user layout and its channels; returns ``(geometry, channels)``.

        The user drop and the channel draw get independent child seeds.
        """
        root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        geo_seed, chan_seed = root.spawn(2)
        geometry = build_geometry(self.n_beams, self.n_users, self.beam_radius, self.altitude,
                                  seed=geo_seed, n_feeds=self.n_feeds)
        channels = build_channel_set(geometry, self.budget, self.pattern, self.fading, seed=chan_seed)
        return geometry, channels


@dataclass(frozen=True)
class SweepOptions:
    precoders: tuple = ("mmse", "block_svd")
    users_per_beam: tuple = (2, 3, 4, 5, 6)
    runs: int = 100
    master_seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario = field(default_factory=Scenario)
    seed: int = None
    sweep: SweepOptions = None


# (section, key) -> (Scenario field, kind, check)
def _positive(v):
    return v > 0


def _nonnegative(v):
    return v >= 0


_SCENARIO_KEYS = {
    ("dimensions", "beams"): ("n_beams", int, _positive),
    ("dimensions", "feeds"): ("n_feeds", int, _positive),
    ("dimensions", "users_per_beam"): ("n_users", int, _positive),
    ("geometry", "altitude"): ("altitude", float, _positive),
    ("geometry", "beam_radius"): ("beam_radius", float, _positive),
    ("link_budget", "wavelength"): ("wavelength", float, _positive),
    ("link_budget", "bandwidth"): ("bandwidth", float, _positive),
    ("link_budget", "receive_gain_db"): ("receive_gain_db", float, None),
    ("link_budget", "noise_temperature"): ("noise_temperature", float, _positive),
    ("pattern", "peak_gain_db"): ("peak_gain_db", float, None),
    ("pattern", "half_power_angle"): ("half_power_angle", float, _positive),
    ("fading", "kind"): ("fading_kind", str, lambda v: v in ("clear_sky", "lognormal")),
    ("fading", "mean_db"): ("fading_mean_db", float, None),
    ("fading", "std_db"): ("fading_std_db", float, _nonnegative),
    (None, "per_feed_power"): ("per_feed_power", float, _positive),
    (None, "noise_variance"): ("noise_variance", float, _positive),
}

_RANGE_TEXT = {_positive: "> 0", _nonnegative: ">= 0"}
_SECTIONS = {s for s, _ in _SCENARIO_KEYS if s is not None}
_TOP_KEYS = {k for s, k in _SCENARIO_KEYS if s is None} | _SECTIONS | {"seed", "sweep"}
_SWEEP_KEYS = {"precoders", "users_per_beam", "runs", "master_seed"}


def _coerce(path, value, kind, optional=False):
    if value is None and optional:
        return None
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if isinstance(value, bool):
        raise ConfigError(path, f"expected {kind.__name__}, got {value!r}")
    if isinstance(value, str):
        # YAML 1.1 reads exponent forms like 35786e3 as strings
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(path, f"expected {kind.__name__}, got {value!r}") from None
    if not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected {kind.__name__}, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(path, f"expected a finite number, got {value!r}")
    return value


def _mapping(path, value):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _parse_sweep(doc):
    doc = _mapping("sweep", doc)
    for key in doc:
        if key not in _SWEEP_KEYS:
            raise ConfigError(f"sweep.{key}", "unknown key")
    opts = SweepOptions()
    values = {}
    if "precoders" in doc:
        names = doc["precoders"]
        if not isinstance(names, list) or not names:
            raise ConfigError("sweep.precoders", "expected a non-empty list")
        for i, name in enumerate(names):
            if name not in PRECODERS:
                raise ConfigError(f"sweep.precoders[{i}]", f"unknown precoder {name!r}; expected one of {sorted(PRECODERS)}")
        values["precoders"] = tuple(names)
    if "users_per_beam" in doc:
        values_nu = doc["users_per_beam"]
        if not isinstance(values_nu, list) or not values_nu:
            raise ConfigError("sweep.users_per_beam", "expected a non-empty list")
        parsed = []
        for i, v in enumerate(values_nu):
            v = _coerce(f"sweep.users_per_beam[{i}]", v, int)
            if v < 1:
                raise ConfigError(f"sweep.users_per_beam[{i}]", f"must be >= 1, got {v}")
            parsed.append(v)
        values["users_per_beam"] = tuple(parsed)
    if "runs" in doc:
        runs = _coerce("sweep.runs", doc["runs"], int)
        if runs < 1:
            raise ConfigError("sweep.runs", f"must be >= 1, got {runs}")
        values["runs"] = runs
    if "master_seed" in doc:
        seed = _coerce("sweep.master_seed", doc["master_seed"], int)
        if seed < 0:
            raise ConfigError("sweep.master_seed", f"must be >= 0, got {seed}")
        values["master_seed"] = seed
    return dataclasses.replace(opts, **values)


def config_from_dict(doc):
    """Validate a parsed document and apply defaults."""
    doc = _mapping("<root>", doc)
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(str(key), "unknown key")
    for section in _SECTIONS:
        for key in _mapping(section, doc.get(section)):
            if (section, key) not in _SCENARIO_KEYS:
                raise ConfigError(f"{section}.{key}", "unknown key")
    values = {}
    for (section, key), (name, kind, check) in _SCENARIO_KEYS.items():
        source = doc if section is None else _mapping(section, doc.get(section))
        if key not in source:
            continue
        path = key if section is None else f"{section}.{key}"
        optional = name in ("n_feeds", "half_power_angle")
        value = _coerce(path, source[key], kind, optional)
        if value is not None and check is not None and not check(value):
            expected = _RANGE_TEXT.get(check, "one of clear_sky, lognormal")
            raise ConfigError(path, f"must be {expected}, got {value!r}")
        values[name] = value
    scenario = Scenario(**values)
    if scenario.n_feeds < scenario.n_beams:
        raise ConfigError("dimensions.feeds", f"must be >= dimensions.beams ({scenario.n_beams}), got {scenario.n_feeds}")
    seed = None
    if doc.get("seed") is not None:
        seed = _coerce("seed", doc["seed"], int)
        if seed < 0:
            raise ConfigError("seed", f"must be >= 0, got {seed}")
    sweep = _parse_sweep(doc["sweep"]) if "sweep" in doc else None
    return RunConfig(scenario, seed, sweep)


def parse_config(text):
    """Parse a YAML configuration document into a validated :class:`RunConfig`."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<document>", f"malformed YAML: {str(exc).splitlines()[0]}") from None
    return config_from_dict(doc)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def config_to_dict(config):
    """Inverse of :func:`config_from_dict` (all values explicit)."""
    s = config.scenario
    doc = {}
    for (section, key), (name, _, _) in _SCENARIO_KEYS.items():
        value = getattr(s, name)
        if section is None:
            doc[key] = value
        else:
            doc.setdefault(section, {})[key] = value
    if config.seed is not None:
        doc["seed"] = config.seed
    if config.sweep is not None:
        w = config.sweep
        doc["sweep"] = {
            "precoders": list(w.precoders),
            "users_per_beam": list(w.users_per_beam),
            "runs": w.runs,
            "master_seed": w.master_seed,
        }
    return doc


def serialize(config):
    return yaml.safe_dump(config_to_dict(config), sort_keys=False)
