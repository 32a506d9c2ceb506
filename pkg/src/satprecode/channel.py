"""Multibeam downlink channel synthesis.

Each user terminal sees a K x N matrix whose (k, n) entry is the free-space
link from feed n to the terminal served in beam k::

    G_R * a_kn * exp(j psi_kn) / (4 pi (d_k / lambda) sqrt(K_B T_R B_W))

multiplied row-wise by an atmospheric fading coefficient that is common to
all feeds.  Dividing by the thermal noise amplitude makes the receiver noise
variance equal to one, so SINRs computed on these matrices need no separate
noise term.

Geometry is planar: the satellite sits at ``altitude`` above the origin of
a tangent plane holding the beam centres and the users.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidArgumentError, InvalidGeometryError

BOLTZMANN = 1.380649e-23  # J/K, exact SI value

_HEX_DIRECTIONS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


def db_to_linear(value_db):
    """Power ratio in dB to linear scale."""
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


@dataclass(frozen=True)
class LinkBudget:
    """Link-budget constants of the user downlink (SI units).

    ``receive_gain_amplitude`` is the amplitude gain G_R; the antenna power
    gain is its square.
    """

    wavelength: float
    bandwidth: float
    receive_gain_amplitude: float
    noise_temperature: float
    boltzmann: float = BOLTZMANN

    def __post_init__(self):
        for name in ("wavelength", "bandwidth", "receive_gain_amplitude", "noise_temperature"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidArgumentError(f"{name} must be > 0, got {value!r}")
        if self.boltzmann != BOLTZMANN:
            raise InvalidArgumentError("boltzmann must equal the SI constant 1.380649e-23")

    @classmethod
    def from_db(cls, wavelength, bandwidth, receive_gain_db, noise_temperature):
        return cls(
            wavelength=float(wavelength),
            bandwidth=float(bandwidth),
            receive_gain_amplitude=float(10.0 ** (receive_gain_db / 20.0)),
            noise_temperature=float(noise_temperature),
        )

    @property
    def noise_amplitude(self):
        """sqrt(K_B T_R B_W), the thermal noise amplitude in sqrt(W)."""
        return float(np.sqrt(self.boltzmann * self.noise_temperature * self.bandwidth))


@dataclass(frozen=True)
class BeamPattern:
    """Gaussian power-tapered feed pattern.

    Power gain falls as ``g_max * 2 ** (-(theta / theta_3dB) ** 2)`` with the
    off-boresight angle theta, i.e. half power at ``half_power_angle``.
    """

    peak_power_gain: float
    half_power_angle: float

    def __post_init__(self):
        if not self.peak_power_gain > 0:
            raise InvalidArgumentError(f"peak_power_gain must be > 0, got {self.peak_power_gain!r}")
        if not self.half_power_angle > 0:
            raise InvalidArgumentError(f"half_power_angle must be > 0, got {self.half_power_angle!r}")

    @classmethod
    def for_beam(cls, beam_radius, altitude, peak_gain_db):
        """Pattern whose half-power contour passes through the beam edge."""
        return cls(float(db_to_linear(peak_gain_db)), float(np.arctan2(beam_radius, altitude)))


@dataclass(frozen=True)
class FadingModel:
    """Row-wise atmospheric fading.

    ``clear_sky`` leaves the line-of-sight channel untouched.  ``lognormal``
    draws an attenuation A ~ Normal(mean_db, std_db) in dB per (user, beam),
    giving amplitude ``10 ** (-A / 20)`` and a uniform phase.
    """

    kind: str = "clear_sky"
    mean_db: float = 0.0
    std_db: float = 0.0

    def __post_init__(self):
        if self.kind not in ("clear_sky", "lognormal"):
            raise InvalidArgumentError(f"unknown fading kind {self.kind!r}")
        if self.std_db < 0:
            raise InvalidArgumentError(f"std_db must be >= 0, got {self.std_db!r}")

    def draw(self, shape, rng):
        if self.kind == "clear_sky":
            return np.ones(shape, dtype=complex)
        attenuation_db = rng.normal(self.mean_db, self.std_db, size=shape)
        phase = rng.uniform(0.0, 2.0 * np.pi, size=shape)
        return 10.0 ** (-attenuation_db / 20.0) * np.exp(1j * phase)


@dataclass(frozen=True)
class Geometry:
    """Planar layout of beams, feeds and users.

    Attributes
    ----------
    altitude : float
        Satellite height above the tangent plane (m).
    beam_centers : ndarray, shape (K, 2)
    beam_radius : float
    user_positions : ndarray, shape (K, N_u, 2)
        Users served in each beam.
    feed_centers : ndarray, shape (N, 2)
        Boresight ground point of each feed.  Equal to ``beam_centers`` in
        the default N = K layout.
    """

    altitude: float
    beam_centers: np.ndarray
    beam_radius: float
    user_positions: np.ndarray
    feed_centers: np.ndarray = None

    def __post_init__(self):
        centers = np.asarray(self.beam_centers, dtype=float).reshape(-1, 2)
        users = np.asarray(self.user_positions, dtype=float)
        if users.ndim != 3 or users.shape[0] != centers.shape[0] or users.shape[2] != 2:
            raise InvalidArgumentError(
                f"user_positions must have shape (K, N_u, 2) with K={centers.shape[0]}, got {users.shape}"
            )
        if users.shape[1] < 1:
            raise InvalidArgumentError("need at least one user per beam")
        feeds = centers if self.feed_centers is None else np.asarray(self.feed_centers, dtype=float).reshape(-1, 2)
        if not self.altitude > 0 or not self.beam_radius > 0:
            raise InvalidArgumentError("altitude and beam_radius must be > 0")
        offsets = np.linalg.norm(users - centers[:, None, :], axis=-1)
        if np.any(offsets > self.beam_radius * (1 + 1e-9)):
            raise InvalidGeometryError("every user must lie inside its beam radius")
        for name, value in (("beam_centers", centers), ("user_positions", users), ("feed_centers", feeds)):
            value = value.copy()
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_beams(self):
        return self.beam_centers.shape[0]

    @property
    def n_users(self):
        return self.user_positions.shape[1]

    @property
    def n_feeds(self):
        return self.feed_centers.shape[0]

    def with_users(self, user_positions):
        """Same beams and feeds, different user drop."""
        return Geometry(self.altitude, self.beam_centers, self.beam_radius, user_positions, self.feed_centers)


def hex_spiral(count, spacing):
    """First ``count`` cells of a hexagonal lattice in spiral order.

    The origin comes first, then ring 1 (6 cells), ring 2 (12 cells), ...
    Neighbouring cells are ``spacing`` apart.

    Returns
    -------
    ndarray, shape (count, 2)
    """
    if count < 1:
        raise InvalidArgumentError(f"count must be >= 1, got {count}")
    cells = [(0, 0)]
    ring = 1
    while len(cells) < count:
        q, r = ring * _HEX_DIRECTIONS[4][0], ring * _HEX_DIRECTIONS[4][1]
        for dq, dr in _HEX_DIRECTIONS:
            for _ in range(ring):
                cells.append((q, r))
                q, r = q + dq, r + dr
        ring += 1
    axial = np.array(cells[:count], dtype=float)
    x = spacing * (axial[:, 0] + 0.5 * axial[:, 1])
    y = spacing * (np.sqrt(3.0) / 2.0) * axial[:, 1]
    return np.column_stack([x, y])


def build_geometry(n_beams, n_users, beam_radius, altitude, seed=None, n_feeds=None):
    """Hexagonal beam layout with users dropped uniformly in each beam disk.

    Beam centres are ``sqrt(3) * beam_radius`` apart.  With ``n_feeds`` larger
    than ``n_beams`` the extra feeds point at the next cells of the same
    spiral.
    """
    n_feeds = n_beams if n_feeds is None else n_feeds
    for name, value in (("n_beams", n_beams), ("n_users", n_users), ("n_feeds", n_feeds)):
        if int(value) != value or value < 1:
            raise InvalidArgumentError(f"{name} must be a positive integer, got {value!r}")
    if not beam_radius > 0 or not altitude > 0:
        raise InvalidArgumentError("beam_radius and altitude must be > 0")
    if n_feeds < n_beams:
        raise InvalidArgumentError("n_feeds must be >= n_beams")
    spacing = np.sqrt(3.0) * beam_radius
    cells = hex_spiral(max(n_beams, n_feeds), spacing)
    centers = cells[:n_beams]
    rng = np.random.default_rng(seed)
    angle = rng.uniform(0.0, 2.0 * np.pi, size=(n_beams, n_users))
    radius = beam_radius * np.sqrt(rng.uniform(0.0, 1.0, size=(n_beams, n_users)))
    # sqrt(U) radius gives a uniform density over the disk
    users = centers[:, None, :] + np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)
    return Geometry(float(altitude), centers, float(beam_radius), users, cells[:n_feeds])


def off_axis_angle(user_pos, beam_center, altitude):
    """Angle at the satellite between the directions to two ground points."""
    user_pos = np.asarray(user_pos, dtype=float)
    beam_center = np.asarray(beam_center, dtype=float)
    u = np.concatenate([user_pos, np.full(user_pos.shape[:-1] + (1,), -altitude)], axis=-1)
    c = np.concatenate([beam_center, np.full(beam_center.shape[:-1] + (1,), -altitude)], axis=-1)
    u, c = np.broadcast_arrays(u, c)
    cross = np.linalg.norm(np.cross(u, c), axis=-1)
    return np.arctan2(cross, np.sum(u * c, axis=-1))


def pattern_gain(user_pos, beam_center, altitude, pattern):
    """Amplitude gain of a feed boresighted at ``beam_center`` toward ``user_pos``.

    ``sqrt(g_max) * 2 ** (-(theta / theta_3dB) ** 2 / 2)``, the square root
    of the Gaussian power taper, so the power gain is half the peak at
    ``theta_3dB``.  Broadcasts over leading dimensions of both position
    arrays.
    """
    theta = off_axis_angle(user_pos, beam_center, altitude)
    return np.sqrt(pattern.peak_power_gain) * np.exp(-0.5 * np.log(2.0) * (theta / pattern.half_power_angle) ** 2)


def slant_distance(user_pos, altitude):
    user_pos = np.asarray(user_pos, dtype=float)
    return np.sqrt(altitude**2 + np.sum(user_pos**2, axis=-1))


@dataclass(frozen=True)
class ChannelSet:
    """Per-user channel matrices of one frame.

    Attributes
    ----------
    los : ndarray, shape (N_u, K, N)
        Clear-sky channels (the barred matrices before fading).
    fading : ndarray, shape (N_u, K)
        Complex fading coefficient of every (user, beam) row.
    """

    los: np.ndarray
    fading: np.ndarray = None

    def __post_init__(self):
        los = np.array(self.los, dtype=complex)
        if los.ndim == 2:
            los = los[None]
        if los.ndim != 3:
            raise InvalidArgumentError(f"channels must have shape (N_u, K, N), got {los.shape}")
        fading = np.ones(los.shape[:2], dtype=complex) if self.fading is None else np.array(self.fading, dtype=complex)
        if fading.shape != los.shape[:2]:
            raise InvalidArgumentError(f"fading must have shape {los.shape[:2]}, got {fading.shape}")
        if not (np.all(np.isfinite(los)) and np.all(np.isfinite(fading))):
            raise InvalidArgumentError("channel entries must be finite")
        for name, value in (("los", los), ("fading", fading)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        # materialise H^[i] and the average now; both are part of the set
        self.matrices
        self.average

    @cached_property
    def matrices(self):
        """H^[i] = F^[i] o Hbar^[i], shape (N_u, K, N)."""
        H = self.fading[:, :, None] * self.los
        H.setflags(write=False)
        return H

    @cached_property
    def average(self):
        """User-averaged channel, shape (K, N)."""
        H = self.matrices.mean(axis=0)
        H.setflags(write=False)
        return H

    @property
    def n_users(self):
        return self.los.shape[0]

    @property
    def n_beams(self):
        return self.los.shape[1]

    @property
    def n_feeds(self):
        return self.los.shape[2]

    @classmethod
    def from_matrices(cls, H):
        """Wrap externally supplied matrices (no fading split)."""
        return cls(np.asarray(H, dtype=complex))

    def scaled(self, factor):
        return ChannelSet(self.los * factor, self.fading)

    def subset(self, users):
        """Channel set restricted to the given user indices."""
        users = np.atleast_1d(users)
        return ChannelSet(self.los[users], self.fading[users])


def build_channel_set(geometry, budget, pattern, fading=None, seed=None):
    """Draw the channel matrices of every user in ``geometry``.

    The phases psi are i.i.d. uniform on [0, 2 pi) per (user, beam, feed) and
    are drawn before the fading coefficients, so a clear-sky and a faded
    channel built from the same seed share their line-of-sight part.
    """
    fading = FadingModel() if fading is None else fading
    rng = np.random.default_rng(seed)
    users = np.swapaxes(geometry.user_positions, 0, 1)  # (N_u, K, 2)
    distance = slant_distance(users, geometry.altitude)
    if np.any(distance <= 0) or not np.all(np.isfinite(distance)):
        raise InvalidGeometryError("zero or undefined slant distance")
    gain = pattern_gain(users[:, :, None, :], geometry.feed_centers[None, None, :, :], geometry.altitude, pattern)
    psi = rng.uniform(0.0, 2.0 * np.pi, size=gain.shape)
    scale = budget.receive_gain_amplitude / (
        4.0 * np.pi * (distance / budget.wavelength) * budget.noise_amplitude
    )
    los = scale[:, :, None] * gain * np.exp(1j * psi)
    coeffs = fading.draw(los.shape[:2], rng)
    return ChannelSet(los, coeffs)
