"""Geographic grouping of each beam's users into multicast frames."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class FrameSchedule:
    """Frames of every beam.

    ``frames[k][f]`` is an int array of ``n_users`` pool indices of beam
    ``k``.  When the pool size is not a multiple of ``n_users`` the last
    frame of each beam repeats some of its own members to fill up and
    ``padded[k][f]`` is set.
    """

    frames: tuple
    padded: tuple
    n_users: int

    @property
    def n_beams(self):
        return len(self.frames)

    @property
    def n_frames(self):
        return len(self.frames[0]) if self.frames else 0

    def frame_positions(self, positions, f):
        """User coordinates of frame ``f`` across all beams, shape (K, n_users, 2)."""
        positions = np.asarray(positions)
        return np.stack([positions[k, self.frames[k][f]] for k in range(self.n_beams)])

    def rows(self):
        for k, beam in enumerate(self.frames):
            for f, frame in enumerate(beam):
                for slot, user in enumerate(frame):
                    yield k, f, slot, int(user), int(self.padded[k][f])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["beam", "frame", "slot", "user", "padded"])
            writer.writerows(self.rows())


def _cluster_beam(points, n_users):
    """Greedy farthest-seed grouping of one beam's pool."""
    pool = points.shape[0]
    centroid = points.mean(axis=0)
    from_centroid = np.linalg.norm(points - centroid, axis=1)
    free = np.ones(pool, dtype=bool)
    frames, padded = [], []
    while free.any():
        candidates = np.flatnonzero(free)
        # argmax keeps the lowest index among ties
        seed = candidates[np.argmax(from_centroid[candidates])]
        free[seed] = False
        others = np.flatnonzero(free)
        dist = np.linalg.norm(points[others] - points[seed], axis=1)
        near = others[np.argsort(dist, kind="stable")[: n_users - 1]]
        free[near] = False
        frame = np.concatenate([[seed], near]).astype(int)
        short = frame.size < n_users
        if short:
            frame = np.resize(frame, n_users)
        frames.append(frame)
        padded.append(short)
    return tuple(frames), tuple(padded)


def geographic_schedule(positions, n_users, pool_size=None):
    """Partition every beam's user pool into frames of nearby users.

    Parameters
    ----------
    positions : Geometry or ndarray (K, pool, 2)
        User pool of each beam; a Geometry contributes its user positions.
    n_users : int
        Users per frame.
    pool_size : int, optional
        Use only the first ``pool_size`` users of each pool.

    Notes
    -----
    Within a beam, the free user farthest from the pool centroid seeds a
    frame and takes its ``n_users - 1`` nearest free neighbours.  The rule
    is deterministic; ties go to the lower index.
    """
    points = np.asarray(getattr(positions, "user_positions", positions), dtype=float)
    if points.ndim != 3 or points.shape[2] != 2:
        raise InvalidArgumentError(f"positions must have shape (K, pool, 2), got {points.shape}")
    pool_size = points.shape[1] if pool_size is None else int(pool_size)
    if pool_size > points.shape[1]:
        raise InvalidArgumentError(f"pool_size {pool_size} exceeds the {points.shape[1]} users available")
    if n_users < 1 or pool_size < n_users:
        raise InvalidArgumentError(f"need 1 <= n_users <= pool_size, got n_users={n_users}, pool_size={pool_size}")
    frames, padded = [], []
    for k in range(points.shape[0]):
        f, p = _cluster_beam(points[k, :pool_size], n_users)
        frames.append(f)
        padded.append(p)
    return FrameSchedule(tuple(frames), tuple(padded), int(n_users))
