"""CSV interchange formats.

Every file starts with one comment line carrying its dimensions, e.g.
``# matrix rows=16 cols=16``, followed by a column header.  Floats are
written with ``repr`` so a read/write round trip is exact.

* matrix: ``row,col,re,im``
* channels: ``user,beam,feed,re,im`` (the faded matrices H^[i])
* sinr: ``beam,user,sinr``; beam rates follow from the SINRs
"""

import csv

import numpy as np

from .channel import ChannelSet
from .errors import DimensionMismatchError, InvalidArgumentError
from .precoding import SinrReport


def _write(path, kind, dims, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# {kind} " + " ".join(f"{k}={v}" for k, v in dims.items()) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _read(path, kind, header):
    with open(path, newline="") as fh:
        first = fh.readline().split()
        if len(first) < 2 or first[0] != "#" or first[1] != kind:
            raise InvalidArgumentError(f"{path}: not a {kind} file")
        try:
            dims = {k: int(v) for k, v in (item.split("=") for item in first[2:])}
        except ValueError:
            raise InvalidArgumentError(f"{path}: malformed dimension line") from None
        reader = csv.reader(fh)
        if next(reader, None) != header:
            raise InvalidArgumentError(f"{path}: expected columns {','.join(header)}")
        return dims, list(reader)


def _fill(path, shape, rows, n_index):
    out = np.zeros(shape, dtype=complex)
    seen = np.zeros(shape, dtype=bool)
    for line, row in enumerate(rows, start=3):
        try:
            index = tuple(int(v) for v in row[:n_index])
            value = complex(float(row[n_index]), float(row[n_index + 1]))
        except (ValueError, IndexError):
            raise InvalidArgumentError(f"{path}:{line}: malformed row") from None
        if len(index) != len(shape) or any(not 0 <= i < n for i, n in zip(index, shape)):
            raise DimensionMismatchError(f"{path}:{line}: index {index} outside shape {shape}")
        out[index] = value
        seen[index] = True
    if not seen.all():
        raise InvalidArgumentError(f"{path}: {int((~seen).sum())} entries missing")
    return out


def write_matrix(path, W):
    W = np.asarray(getattr(W, "W", W))
    rows = ((r, c, repr(float(W[r, c].real)), repr(float(W[r, c].imag)))
            for r in range(W.shape[0]) for c in range(W.shape[1]))
    _write(path, "matrix", {"rows": W.shape[0], "cols": W.shape[1]}, ["row", "col", "re", "im"], rows)


def read_matrix(path):
    dims, rows = _read(path, "matrix", ["row", "col", "re", "im"])
    return _fill(path, (dims["rows"], dims["cols"]), rows, 2)


def write_channels(path, channels):
    H = channels.matrices
    n_users, n_beams, n_feeds = H.shape
    rows = ((i, k, n, repr(float(H[i, k, n].real)), repr(float(H[i, k, n].imag)))
            for i in range(n_users) for k in range(n_beams) for n in range(n_feeds))
    _write(path, "channels", {"users": n_users, "beams": n_beams, "feeds": n_feeds},
           ["user", "beam", "feed", "re", "im"], rows)


def read_channels(path):
    dims, rows = _read(path, "channels", ["user", "beam", "feed", "re", "im"])
    return ChannelSet.from_matrices(_fill(path, (dims["users"], dims["beams"], dims["feeds"]), rows, 3))


def write_sinr(path, report):
    K, n_users = report.sinr.shape
    rows = ((k, i, repr(float(report.sinr[k, i]))) for k in range(K) for i in range(n_users))
    _write(path, "sinr", {"beams": K, "users": n_users}, ["beam", "user", "sinr"], rows)


def read_sinr(path):
    dims, rows = _read(path, "sinr", ["beam", "user", "sinr"])
    sinr = np.zeros((dims["beams"], dims["users"]))
    for k, i, value in rows:
        sinr[int(k), int(i)] = float(value)
    beam_rate = np.log2(1.0 + sinr.min(axis=1))
    return SinrReport(sinr, beam_rate, float(beam_rate.sum()))


def write_table(path, header, rows):
    """Plain CSV with a header row and no dimension line."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
