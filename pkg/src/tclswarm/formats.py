"""CSV formats and run manifests.

Numbers are written with ``repr`` so every value parses back bit-for-bit.
"""

import csv
import hashlib
import json
import os
import time

import numpy as np

from .delay import DelayTable, ReferenceSchedule
from .errors import ConfigError
from .learned import Dataset

TIMESERIES = ("t_s", "p_agg_kw", "f_mean_hz")
DELAY_TABLE = ("n", "alpha_rad", "p_norm_pct")
DATASET = ("n", "p_norm_pct", "alpha_rad")
SCHEDULE = ("start_s", "p_norm_pct")


def _cell(v):
    return str(int(v)) if isinstance(v, (int, np.integer)) else repr(float(v))


def _write(path, header, columns):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_cell(v) for v in row])


def _read(path, headers):
    """Rows of floats under one of the accepted ``headers``."""
    try:
        with open(path, newline="", encoding="ascii") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    if not rows or tuple(c.strip() for c in rows[0]) not in headers:
        wanted = " or ".join(",".join(h) for h in headers)
        raise ConfigError(f"{path}:1: expected header {wanted}")
    header = tuple(c.strip() for c in rows[0])
    out = []
    for no, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) != len(header):
            raise ConfigError(f"{path}:{no}: expected {len(header)} fields, got {len(row)}")
        try:
            out.append([float(c) for c in row])
        except ValueError as exc:
            raise ConfigError(f"{path}:{no}: {exc}") from exc
    data = np.array(out, dtype=float).reshape(len(out), len(header))
    return header, data


def write_timeseries(path, time_s, p_agg, f_mean=None):
    if f_mean is None:
        _write(path, TIMESERIES[:2], (time_s, p_agg))
    else:
        _write(path, TIMESERIES, (time_s, p_agg, f_mean))


def read_timeseries(path):
    """Dict of column name to array."""
    header, data = _read(path, (TIMESERIES, TIMESERIES[:2]))
    return {name: data[:, i] for i, name in enumerate(header)}


def write_delay_table(path, table):
    _write(path, DELAY_TABLE, ([table.n] * len(table), table.alpha, table.p_norm))


def read_delay_table(path):
    _, data = _read(path, (DELAY_TABLE,))
    if len(data) == 0:
        raise ConfigError(f"{path}: delay table has no rows")
    ns = np.unique(data[:, 0])
    if len(ns) != 1 or ns[0] != int(ns[0]):
        raise ConfigError(f"{path}: a delay table must hold a single integer n")
    return DelayTable(n=int(ns[0]), alpha=data[:, 1], p_norm=data[:, 2],
                      provenance={"source": os.fspath(path)})


def write_dataset(path, ds):
    _write(path, DATASET, (ds.n.astype(np.int64), ds.p_norm, ds.alpha))


def read_dataset(path):
    _, data = _read(path, (DATASET,))
    if len(data) == 0:
        raise ConfigError(f"{path}: dataset has no rows")
    return Dataset(data[:, 0], data[:, 1], data[:, 2])


def read_schedule(path):
    _, data = _read(path, (SCHEDULE,))
    return ReferenceSchedule(tuple(map(tuple, data)))


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, subcommand, config, seed, outputs, started, extra=None):
    """JSON record of one CLI run; every output carries its content hash."""
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "outputs": {os.fspath(p): {"sha256": file_sha256(p)} for p in outputs},
        "wall_clock_s": round(time.time() - started, 3),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if extra:
        manifest.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
