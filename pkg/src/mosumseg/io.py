"""CSV and JSON readers and writers for events, paths, configs and results."""

import csv
import json

import numpy as np

from ._validation import ValidationError
from .model import ChangeSpec, EventSeries, SampledPath, SegmentationConfig

__all__ = [
    "dump_json",
    "read_config",
    "read_events_csv",
    "read_path_csv",
    "read_spec",
    "write_events_csv",
    "write_path_csv",
]


def _fmt(x):
    return repr(float(x))


def read_events_csv(path, horizon_T=None, dim=None):
    """Read ``component_id,time`` rows (1-based ids, header required).

    ``horizon_T`` defaults to the largest event time; ``dim`` to the largest id.
    """
    by_comp = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header[:2] != ["component_id", "time"]:
            raise ValidationError("events CSV needs the header 'component_id,time'")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                comp, t = int(row[0]), float(row[1])
            except (ValueError, IndexError):
                raise ValidationError(f"{path}:{lineno}: malformed row {row!r}") from None
            if comp < 1:
                raise ValidationError(f"{path}:{lineno}: component ids are 1-based")
            by_comp.setdefault(comp, []).append(t)
    p = max(by_comp, default=1) if dim is None else int(dim)
    comps = [np.sort(np.asarray(by_comp.get(j, []), dtype=float)) for j in range(1, p + 1)]
    if horizon_T is None:
        horizon_T = max((c[-1] for c in comps if c.size), default=None)
        if horizon_T is None:
            raise ValidationError("cannot infer the horizon from an empty events file")
    return EventSeries(tuple(comps), horizon_T)


def write_events_csv(events, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["component_id", "time"])
        for j, comp in enumerate(events.components, start=1):
            writer.writerows((j, _fmt(t)) for t in comp)


def read_path_csv(path):
    """Read ``t,z_1,...,z_p`` rows on a uniform grid starting at 0."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    if t.size < 2 or t[0] != 0:
        raise ValidationError("path CSV must start at t = 0 and have at least two rows")
    step = t[1] - t[0]
    if not np.allclose(np.diff(t), step, rtol=1e-9, atol=0):
        raise ValidationError("path CSV must be on a uniform grid")
    return SampledPath(float(step), data[:, 1:], float(t[-1]))


def write_path_csv(sampled, path):
    header = ["t"] + [f"z_{j + 1}" for j in range(sampled.dim)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t, row in zip(sampled.times, sampled.values):
            writer.writerow([_fmt(t)] + [_fmt(v) for v in row])


def read_config(path):
    with open(path) as fh:
        return SegmentationConfig.from_dict(json.load(fh))


def read_spec(path):
    with open(path) as fh:
        return ChangeSpec.from_dict(json.load(fh))


def dump_json(obj, fh_or_path):
    """Deterministic JSON (sorted keys, fixed indentation, trailing newline)."""
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if hasattr(fh_or_path, "write"):
        fh_or_path.write(text)
    else:
        with open(fh_or_path, "w") as fh:
            fh.write(text)
