"""Stable CSV / JSONL / JSON writers for trajectories and reports.

CSV columns: ``n, c0 .. c{k-1}, d_prev, d_T, d_U, stream``. Floats are
written with ``repr`` (shortest round-trip form); missing values are empty.
"""

import csv
import json

SCHEMA_VERSION = 1


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def coord_width(trajectories):
    return max(len(t.points[0].coords) for t in trajectories if len(t))


def trajectory_rows(trajectories):
    """Yield ``(n, coords, d_prev, d_T, d_U, stream)`` for every stored point."""
    for t in trajectories:
        for i, p in enumerate(t.points):
            yield t.index[i], p.coords, t.d_prev[i], t.d_T[i], t.d_U[i], t.stream


def write_csv(path, trajectories):
    width = coord_width(trajectories)
    header = ["n"] + [f"c{j}" for j in range(width)] + ["d_prev", "d_T", "d_U", "stream"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for n, coords, dp, dt, du, stream in trajectory_rows(trajectories):
            cells = [_cell(c) for c in coords] + [""] * (width - len(coords))
            w.writerow([n] + cells + [_cell(dp), _cell(dt), _cell(du), stream])


def write_jsonl(path, trajectories, model):
    with open(path, "w", encoding="utf-8") as fh:
        for n, coords, dp, dt, du, stream in trajectory_rows(trajectories):
            row = {"n": n, "model": model, "coords": list(coords), "d_prev": dp,
                   "d_T": dt, "d_U": du, "stream": stream}
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def dumps(obj):
    """Deterministic JSON text with a schema version."""
    if isinstance(obj, dict) and "schema_version" not in obj:
        obj = {"schema_version": SCHEMA_VERSION, **obj}
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False, default=_default) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))


def _default(value):
    if hasattr(value, "to_json"):
        return value.to_json()
    if hasattr(value, "numerator"):
        return str(value)
    raise TypeError(f"not serializable: {type(value).__name__}")
