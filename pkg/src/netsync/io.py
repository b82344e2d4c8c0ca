"""CSV/JSON writers.  Every file starts with the seed that produced it."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

__all__ = ["write_csv", "write_json", "write_split_csv", "read_split_csv", "write_trajectory_csv", "to_jsonable"]


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def write_json(path, obj, seed: int | None = None) -> Path:
    path = Path(path)
    data = to_jsonable(obj)
    if seed is not None and isinstance(data, dict):
        data = {"seed": seed, **data}
    path.write_text(json.dumps(data, indent=2, sort_keys=False) + "\n")
    return path


def write_csv(path, header, rows, seed: int | None = None) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        if seed is not None:
            fh.write(f"# seed={seed}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for v in row])
    return path


def write_trajectory_csv(path, times, states, prefix: str = "x", seed: int | None = None, names=None) -> Path:
    """Columns ``t, x_0 .. x_{d-1}``; one row per accepted step."""
    states = np.asarray(states)
    names = names or [f"{prefix}_{k}" for k in range(states.shape[1])]
    return write_csv(path, ["t", *names], (np.concatenate([[t], s]) for t, s in zip(times, states)), seed)


def write_split_csv(path, split, seed: int | None = None) -> Path:
    """All four split blocks in one file, each introduced by ``# block <name> <rows>x<cols>``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        if seed is not None:
            fh.write(f"# seed={seed}\n")
        for name in ("v_l", "V", "V_dag", "Lambda"):
            M = np.atleast_2d(getattr(split, name))
            fh.write(f"# block {name} {M.shape[0]}x{M.shape[1]}\n")
            w = csv.writer(fh)
            for row in M:
                w.writerow([repr(float(v)) for v in row])
    return path


def read_split_csv(path) -> dict:
    blocks, name, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# block "):
            if name is not None:
                blocks[name] = np.array(rows)
            name, rows = line.split()[2], []
        elif line and not line.startswith("#"):
            rows.append([float(v) for v in line.split(",")])
    if name is not None:
        blocks[name] = np.array(rows)
    if "v_l" in blocks:
        blocks["v_l"] = blocks["v_l"].ravel()
    return blocks
