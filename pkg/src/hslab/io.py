"""CSV/JSON writers with a metadata sidecar for every output file."""

import csv
import json
import math
import platform
from pathlib import Path

import numpy as np

from . import __version__, _kernels

HEADERS = {
    "scattering": ("k", "re_a", "im_a", "re_b", "im_b", "re_r", "im_r"),
    "asympt": ("y", "t", "xi", "x", "u_leading", "error_scale"),
    "delta_diag": ("s", "nu", "jump_residual"),
    "evolve": ("x", "u", "m"),
    "compare": ("xi", "t", "u_num", "u_asympt", "ratio", "abs_err", "decay_slope"),
}


def _fmt(v):
    return format(float(v), ".17g")


def write_csv(path, header, rows):
    """Write rows with ``.`` decimals, ``,`` separators and LF endings."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    """Header and float matrix of a CSV written by :func:`write_csv`."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = tuple(rows[0])
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
    return header, data.reshape(len(rows) - 1, len(header))


def _clean(obj):
    # JSON-safe conversion: complex -> [re, im], numpy scalars/arrays -> python, nan -> None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_meta(path, cfg, command, extra=None):
    """Sidecar ``<name>.meta.json`` with config hash, tolerances and provenance."""
    path = Path(path)
    meta = {
        "file": path.name,
        "command": command,
        "config_source": cfg.source,
        "config_sha256": cfg.digest,
        "tolerances": cfg.tolerances(),
        "version": __version__,
        "backend": _kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    if extra:
        meta.update(extra)
    return write_json(path.with_name(path.name + ".meta.json"), meta)


def gnuplot_script(path, csv_name, xcol, ycols, title):
    """Minimal gnuplot script plotting columns of one CSV."""
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        "plot " + ", ".join(f"'{csv_name}' using {xcol}:{c} with lines" for c in ycols),
    ]
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)
