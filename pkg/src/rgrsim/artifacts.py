"""CSV/JSON artifact files with embedded configuration headers.

Every file this package writes starts with one comment line carrying the
full resolved configuration as canonical JSON, so any artifact can be
regenerated bit-exactly from its own header.  Schemas are fixed:
histograms are ``t,k,count`` (sparse, occupied levels only), scaled
distributions are ``x,f``, and fit reports are JSON with ``config``,
``rng`` and ``results`` keys.  All files use ``\\n`` line endings and
``.`` as the decimal separator.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

CONFIG_PREFIX = "# rgrsim-config: "


def config_line(config: dict) -> str:
    return CONFIG_PREFIX + json.dumps(config, sort_keys=True, separators=(",", ":"))


def read_config(path) -> dict:
    """Recover the resolved configuration embedded in an artifact file."""
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text())["config"]
    with path.open() as fh:
        first = fh.readline().rstrip("\n")
    if not first.startswith(CONFIG_PREFIX):
        raise ValueError(f"{path} carries no embedded configuration header")
    return json.loads(first[len(CONFIG_PREFIX):])


def _format_count(value) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def write_histogram_csv(path, t: int, counts, config: dict) -> Path:
    """Sparse occupancy histogram: one row per occupied wealth level."""
    path = Path(path)
    counts = np.asarray(counts)
    rows = [config_line(config), "t,k,count"]
    for k in np.flatnonzero(counts):
        rows.append(f"{int(t)},{int(k)},{_format_count(counts[k])}")
    path.write_text("\n".join(rows) + "\n")
    return path


def read_histogram_csv(path):
    """Return (config, t, counts) from a histogram artifact."""
    path = Path(path)
    config = read_config(path)
    ks, vals = [], []
    t = 0
    with path.open() as fh:
        fh.readline()
        header = fh.readline().rstrip("\n")
        if header != "t,k,count":
            raise ValueError(f"{path}: unexpected histogram header {header!r}")
        for line in fh:
            t_s, k_s, c_s = line.rstrip("\n").split(",")
            t = int(t_s)
            ks.append(int(k_s))
            vals.append(float(c_s))
    size = (max(ks) + 1) if ks else 1
    counts = np.zeros(size)
    counts[ks] = vals
    if all(float(v).is_integer() for v in vals):
        counts = counts.astype(np.int64)
    return config, t, counts


def write_scaled_csv(path, x, f, config: dict) -> Path:
    path = Path(path)
    rows = [config_line(config), "x,f"]
    for xi, fi in zip(np.asarray(x, float), np.asarray(f, float)):
        rows.append(f"{float(xi)!r},{float(fi)!r}")
    path.write_text("\n".join(rows) + "\n")
    return path


def read_scaled_csv(path):
    path = Path(path)
    config = read_config(path)
    xs, fs = [], []
    with path.open() as fh:
        fh.readline()
        header = fh.readline().rstrip("\n")
        if header != "x,f":
            raise ValueError(f"{path}: unexpected scaled header {header!r}")
        for line in fh:
            x_s, f_s = line.rstrip("\n").split(",")
            xs.append(float(x_s))
            fs.append(float(f_s))
    return config, np.asarray(xs), np.asarray(fs)


def write_fit_json(path, config: dict, rng: dict, results: dict) -> Path:
    path = Path(path)
    payload = {"config": config, "rng": rng, "results": results}
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path
