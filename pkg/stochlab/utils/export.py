# stochlab/utils/export.py
"""
Export-utility voor resultaten: JSON-lines, CSV en het compacte tekstformaat
voor percolatie-samples (reproduceerbaarheidsarchief).
"""

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, List, Mapping, Sequence, Union

import numpy as np

from ..errors import ConfigurationError
from ..models import BoundaryMode, PercolationMode

PathLike = Union[str, Path]


def clean_value(value):
    """
    Maak een waarde JSON-veilig.

    Args:
        value: numpy scalar, float, lijst of dict

    Returns:
        Python-waarde; niet-eindige floats worden None.
    """
    if isinstance(value, Mapping):
        return {str(k): clean_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean_value(v) for v in value]
    if isinstance(value, np.ndarray):
        return [clean_value(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def dumps_row(row: Mapping) -> str:
    """Eén JSON-regel met gesorteerde keys, zodat identieke rijen identieke bytes geven."""
    return json.dumps(clean_value(row), sort_keys=True, separators=(",", ":"))


def write_jsonl(path: PathLike, rows: Iterable[Mapping]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(dumps_row(row) + "\n")
            count += 1
    return count


def read_jsonl(path: PathLike) -> List[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if not math.isfinite(value) else repr(value)
    return str(value)


def write_csv(path: PathLike, columns: Sequence[str], rows: Iterable[Mapping]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(row.get(c)) for c in columns])


def write_column_csv(path: PathLike, name: str, values: Iterable[float]) -> None:
    """Steekproef als CSV met één kolom."""
    write_csv(path, [name], ({name: float(v)} for v in values))


def write_json(path: PathLike, payload: Mapping) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(clean_value(payload), f, sort_keys=True, indent=2)
        f.write("\n")


def trajectory_events_jsonl(trajectory) -> str:
    """Contact-trajectorie als JSON-lines {t, site, kind}."""
    out = io.StringIO()
    for t, site, kind in trajectory.events():
        out.write(dumps_row({"t": t, "site": site, "kind": kind.name}) + "\n")
    return out.getvalue()


def spike_log_jsonl(log) -> str:
    """SpikeLog als JSON-lines {neuron, t}."""
    out = io.StringIO()
    for neuron, t in log.events():
        out.write(dumps_row({"neuron": neuron, "t": t}) + "\n")
    return out.getvalue()


# --- tekstformaat voor percolatie-samples ---
#
#   regel 1: d L boundary mode p seed count
#   regel 2: vlaggen, np.packbits (big-endian bitvolgorde) als hex

def dumps_sample(sample) -> str:
    lattice = sample.lattice
    flags = np.asarray(sample.flags, dtype=bool)
    header = " ".join([
        str(lattice.d), str(lattice.L), lattice.boundary.value, sample.mode.value,
        repr(float(sample.p)), str(int(sample.seed)), str(flags.size),
    ])
    return header + "\n" + np.packbits(flags).tobytes().hex() + "\n"


def loads_sample(text: str):
    from ..services.percolation import PercolationSample, build_lattice

    lines = text.strip().splitlines()
    if not lines:
        raise ConfigurationError("empty sample text", key="sample")
    parts = lines[0].split()
    if len(parts) != 7:
        raise ConfigurationError("sample header needs 7 fields", key="sample", line=1)
    d, L, boundary, mode, p, seed, count = parts
    lattice = build_lattice(int(d), int(L), BoundaryMode(boundary))
    mode = PercolationMode(mode)
    count = int(count)
    expected = lattice.n_edges if mode is PercolationMode.bond else lattice.n_vertices
    if count != expected:
        raise ConfigurationError(f"flag count {count} does not match lattice ({expected})",
                                 key="sample", line=1)
    body = bytes.fromhex(lines[1].strip()) if len(lines) > 1 else b""
    if len(body) != (count + 7) // 8:
        raise ConfigurationError("truncated flag body", key="sample", line=2)
    flags = np.unpackbits(np.frombuffer(body, dtype=np.uint8), count=count).astype(bool)
    flags.setflags(write=False)
    return PercolationSample(lattice, mode, float(p), int(seed), flags)
