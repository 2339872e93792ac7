"""
Text interchange formats for the pipeline artifacts.

Every file starts with "# key: value" header lines followed by
whitespace-separated rows: t, then (re, im) pairs. The header key
"fingerprint" is the SHA-256 of the sorted remaining header lines plus
the data block, so identical inputs give byte-identical files.
"""

import hashlib
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from gqme.models import GqmeResult, GqmeType, InhomSeries, KernelSeries, PfiSeries
from tfd.models import PropagatorSeries

FORMAT_U = "u-series"
FORMAT_PFI = "pfi"
FORMAT_KERNEL = "kernel"
FORMAT_INHOM = "inhom"
FORMAT_RESULT = "result"

# Header keys that must stay strings.
_STRING_KEYS = {"format", "columns", "labels", "backend", "gqme_type", "kind", "scheme", "initial_state", "config"}
# Header keys owned by the format itself rather than by series metadata.
_RESERVED_KEYS = {"format", "dt", "n_points", "fingerprint"}


class PipelineError(Exception):
    """Base exception for pipeline operations."""
    pass


class MalformedSeriesFileError(PipelineError):
    """Raised when a series file cannot be parsed or fails its fingerprint."""
    pass


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    text = str(getattr(value, "value", value))
    if "\n" in text:
        raise ValueError(f"Header values must be single-line, got {text!r}")
    return text


def _parse_value(key: str, text: str) -> Any:
    if key in _STRING_KEYS or key.endswith("fingerprint"):
        return text
    if text in ("true", "false"):
        return text == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _digest(header_lines, data_lines) -> str:
    hasher = hashlib.sha256()
    for line in sorted(header_lines):
        hasher.update(line.encode("utf-8"))
        hasher.update(b"\n")
    for line in data_lines:
        hasher.update(line.encode("utf-8"))
        hasher.update(b"\n")
    return hasher.hexdigest()


def pack_complex(values: np.ndarray) -> np.ndarray:
    """(N, k) complex -> (N, 2k) real with (re, im) pairs side by side."""
    values = np.asarray(values, dtype=complex)
    packed = np.empty((values.shape[0], 2 * values.shape[1]))
    packed[:, 0::2] = values.real
    packed[:, 1::2] = values.imag
    return packed


def unpack_complex(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values[:, 0::2] + 1j * values[:, 1::2]


def atomic_write_text(path, text: str) -> None:
    """Write text to a temporary sibling and rename it into place."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=str(target.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def write_series_file(path, kind: str, dt: float, header: Dict[str, Any], data: np.ndarray) -> str:
    """Write one series file and return its fingerprint.

    Args:
        path: Output file
        kind: Format tag
        dt: Grid spacing; the first column is written as i * dt
        header: Extra header entries (None values are skipped)
        data: (N, k) real data without the time column
    """
    data = np.asarray(data, dtype=float)
    n_points = data.shape[0]
    entries = {"format": kind, "dt": float(dt), "n_points": n_points}
    for key, value in header.items():
        if key in _RESERVED_KEYS or value is None:
            continue
        entries[key] = value
    header_lines = [f"{key}: {_format_value(value)}" for key, value in sorted(entries.items())]

    rows = np.column_stack([dt * np.arange(n_points), data]) if n_points else np.zeros((0, 1 + data.shape[1]))
    data_lines = [" ".join("%.16e" % x for x in row) for row in rows]
    fingerprint = _digest(header_lines, data_lines)

    lines = [f"# {line}" for line in header_lines]
    lines.append(f"# fingerprint: {fingerprint}")
    lines.extend(data_lines)
    atomic_write_text(path, "\n".join(lines) + "\n")
    return fingerprint


def read_header(path) -> Dict[str, Any]:
    """Header entries of a series file without reading the data."""
    source = Path(path)
    if not source.is_file():
        raise FileNotFoundError(f"Series file not found: {source}")
    header: Dict[str, Any] = {}
    with open(source, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, sep, value = line[1:].strip().partition(":")
            if not sep:
                raise MalformedSeriesFileError(f"{source}: header line without 'key: value': {line.strip()}")
            header[key.strip()] = _parse_value(key.strip(), value.strip())
    return header


def read_series_file(path, kind: str) -> Tuple[Dict[str, Any], np.ndarray]:
    """Read and verify a series file.

    Returns:
        (header, data) with data of shape (N, k), time column removed

    Raises:
        FileNotFoundError: If the file does not exist
        MalformedSeriesFileError: If the format tag, grid, or fingerprint is wrong
    """
    source = Path(path)
    if not source.is_file():
        raise FileNotFoundError(f"Series file not found: {source}")
    with open(source, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()

    header_lines, data_lines, header = [], [], {}
    stored_fingerprint = None
    for line in lines:
        if line.startswith("#"):
            if data_lines:
                raise MalformedSeriesFileError(f"{source}: header line after data")
            body = line[1:].strip()
            key, sep, value = body.partition(":")
            if not sep:
                raise MalformedSeriesFileError(f"{source}: header line without 'key: value': {body}")
            key, value = key.strip(), value.strip()
            if key == "fingerprint":
                stored_fingerprint = value
                continue
            header_lines.append(f"{key}: {value}")
            header[key] = _parse_value(key, value)
        elif line.strip():
            data_lines.append(line)

    if header.get("format") != kind:
        raise MalformedSeriesFileError(f"{source}: expected a '{kind}' file, got '{header.get('format')}'")
    if stored_fingerprint is None:
        raise MalformedSeriesFileError(f"{source}: missing fingerprint")
    if _digest(header_lines, data_lines) != stored_fingerprint:
        raise MalformedSeriesFileError(f"{source}: fingerprint does not match the contents")

    try:
        rows = np.array([[float(x) for x in line.split()] for line in data_lines], dtype=float)
    except ValueError as e:
        raise MalformedSeriesFileError(f"{source}: non-numeric data ({e})")
    if rows.ndim != 2 or rows.shape[0] != header.get("n_points"):
        raise MalformedSeriesFileError(
            f"{source}: expected {header.get('n_points')} data rows, found {len(data_lines)}"
        )
    dt = header.get("dt")
    if not isinstance(dt, float) or dt <= 0:
        raise MalformedSeriesFileError(f"{source}: invalid dt {dt!r}")
    expected_times = dt * np.arange(rows.shape[0])
    if np.max(np.abs(rows[:, 0] - expected_times), initial=0.0) > 1e-9 * max(1.0, expected_times[-1] if len(expected_times) else 1.0):
        raise MalformedSeriesFileError(f"{source}: time column is not the uniform grid of dt = {dt}")

    header["fingerprint"] = stored_fingerprint
    return header, rows[:, 1:]


def _expect_columns(path, data: np.ndarray, count: int) -> None:
    if data.shape[1] != count:
        raise MalformedSeriesFileError(f"{path}: expected {count} value columns, found {data.shape[1]}")


def _metadata(header: Dict[str, Any], *drop: str) -> Dict[str, Any]:
    return {key: value for key, value in header.items() if key not in _RESERVED_KEYS and key not in drop}


def write_propagator_series(path, series: PropagatorSeries, input_fingerprint: Optional[str] = None) -> str:
    header = dict(series.metadata)
    header["input_fingerprint"] = input_fingerprint
    data = pack_complex(series.entries.reshape(series.n_points, 16))
    return write_series_file(path, FORMAT_U, series.dt, header, data)


def read_propagator_series(path) -> PropagatorSeries:
    header, data = read_series_file(path, FORMAT_U)
    _expect_columns(path, data, 32)
    entries = unpack_complex(data).reshape(-1, 4, 4)
    metadata = _metadata(header)
    metadata["fingerprint"] = header["fingerprint"]
    return PropagatorSeries(dt=header["dt"], entries=entries, metadata=metadata)


def write_pfi_series(path, pfi: PfiSeries, input_fingerprint: Optional[str] = None) -> str:
    header = dict(pfi.metadata)
    header["initial_state"] = pfi.gamma
    header["input_fingerprint"] = input_fingerprint
    n = pfi.n_points
    data = np.column_stack([
        pack_complex(pfi.F.reshape(n, 16)),
        pack_complex(pfi.Fdot.reshape(n, 16)),
        pack_complex(pfi.Z),
    ])
    return write_series_file(path, FORMAT_PFI, pfi.dt, header, data)


def read_pfi_series(path) -> PfiSeries:
    header, data = read_series_file(path, FORMAT_PFI)
    _expect_columns(path, data, 72)
    values = unpack_complex(data)
    metadata = _metadata(header, "initial_state")
    metadata["fingerprint"] = header["fingerprint"]
    return PfiSeries(
        dt=header["dt"],
        F=values[:, :16].reshape(-1, 4, 4),
        Fdot=values[:, 16:32].reshape(-1, 4, 4),
        Z=values[:, 32:36],
        gamma=header.get("initial_state", "D"),
        metadata=metadata,
    )


def write_kernel_series(path, kernel: KernelSeries, input_fingerprint: Optional[str] = None) -> str:
    header = dict(kernel.metadata)
    header.update(
        gqme_type=kernel.gqme_type.value,
        iterations_used=kernel.iterations_used,
        residual=float(kernel.residual),
        input_fingerprint=input_fingerprint,
    )
    size = kernel.gqme_type.size
    data = pack_complex(kernel.entries.reshape(kernel.n_points, size * size))
    return write_series_file(path, FORMAT_KERNEL, kernel.dt, header, data)


def read_kernel_series(path) -> KernelSeries:
    header, data = read_series_file(path, FORMAT_KERNEL)
    gqme_type = _gqme_type(path, header)
    size = gqme_type.size
    _expect_columns(path, data, 2 * size * size)
    metadata = _metadata(header, "gqme_type", "iterations_used", "residual")
    metadata["fingerprint"] = header["fingerprint"]
    return KernelSeries(
        dt=header["dt"],
        gqme_type=gqme_type,
        entries=unpack_complex(data).reshape(-1, size, size),
        iterations_used=int(header.get("iterations_used", 0)),
        residual=float(header.get("residual", 0.0)),
        metadata=metadata,
    )


def write_inhom_series(path, inhom: InhomSeries, input_fingerprint: Optional[str] = None) -> str:
    header = dict(inhom.metadata)
    header.update(
        gqme_type=inhom.gqme_type.value,
        iterations_used=inhom.iterations_used,
        residual=float(inhom.residual),
        input_fingerprint=input_fingerprint,
    )
    return write_series_file(path, FORMAT_INHOM, inhom.dt, header, pack_complex(inhom.entries))


def read_inhom_series(path) -> InhomSeries:
    header, data = read_series_file(path, FORMAT_INHOM)
    gqme_type = _gqme_type(path, header)
    _expect_columns(path, data, 2 * gqme_type.size)
    metadata = _metadata(header, "gqme_type", "iterations_used", "residual")
    metadata["fingerprint"] = header["fingerprint"]
    return InhomSeries(
        dt=header["dt"],
        gqme_type=gqme_type,
        entries=unpack_complex(data),
        iterations_used=int(header.get("iterations_used", 0)),
        residual=float(header.get("residual", 0.0)),
        metadata=metadata,
    )


def write_result(path, result: GqmeResult, input_fingerprint: Optional[str] = None) -> str:
    """Result rows: t, sigma elements as (re, im) pairs, then sigma_z when defined."""
    header = dict(result.metadata)
    header.update(
        kind=result.kind,
        labels=",".join(result.labels),
        memory_time=result.memory_time,
        input_fingerprint=input_fingerprint,
    )
    header.pop("gqme_type", None)
    data = pack_complex(result.sigma)
    if result.sigma_z is not None:
        data = np.column_stack([data, result.sigma_z])
    return write_series_file(path, FORMAT_RESULT, result.dt, header, data)


def read_result(path) -> GqmeResult:
    header, data = read_series_file(path, FORMAT_RESULT)
    labels = tuple(str(header.get("labels", "")).split(","))
    if not all(labels):
        raise MalformedSeriesFileError(f"{path}: missing element labels")
    with_sigma_z = "DD" in labels and "AA" in labels
    _expect_columns(path, data, 2 * len(labels) + (1 if with_sigma_z else 0))
    metadata = _metadata(header, "kind", "labels", "memory_time")
    metadata["fingerprint"] = header["fingerprint"]
    return GqmeResult(
        dt=header["dt"],
        kind=header.get("kind", ""),
        labels=labels,
        sigma=unpack_complex(data[:, :2 * len(labels)]),
        memory_time=header.get("memory_time"),
        metadata=metadata,
    )


def _gqme_type(path, header: Dict[str, Any]) -> GqmeType:
    try:
        return GqmeType.parse(header.get("gqme_type"))
    except ValueError as e:
        raise MalformedSeriesFileError(f"{path}: {e}")


def inhom_path_for(kernel_path) -> Path:
    """Companion inhomogeneous-term file of a kernel file: <stem>.inhom<suffix>."""
    kernel_path = Path(kernel_path)
    return kernel_path.with_name(f"{kernel_path.stem}.inhom{kernel_path.suffix}")
