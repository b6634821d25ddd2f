"""Matrix, factor and report files.

Matrices are read from MatrixMarket (``array`` or ``coordinate``, real or
integer, general or symmetric) or from headerless CSV. Values are written
with 17 significant digits, which round-trips every binary64 number exactly.
All writes go to a temporary file in the target directory that is then
renamed over the destination.
"""

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, IoError, NonFiniteEntry, ParseError
from .solver import FactorTriple, normalize_gauge

MM_SENTINEL = "%%MatrixMarket"
FORMATS = ("mtx", "mtx-coordinate", "csv")


def _fmt(x):
    return format(float(x), ".17g")


def _atomic_write(path, text):
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _read_text(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _parse_float(token, line):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"not a number: {token!r}", line) from None
    if not math.isfinite(value):
        raise NonFiniteEntry(f"line {line}: non-finite entry {token!r}")
    return value


def _parse_int(token, line, what):
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"{what} is not an integer: {token!r}", line) from None
    return value


# --- MatrixMarket ----------------------------------------------------------


def _parse_mtx(text):
    lines = text.splitlines()
    if not lines or not lines[0].lower().startswith(MM_SENTINEL.lower()):
        raise ParseError("missing %%MatrixMarket header", 1)
    head = lines[0].split()
    if len(head) != 5:
        raise ParseError("header must read '%%MatrixMarket matrix <format> <field> <symmetry>'", 1)
    obj, layout, fld, symmetry = (h.lower() for h in head[1:])
    if obj != "matrix":
        raise ParseError(f"unsupported object {obj!r}", 1)
    if layout not in ("array", "coordinate"):
        raise ParseError(f"unsupported format {layout!r}", 1)
    if fld not in ("real", "double", "integer"):
        raise ParseError(f"unsupported field {fld!r}", 1)
    if symmetry not in ("general", "symmetric"):
        raise ParseError(f"unsupported symmetry {symmetry!r}", 1)

    body = [
        (number, line.split())
        for number, line in enumerate(lines[1:], start=2)
        if line.strip() and not line.lstrip().startswith("%")
    ]
    if not body:
        raise ParseError("missing size line", len(lines))
    size_line, size = body[0]
    want = 2 if layout == "array" else 3
    if len(size) != want:
        raise ParseError(f"size line needs {want} integers", size_line)
    dims = [_parse_int(tok, size_line, "size") for tok in size]
    rows, cols = dims[0], dims[1]
    if rows < 1 or cols < 1:
        raise ParseError("matrix dimensions must be positive", size_line)
    if symmetry == "symmetric" and rows != cols:
        raise ParseError("symmetric matrix must be square", size_line)
    entries = body[1:]
    a = np.zeros((rows, cols))

    if layout == "array":
        if symmetry == "general":
            slots = [(i, j) for j in range(cols) for i in range(rows)]
        else:
            slots = [(i, j) for j in range(cols) for i in range(j, rows)]
        if len(entries) != len(slots):
            raise DimensionMismatch(
                f"expected {len(slots)} values for a {rows}x{cols} array, found {len(entries)}"
            )
        for (number, toks), (i, j) in zip(entries, slots):
            if len(toks) != 1:
                raise ParseError("array entries hold one value per line", number)
            a[i, j] = _parse_float(toks[0], number)
            if symmetry == "symmetric":
                a[j, i] = a[i, j]
        return a

    nnz = dims[2]
    if len(entries) != nnz:
        raise DimensionMismatch(f"header announces {nnz} entries, found {len(entries)}")
    for number, toks in entries:
        if len(toks) != 3:
            raise ParseError("coordinate entries need 'row col value'", number)
        i = _parse_int(toks[0], number, "row index") - 1
        j = _parse_int(toks[1], number, "column index") - 1
        if not (0 <= i < rows and 0 <= j < cols):
            raise DimensionMismatch(f"line {number}: index ({i + 1}, {j + 1}) outside {rows}x{cols}")
        value = _parse_float(toks[2], number)
        a[i, j] += value
        if symmetry == "symmetric" and i != j:
            a[j, i] += value
    return a


def _render_mtx_array(a):
    out = [f"{MM_SENTINEL} matrix array real general", f"{a.shape[0]} {a.shape[1]}"]
    out.extend(_fmt(x) for x in a.ravel(order="F"))
    return "\n".join(out) + "\n"


def _render_mtx_coordinate(a):
    # Scanning ``a.T`` row by row lists the entries of ``a`` in column-major order.
    cols, rows = np.nonzero(a.T)
    out = [f"{MM_SENTINEL} matrix coordinate real general", f"{a.shape[0]} {a.shape[1]} {rows.size}"]
    out.extend(f"{i + 1} {j + 1} {_fmt(a[i, j])}" for i, j in zip(rows, cols))
    return "\n".join(out) + "\n"


# --- CSV -------------------------------------------------------------------


def _parse_csv(text):
    rows = []
    width = None
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        toks = [t.strip() for t in line.split(",")]
        if width is None:
            width = len(toks)
        elif len(toks) != width:
            raise DimensionMismatch(f"line {number}: expected {width} fields, found {len(toks)}")
        rows.append([_parse_float(t, number) for t in toks])
    if not rows:
        raise ParseError("no data rows", 1)
    return np.array(rows, dtype=np.float64)


def _render_csv(a):
    return "\n".join(",".join(_fmt(x) for x in row) for row in a) + "\n"


# --- public matrix API -----------------------------------------------------


def read_matrix(path):
    """Load a dense matrix, detecting the format from content then extension."""
    text = _read_text(path).removeprefix("\ufeff")
    if text[: len(MM_SENTINEL)].lower() == MM_SENTINEL.lower() or Path(path).suffix.lower() == ".mtx":
        return _parse_mtx(text)
    return _parse_csv(text)


def write_matrix(path, a, format="mtx"):
    """Write ``a`` as ``mtx`` (dense array), ``mtx-coordinate`` or ``csv``."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got {a.ndim} dimensions")
    if not np.all(np.isfinite(a)):
        raise NonFiniteEntry("refusing to write non-finite entries")
    if format == "mtx":
        text = _render_mtx_array(a)
    elif format == "mtx-coordinate":
        text = _render_mtx_coordinate(a)
    elif format == "csv":
        text = _render_csv(a)
    else:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    _atomic_write(path, text)


# --- factors ----------------------------------------------------------------


def factor_paths(prefix):
    prefix = str(prefix)
    return {
        "P": Path(prefix + ".P"),
        "D": Path(prefix + ".D"),
        "Q": Path(prefix + ".Q"),
        "manifest": Path(prefix + ".manifest.json"),
    }


def write_factors(prefix, triple, normalize=False):
    """Write ``P``, ``D`` and ``Q`` next to a JSON manifest.

    With ``normalize=True`` the triple is gauge-normalized first, so a
    degenerate ``P`` fails before any file is touched.
    """
    if normalize:
        triple = normalize_gauge(triple)
    paths = factor_paths(prefix)
    for name in ("P", "D", "Q"):
        write_matrix(paths[name], getattr(triple, name.lower()))
    manifest = {
        "k": triple.k,
        "gauge_normalized": bool(normalize),
        "files": {name: paths[name].name for name in ("P", "D", "Q")},
    }
    _atomic_write(paths["manifest"], json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def read_factors(prefix):
    paths = factor_paths(prefix)
    try:
        manifest = json.loads(_read_text(paths["manifest"]))
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad manifest: {exc.msg}", exc.lineno) from None
    triple = FactorTriple(*(read_matrix(paths[name]) for name in ("P", "D", "Q")))
    if triple.k != manifest.get("k"):
        raise DimensionMismatch(f"manifest says k={manifest.get('k')}, files have k={triple.k}")
    return triple, manifest


# --- reports ------------------------------------------------------------------


def _to_json_value(x):
    """Map numpy scalars and non-finite floats onto plain JSON values.

    Infinities and NaN become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
    """
    if isinstance(x, dict):
        return {str(k): _to_json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_to_json_value(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.ndarray):
        return _to_json_value(x.tolist())
    return x


def dumps_report(report):
    data = report.to_dict() if hasattr(report, "to_dict") else report
    return json.dumps(_to_json_value(data), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(path, report):
    """Serialize a report as canonical JSON (sorted keys, two-space indent)."""
    _atomic_write(path, dumps_report(report))


def read_report(path):
    """Parse a report file back into a plain ``dict``."""
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid report: {exc.msg}", exc.lineno) from None
