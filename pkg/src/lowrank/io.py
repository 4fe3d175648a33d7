"""Matrix ingestion and factor persistence.

Readers and writers for the Matrix Market text format, a small binary
container (bit-exact round trips), and CSV; a manifest records everything
needed to reproduce a run.  A row-block stream delivers a stored matrix in
consecutive blocks so single-pass sketches can be accumulated without
holding the matrix in memory.

Binary container layout: 8-byte magic "LRKMAT00", then three little-endian
int64 words (field code 0=real 1=complex, rows, cols), then the entries in
row-major float64 (interleaved real/imaginary pairs for complex).
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .core import as_matrix
from .factor import (
    InterpolativeDecomp,
    NystromFactors,
    PartialEig,
    PartialQR,
    PartialSVD,
    SampleBundle,
)
from .rangefinder import RangeBasis
from .sketch import gaussian_matrix

_MAGIC = b"LRKMAT00"


class MatrixFormatError(ValueError):
    """A file failed to parse; the message names the offending line."""


class StreamError(IOError):
    """A row-block stream hit a truncated or inconsistent source."""


# ---------------------------------------------------------------------------
# Matrix Market


def read_matrix_market(path):
    """Read a Matrix Market file into a dense matrix.

    Supports array and coordinate sections, real and complex fields, general
    and symmetric symmetry.  Array data is column-major per the format
    definition; symmetric storage is mirrored; duplicate coordinate entries
    are an error, as are NaN values and out-of-range indices.
    """
    with open(path, "rt", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixFormatError(f"{path}: empty file")
    header = lines[0].strip().split()
    if len(header) != 5 or header[0] != "%%MatrixMarket" or header[1].lower() != "matrix":
        raise MatrixFormatError(f"{path}:1: malformed MatrixMarket header")
    layout, field, symmetry = (w.lower() for w in header[2:5])
    if layout not in ("array", "coordinate"):
        raise MatrixFormatError(f"{path}:1: unsupported layout {layout!r}")
    if field not in ("real", "complex", "integer"):
        raise MatrixFormatError(f"{path}:1: unsupported field {field!r}")
    if symmetry not in ("general", "symmetric", "hermitian"):
        raise MatrixFormatError(f"{path}:1: unsupported symmetry {symmetry!r}")

    lineno = 1
    body = []
    for i, raw in enumerate(lines[1:], start=2):
        s = raw.strip()
        if not s or s.startswith("%"):
            continue
        body.append((i, s))
    if not body:
        raise MatrixFormatError(f"{path}: missing size line")
    lineno, size_line = body[0]
    sizes = size_line.split()
    expect = 2 if layout == "array" else 3
    if len(sizes) != expect:
        raise MatrixFormatError(f"{path}:{lineno}: size line needs {expect} integers")
    try:
        dims = [int(w) for w in sizes]
    except ValueError as exc:
        raise MatrixFormatError(f"{path}:{lineno}: bad size entry: {exc}") from exc
    m, n = dims[0], dims[1]
    if symmetry != "general" and m != n:
        raise MatrixFormatError(f"{path}:{lineno}: symmetric storage needs a square matrix")
    complex_field = field == "complex"
    dtype = np.complex128 if complex_field else np.float64
    A = np.zeros((m, n), dtype=dtype)

    def parse_value(words, lineno):
        try:
            if complex_field:
                return float(words[0]) + 1j * float(words[1])
            return float(words[0])
        except (ValueError, IndexError) as exc:
            raise MatrixFormatError(f"{path}:{lineno}: bad numeric entry") from exc

    entries = body[1:]
    if layout == "array":
        per_entry = 2 if complex_field else 1
        expected = m * n if symmetry == "general" else m * (m + 1) // 2
        if len(entries) != expected:
            raise MatrixFormatError(
                f"{path}:{lineno}: expected {expected} array entries, found {len(entries)}"
            )
        pos = 0
        for j in range(n):
            i_start = 0 if symmetry == "general" else j
            for i in range(i_start, m):
                ln, s = entries[pos]
                words = s.split()
                if len(words) != per_entry:
                    raise MatrixFormatError(f"{path}:{ln}: expected {per_entry} value(s)")
                v = parse_value(words, ln)
                A[i, j] = v
                if symmetry != "general" and i != j:
                    A[j, i] = np.conj(v) if symmetry == "hermitian" else v
                pos += 1
    else:
        nnz = dims[2]
        if len(entries) != nnz:
            raise MatrixFormatError(
                f"{path}:{lineno}: expected {nnz} coordinate entries, found {len(entries)}"
            )
        seen = set()
        for ln, s in entries:
            words = s.split()
            need = 4 if complex_field else 3
            if len(words) != need:
                raise MatrixFormatError(f"{path}:{ln}: expected {need} fields")
            try:
                i, j = int(words[0]), int(words[1])
            except ValueError as exc:
                raise MatrixFormatError(f"{path}:{ln}: bad index") from exc
            if not (1 <= i <= m and 1 <= j <= n):
                raise MatrixFormatError(f"{path}:{ln}: index ({i}, {j}) out of bounds")
            if (i, j) in seen:
                raise MatrixFormatError(f"{path}:{ln}: duplicate entry ({i}, {j})")
            seen.add((i, j))
            v = parse_value(words[2:], ln)
            A[i - 1, j - 1] = v
            if symmetry != "general" and i != j:
                A[j - 1, i - 1] = np.conj(v) if symmetry == "hermitian" else v
    if not np.all(np.isfinite(A)):
        raise MatrixFormatError(f"{path}: non-finite entries present")
    return as_matrix(A, name=path)


def write_matrix_market(A, path):
    """Write a dense matrix as a Matrix Market array file (column-major)."""
    A = as_matrix(A)
    complex_field = np.iscomplexobj(A)
    field = "complex" if complex_field else "real"
    with open(path, "wt", encoding="ascii") as fh:
        fh.write(f"%%MatrixMarket matrix array {field} general\n")
        fh.write(f"{A.shape[0]} {A.shape[1]}\n")
        for j in range(A.shape[1]):
            for i in range(A.shape[0]):
                v = A[i, j]
                if complex_field:
                    fh.write(f"{v.real:.17e} {v.imag:.17e}\n")
                else:
                    fh.write(f"{v:.17e}\n")


# ---------------------------------------------------------------------------
# Binary container


def write_matrix_binary(A, path):
    A = as_matrix(A)
    complex_field = np.iscomplexobj(A)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        np.asarray([1 if complex_field else 0, A.shape[0], A.shape[1]],
                   dtype="<i8").tofile(fh)
        if complex_field:
            np.ascontiguousarray(A).astype("<c16").tofile(fh)
        else:
            np.ascontiguousarray(A).astype("<f8").tofile(fh)


def read_matrix_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise MatrixFormatError(f"{path}: bad magic {magic!r}")
        head = np.fromfile(fh, dtype="<i8", count=3)
        if head.size != 3:
            raise MatrixFormatError(f"{path}: truncated header")
        code, m, n = (int(x) for x in head)
        dtype = "<c16" if code == 1 else "<f8"
        data = np.fromfile(fh, dtype=dtype, count=m * n)
        if data.size != m * n:
            raise MatrixFormatError(f"{path}: truncated data section")
    return as_matrix(data.reshape(m, n), name=path)


def read_matrix(path):
    """Dispatch on extension: .mtx/.mm Matrix Market, otherwise binary."""
    if str(path).endswith((".mtx", ".mm")):
        return read_matrix_market(path)
    return read_matrix_binary(path)


def write_vector_csv(values, path):
    with open(path, "wt", encoding="ascii") as fh:
        for v in np.asarray(values).ravel():
            fh.write(f"{v:.17e}\n")


# ---------------------------------------------------------------------------
# Factor persistence


def _factor_parts(f):
    if isinstance(f, PartialSVD):
        return "partial_svd", {"U": f.U, "V": f.V}, {"sigma": f.sigma}
    if isinstance(f, PartialEig):
        return "partial_eig", {"U": f.U}, {"lambda": f.lam}
    if isinstance(f, InterpolativeDecomp):
        return f"{f.side}_id", {"X": f.X}, {"J": np.asarray(f.J, dtype=np.float64)}
    if isinstance(f, PartialQR):
        return "partial_qr", {"Q": f.Q, "R": f.R}, {"perm": np.asarray(f.perm, dtype=np.float64)}
    if isinstance(f, NystromFactors):
        return "nystrom", {"F": f.F}, {}
    if isinstance(f, RangeBasis):
        return "range_basis", {"Q": f.Q}, {}
    raise TypeError(f"cannot persist object of type {type(f).__name__}")


def write_factors(f, out_dir, fmt="binary", manifest_extra=None):
    """Persist a factorization plus a JSON manifest; returns the manifest.

    One file per factor.  Binary mode round-trips losslessly; writes go to a
    temporary directory first and are renamed into place only after every
    file has been produced, so failures leave no partial output.
    """
    if fmt not in ("binary", "mm", "csv"):
        raise ValueError("format must be 'binary', 'mm', or 'csv'")
    kind, mats, vecs = _factor_parts(f)
    os.makedirs(out_dir, exist_ok=True)
    ext = {"binary": "bin", "mm": "mtx", "csv": "csv"}[fmt]
    manifest = {
        "kind": kind,
        "format": fmt,
        "files": {},
        "dims": {name: list(m.shape) for name, m in mats.items()},
    }
    if manifest_extra:
        manifest.update(manifest_extra)
    with tempfile.TemporaryDirectory(dir=out_dir, prefix=".staging-") as staging:
        staged = []
        for name, arr in mats.items():
            fname = f"{name}.{ext}"
            fpath = os.path.join(staging, fname)
            if fmt == "binary":
                write_matrix_binary(arr, fpath)
            elif fmt == "mm":
                write_matrix_market(arr, fpath)
            else:
                np.savetxt(fpath, np.asarray(arr), delimiter=",")
            staged.append(fname)
            manifest["files"][name] = fname
        for name, vec in vecs.items():
            fname = f"{name}.csv"
            write_vector_csv(vec, os.path.join(staging, fname))
            staged.append(fname)
            manifest["files"][name] = fname
        mpath = os.path.join(staging, "manifest.json")
        with open(mpath, "wt", encoding="ascii") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        staged.append("manifest.json")
        for fname in staged:
            os.replace(os.path.join(staging, fname), os.path.join(out_dir, fname))
    return manifest


def read_factors(out_dir):
    """Load a persisted factorization back from its manifest (binary mode)."""
    with open(os.path.join(out_dir, "manifest.json"), "rt", encoding="ascii") as fh:
        manifest = json.load(fh)
    if manifest["format"] != "binary":
        raise ValueError("only binary factor directories round-trip")
    load = {name: read_matrix_binary(os.path.join(out_dir, fname))
            if fname.endswith(".bin")
            else np.loadtxt(os.path.join(out_dir, fname), ndmin=1)
            for name, fname in manifest["files"].items() if name != "manifest"}
    kind = manifest["kind"]
    if kind == "partial_svd":
        return PartialSVD(U=load["U"], sigma=np.atleast_1d(load["sigma"]), V=load["V"]), manifest
    if kind == "partial_eig":
        return PartialEig(U=load["U"], lam=np.atleast_1d(load["lambda"])), manifest
    if kind in ("row_id", "column_id"):
        return InterpolativeDecomp(J=np.atleast_1d(load["J"]).astype(int), X=load["X"],
                                   side=kind.split("_")[0]), manifest
    if kind == "partial_qr":
        return PartialQR(Q=load["Q"], R=load["R"],
                         perm=np.atleast_1d(load["perm"]).astype(int)), manifest
    if kind == "nystrom":
        return NystromFactors(F=load["F"]), manifest
    if kind == "range_basis":
        return load["Q"], manifest
    raise ValueError(f"unknown factor kind {kind!r}")


# ---------------------------------------------------------------------------
# Row-block streaming


@dataclass
class RowBlockStream:
    """Iterator over consecutive row blocks of a stored binary matrix."""

    path: str
    block_rows: int

    def __post_init__(self):
        if self.block_rows < 1:
            raise ValueError("block_rows must be >= 1")
        with open(self.path, "rb") as fh:
            if fh.read(8) != _MAGIC:
                raise MatrixFormatError(f"{self.path}: bad magic")
            head = np.fromfile(fh, dtype="<i8", count=3)
        if head.size != 3:
            raise MatrixFormatError(f"{self.path}: truncated header")
        self.field_code, self.m, self.n = (int(x) for x in head)
        self.cursor = 0

    @property
    def shape(self):
        return (self.m, self.n)

    def __iter__(self):
        dtype = "<c16" if self.field_code == 1 else "<f8"
        with open(self.path, "rb") as fh:
            fh.seek(8 + 24)
            row = 0
            while row < self.m:
                rows = min(self.block_rows, self.m - row)
                data = np.fromfile(fh, dtype=dtype, count=rows * self.n)
                if data.size != rows * self.n:
                    raise StreamError(
                        f"{self.path}: stream truncated at row block starting {row}"
                    )
                self.cursor = row + rows
                yield row, data.reshape(rows, self.n)
                row += rows


def stream_row_blocks(path, block_rows):
    """Open a stored matrix for one-pass row-block traversal."""
    return RowBlockStream(path=path, block_rows=block_rows)


def accumulate_two_sided_samples(blocks, m, n, ell, ell_tilde, seed):
    """Build Y = A Omega and Y~ = A* Omega~ from one traversal of row blocks.

    `blocks` yields (row_offset, block) pairs covering the matrix exactly
    once, in order.  Both sketches are updated per block, so a single pass
    suffices.  The arithmetic order is fixed by the block sequence; two runs
    over identical blocks agree bitwise.
    """
    Omega = gaussian_matrix(n, ell, seed)
    Omega_t = gaussian_matrix(m, ell_tilde, seed + 1)
    Y = None
    Yt = None
    total = 0
    for row, block in blocks:
        if Y is None:
            dt = np.promote_types(block.dtype, Omega.dtype)
            Y = np.zeros((m, ell), dtype=dt)
            Yt = np.zeros((n, ell_tilde), dtype=dt)
        rows = block.shape[0]
        Y[row: row + rows, :] = block @ Omega
        Yt += block.conj().T @ Omega_t[row: row + rows, :]
        total += rows
    if total != m:
        raise StreamError(f"stream delivered {total} rows, expected {m}")
    return Omega, Omega_t, Y, Yt


def streamed_sample_bundle(stream, ell, ell_tilde=None, seed=0, rank=None):
    """Two-sided SampleBundle accumulated from a RowBlockStream in one pass."""
    from .factor import _basis_from_samples

    if ell_tilde is None:
        ell_tilde = ell
    m, n = stream.shape
    Omega, Omega_t, Y, Yt = accumulate_two_sided_samples(
        iter(stream), m, n, ell, ell_tilde, seed
    )
    Q, choice = _basis_from_samples(Y, rank)
    Qt, _ = _basis_from_samples(Yt, rank)
    return SampleBundle(Omega=Omega, Y=Y, Q=Q, Omega_tilde=Omega_t, Y_tilde=Yt,
                        Q_tilde=Qt, q_choice=choice, seed=seed)


def in_memory_sample_bundle(A, ell, ell_tilde=None, seed=0, rank=None, block_rows=None):
    """Two-sided bundle from an in-memory matrix via the same accumulation.

    With `block_rows` set, the arithmetic order matches a streamed run with
    the same block size bit for bit.
    """
    from .factor import _basis_from_samples

    A = as_matrix(A)
    if ell_tilde is None:
        ell_tilde = ell
    m, n = A.shape
    step = block_rows or m

    def blocks():
        for row in range(0, m, step):
            yield row, A[row: row + step, :]

    Omega, Omega_t, Y, Yt = accumulate_two_sided_samples(blocks(), m, n, ell,
                                                         ell_tilde, seed)
    Q, choice = _basis_from_samples(Y, rank)
    Qt, _ = _basis_from_samples(Yt, rank)
    return SampleBundle(Omega=Omega, Y=Y, Q=Q, Omega_tilde=Omega_t, Y_tilde=Yt,
                        Q_tilde=Qt, q_choice=choice, seed=seed)
