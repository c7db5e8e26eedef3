"""Matrix file formats.

CSV: rows are coordinates, columns are samples, '.' decimal, no header.
Binary: magic "HSMX", u32 rows, u32 cols (little-endian), then the matrix
as column-major little-endian float64. Extension picks the format in the
convenience wrappers (".hsmx" binary, anything else CSV).
"""

import struct

import numpy as np

MAGIC = b"HSMX"
_FLOAT_FMT = "%.17g"


def save_matrix_csv(path_or_buf, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    np.savetxt(path_or_buf, M, fmt=_FLOAT_FMT, delimiter=",")


def load_matrix_csv(path_or_buf):
    M = np.loadtxt(path_or_buf, delimiter=",", dtype=float, ndmin=2)
    return M


def write_binary_block(buf, M):
    """Write one HSMX block (magic + dims + data) to a binary stream."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    rows, cols = M.shape
    buf.write(MAGIC)
    buf.write(struct.pack("<II", rows, cols))
    buf.write(np.asfortranarray(M).astype("<f8").tobytes(order="F"))


def read_binary_block(buf):
    """Read one HSMX block from a binary stream."""
    magic = buf.read(4)
    if magic != MAGIC:
        raise ValueError(f"bad matrix magic {magic!r}, expected {MAGIC!r}")
    rows, cols = struct.unpack("<II", buf.read(8))
    data = buf.read(8 * rows * cols)
    if len(data) != 8 * rows * cols:
        raise ValueError("truncated matrix block")
    M = np.frombuffer(data, dtype="<f8").reshape((rows, cols), order="F")
    return np.ascontiguousarray(M)


def save_matrix_binary(path, M):
    with open(path, "wb") as fh:
        write_binary_block(fh, M)


def load_matrix_binary(path):
    with open(path, "rb") as fh:
        return read_binary_block(fh)


def save_matrix(path, M):
    """Save by extension: .hsmx binary, otherwise CSV."""
    if str(path).endswith(".hsmx"):
        save_matrix_binary(path, M)
    else:
        save_matrix_csv(path, M)


def load_matrix(path):
    """Load by extension: .hsmx binary, otherwise CSV."""
    if str(path).endswith(".hsmx"):
        return load_matrix_binary(path)
    return load_matrix_csv(path)
