'''snapshot.py
Binary state snapshots in the MHDS format.
MHDS形式の状態スナップショットを読み書きします。

Layout (little-endian, no padding): magic "MHDS", version u32, n_dim u32, N u32,
L f64, params A, gamma, mu, lambda, nu (5 x f64), time f64, then rho, the n
components of u and the n components of H as f64 arrays in row-major node order.
'''

import logging
import os

import numpy as np

from .exceptions import DataError, OperationalError
from .grid import Params, State, make_grid

logger = logging.getLogger(__name__)

MAGIC = b"MHDS"
FORMAT_VERSION = 1

HEADER_DTYPE = np.dtype([
    ("magic", "S4"),
    ("version", "<u4"),
    ("n_dim", "<u4"),
    ("N", "<u4"),
    ("L", "<f8"),
    ("params", "<f8", (5,)),
    ("time", "<f8"),
])


def encode_snapshot(state: State) -> bytes:
    """Serialize a state to MHDS bytes
    状態を MHDS バイト列に変換
    """
    grid = state.grid
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["version"] = FORMAT_VERSION
    header["n_dim"] = grid.n_dim
    header["N"] = grid.points_per_axis
    header["L"] = grid.half_extent
    p = state.params
    header["params"] = (p.A, p.gamma, p.mu, p.lam, p.nu)
    header["time"] = state.time
    body = np.concatenate([
        np.ascontiguousarray(state.rho, dtype="<f8").ravel(),
        np.ascontiguousarray(state.u, dtype="<f8").ravel(),
        np.ascontiguousarray(state.H, dtype="<f8").ravel(),
    ])
    return header.tobytes() + body.tobytes()


def decode_snapshot(payload: bytes) -> State:
    """Rebuild a state from MHDS bytes
    MHDS バイト列から状態を復元

    Raises:
        DataError: When the magic, version or payload size is wrong
                   マジック、バージョン、サイズが不正な場合
    """
    if len(payload) < HEADER_DTYPE.itemsize:
        raise DataError("Snapshot is shorter than its header")
    header = np.frombuffer(payload, dtype=HEADER_DTYPE, count=1)[0]
    if header["magic"] != MAGIC:
        raise DataError(f"Bad snapshot magic: {header['magic']!r}")
    if int(header["version"]) != FORMAT_VERSION:
        raise DataError(f"Unsupported snapshot version: {int(header['version'])}")
    grid = make_grid(int(header["n_dim"]), float(header["L"]), int(header["N"]))
    nodes = grid.points_per_axis ** grid.n_dim
    expected = HEADER_DTYPE.itemsize + 8 * nodes * (1 + 2 * grid.n_dim)
    if len(payload) != expected:
        raise DataError(f"Snapshot has {len(payload)} bytes, expected {expected}")
    body = np.frombuffer(payload, dtype="<f8", offset=HEADER_DTYPE.itemsize).astype(np.float64)
    rho = body[:nodes].reshape(grid.shape)
    u = body[nodes:nodes * (1 + grid.n_dim)].reshape((grid.n_dim,) + grid.shape)
    H = body[nodes * (1 + grid.n_dim):].reshape((grid.n_dim,) + grid.shape)
    A, gamma, mu, lam, nu = (float(v) for v in header["params"])
    # Bypasses make_state: solver snapshots may carry roundoff-negative density.
    return State(grid, rho, u, H, Params(A, gamma, mu, lam, nu), float(header["time"]))


def write_snapshot(state: State, path: str) -> None:
    """Write a snapshot file

    Raises:
        OperationalError: When the file cannot be written
                          ファイルを書き込めない場合
    """
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "wb") as f:
            f.write(encode_snapshot(state))
        logger.debug("wrote snapshot t=%s to %s", state.time, path)
    except OSError as e:
        raise OperationalError(f"Failed to write snapshot: {str(e)}")


def read_snapshot(path: str) -> State:
    """Read a snapshot file

    Raises:
        OperationalError: When the file cannot be read
                          ファイルを読み込めない場合
        DataError: When the content is not a valid snapshot
                   内容が不正な場合
    """
    try:
        with open(path, "rb") as f:
            payload = f.read()
    except OSError as e:
        raise OperationalError(f"Failed to read snapshot: {str(e)}")
    logger.debug("loaded snapshot %s (%d bytes)", path, len(payload))
    return decode_snapshot(payload)
