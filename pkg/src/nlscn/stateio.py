"""Binary state files: mesh descriptor header + interleaved complex doubles.

Little-endian throughout; the header records an explicit endianness tag,
the mesh parameters and the time stamp, so reference states computed in
long runs can be reloaded without recomputation and a load into a
mismatched mesh is rejected up front.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import StateFileError

MAGIC = b"NLSSTATE"
VERSION = 1
_LITTLE_ENDIAN_TAG = 1
_BC_CODE = {"dirichlet": 0, "periodic": 1}
_BC_NAME = {v: k for k, v in _BC_CODE.items()}

# magic, version, endian tag, bc code, pad, nx, ny, ax, bx, ay, by, t, step, n_dof
_HEADER = struct.Struct("<8sBBBBII5dqQ")


def save_state(path, mesh, U, t=0.0, step=0):
    """Write a nodal vector with its mesh descriptor; roundtrips bit-exactly."""
    U = np.asarray(U, dtype=np.complex128)
    if U.shape != (mesh.n_dof,):
        raise StateFileError(f"vector length {U.shape} does not match mesh dof count {mesh.n_dof}")
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        _LITTLE_ENDIAN_TAG,
        _BC_CODE[mesh.bc_kind],
        0,
        mesh.nx,
        mesh.ny,
        *mesh.bounds,
        float(t),
        int(step),
        mesh.n_dof,
    )
    interleaved = np.empty((U.size, 2))
    interleaved[:, 0] = U.real
    interleaved[:, 1] = U.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(interleaved.astype("<f8").tobytes())


def load_state(path, expected_mesh=None):
    """Read (U, t, step, header_dict); validates magic, version and mesh."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise StateFileError(f"{path}: truncated header")
        (magic, version, endian, bc_code, _pad, nx, ny, ax, bx, ay, by, t, step, n_dof) = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise StateFileError(f"{path}: not a state file (bad magic {magic!r})")
        if version != VERSION:
            raise StateFileError(f"{path}: unsupported version {version}")
        if endian != _LITTLE_ENDIAN_TAG:
            raise StateFileError(f"{path}: unsupported endianness tag {endian}")
        if bc_code not in _BC_NAME:
            raise StateFileError(f"{path}: unknown boundary code {bc_code}")
        payload = fh.read(16 * n_dof)
    if len(payload) != 16 * n_dof:
        raise StateFileError(f"{path}: truncated payload")
    header = {
        "bc_kind": _BC_NAME[bc_code],
        "nx": nx,
        "ny": ny,
        "bounds": (ax, bx, ay, by),
        "t": t,
        "step": step,
        "n_dof": n_dof,
    }
    if expected_mesh is not None:
        same = (
            expected_mesh.bc_kind == header["bc_kind"]
            and expected_mesh.nx == nx
            and expected_mesh.ny == ny
            and expected_mesh.bounds == header["bounds"]
            and expected_mesh.n_dof == n_dof
        )
        if not same:
            raise StateFileError(
                f"{path}: state was written for {header['bc_kind']} {nx}x{ny} on {header['bounds']}, "
                f"not for the requested mesh"
            )
    flat = np.frombuffer(payload, dtype="<f8").reshape(-1, 2)
    U = flat[:, 0] + 1j * flat[:, 1]
    return U, t, step, header
