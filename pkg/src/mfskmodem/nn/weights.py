"""Binary weights file: every parameter and running statistic, bit-exact.

Layout (all integers little-endian):

    magic          8 bytes  "MFSKNN01"
    version        u32      1
    record count   u32
    per record:
        name length   u16
        name          UTF-8 bytes (canonical tensor name, see model.param_layout)
        dtype tag     u8       0 = IEEE-754 binary32, 1 = binary64
        rank          u8
        dims          u64 * rank
        data          raw row-major tensor bytes

Loading rebuilds the ModelConfig from the stored shapes and cross-checks
every tensor against it, so a file that disagrees with itself fails with a
ShapeError naming the offending tensor.
"""

import struct

import numpy as np

from ..errors import InconsistencyError, MagicError, ShapeError, TruncationError, VersionError
from .model import ModelConfig, ModelState, param_layout

MAGIC = b"MFSKNN01"
VERSION = 1

_DTYPE_TAGS = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_TAG_DTYPES = {tag: dtype for dtype, tag in _DTYPE_TAGS.items()}


def save_weights(state: ModelState, destination) -> None:
    """Write the state's tensors to ``destination`` (path or binary file)."""
    if hasattr(destination, "write"):
        _write(state, destination)
    else:
        with open(destination, "wb") as handle:
            _write(state, handle)


def _write(state, handle):
    names = [name for name, _, _ in param_layout(state.config)]
    handle.write(MAGIC)
    handle.write(struct.pack("<II", VERSION, len(names)))
    tag = _DTYPE_TAGS[np.dtype(state.dtype)]
    for name in names:
        tensor = np.ascontiguousarray(state.tensors[name])
        encoded = name.encode("utf-8")
        handle.write(struct.pack("<H", len(encoded)))
        handle.write(encoded)
        handle.write(struct.pack("<BB", tag, tensor.ndim))
        handle.write(struct.pack(f"<{tensor.ndim}Q", *tensor.shape))
        handle.write(tensor.tobytes())


def load_weights(source) -> ModelState:
    """Read a weights file back into a ModelState.

    Raises MagicError, VersionError, TruncationError, InconsistencyError,
    or ShapeError depending on what is wrong with the file; a bad file
    never yields a partial state.
    """
    if hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as handle:
            data = handle.read()
    return _parse(data)


def _parse(data: bytes) -> ModelState:
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise MagicError(f"not a weights file (expected magic {MAGIC!r})")
    offset = len(MAGIC)
    version, count = _unpack("<II", data, offset)
    offset += 8
    if version != VERSION:
        raise VersionError(f"unsupported weights version {version}")

    tensors = {}
    tags = set()
    for _ in range(count):
        (name_len,) = _unpack("<H", data, offset)
        offset += 2
        name = _take(data, offset, name_len).decode("utf-8")
        offset += name_len
        tag, rank = _unpack("<BB", data, offset)
        offset += 2
        if tag not in _TAG_DTYPES:
            raise InconsistencyError(f"tensor {name!r} has unknown dtype tag {tag}")
        dims = _unpack(f"<{rank}Q", data, offset)
        offset += 8 * rank
        dtype = _TAG_DTYPES[tag]
        nbytes = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
        raw = _take(data, offset, nbytes)
        offset += nbytes
        if name in tensors:
            raise InconsistencyError(f"duplicate tensor record {name!r}")
        tensors[name] = np.frombuffer(raw, dtype=dtype).reshape(dims).copy()
        tags.add(tag)
    if offset != len(data):
        raise InconsistencyError(
            f"{len(data) - offset} trailing bytes after the declared records"
        )
    if len(tags) > 1:
        raise InconsistencyError("mixed dtype tags across tensor records")

    config = _infer_config(tensors)
    expected = {name: shape for name, shape, _ in param_layout(config)}
    missing = sorted(set(expected) - set(tensors))
    if missing:
        raise ShapeError(f"missing tensor records: {', '.join(missing)}")
    unknown = sorted(set(tensors) - set(expected))
    if unknown:
        raise ShapeError(f"unknown tensor records: {', '.join(unknown)}")
    for name, shape in expected.items():
        if tensors[name].shape != shape:
            raise ShapeError(
                f"tensor {name!r} has shape {tensors[name].shape}, "
                f"expected {shape} for the stored architecture"
            )
    dtype = _TAG_DTYPES[tags.pop()] if tags else np.dtype(np.float32)
    return ModelState(config, dtype, tensors)


def _infer_config(tensors) -> ModelConfig:
    for required in ("conv.kernel", "hidden.weight", "output.weight"):
        if required not in tensors:
            raise ShapeError(f"missing tensor record {required!r}")
    kernel = tensors["conv.kernel"]
    hidden = tensors["hidden.weight"]
    output = tensors["output.weight"]
    if kernel.ndim != 3 or kernel.shape[1] != 1:
        raise ShapeError(f"tensor 'conv.kernel' has shape {kernel.shape}, expected (K, 1, F)")
    if hidden.ndim != 2 or output.ndim != 2:
        raise ShapeError("dense weight tensors must be rank 2")
    k, _, f = kernel.shape
    flat, h = hidden.shape
    if flat % f != 0:
        raise ShapeError(
            f"tensor 'hidden.weight' input size {flat} is not a multiple of "
            f"the {f} convolution filters"
        )
    if output.shape[0] != h:
        raise ShapeError(
            f"tensor 'output.weight' has shape {output.shape}, expected ({h}, M)"
        )
    return ModelConfig(input_len=flat // f, conv_filters=f, conv_kernel=k,
                       hidden_units=h, classes=output.shape[1])


def _take(data: bytes, offset: int, size: int) -> bytes:
    if offset + size > len(data):
        raise TruncationError(
            f"file ends at byte {len(data)}, needed {offset + size}"
        )
    return data[offset : offset + size]


def _unpack(fmt: str, data: bytes, offset: int):
    size = struct.calcsize(fmt)
    return struct.unpack(fmt, _take(data, offset, size))
