"""Keyed binary cache for AlphaTensor.

File layout: a YAML frontmatter header between ``---`` lines carrying the
format version and every key field, then an ``.npz`` payload with the upper
triangles of the real and level-shift parts.
"""

from __future__ import annotations

import io
import logging
from pathlib import Path
from typing import Callable

import numpy as np
import yaml

from .. import config
from ..errors import CacheMismatchError
from .basis import ModeBasis, ModeIndex, enumerate_modes
from .coupling import AlphaTensor, TensorKey

logger = logging.getLogger(__name__)

_FENCE = b"---\n"


def _header(tensor: AlphaTensor) -> dict:
    return {
        "format": "barload-alpha",
        "version": config.CACHE_FORMAT_VERSION,
        "key": tensor.key.as_dict(),
        "n_excited": tensor.n_excited,
        "n_ground": tensor.n_ground,
    }


def write_cache(tensor: AlphaTensor, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    iu = np.triu_indices(tensor.real.shape[0])
    payload = io.BytesIO()
    np.savez(payload, real=tensor.real[iu], imag=tensor.imag[iu])
    body = yaml.safe_dump(_header(tensor), default_flow_style=False, sort_keys=False).encode("utf-8")
    with path.open("wb") as fh:
        fh.write(_FENCE + body + _FENCE)
        fh.write(payload.getvalue())
    logger.info("wrote alpha cache %s", path)
    return path


def _split(raw: bytes) -> tuple[dict, bytes]:
    if not raw.startswith(_FENCE):
        raise CacheMismatchError("missing cache header")
    end = raw.find(b"\n" + _FENCE, len(_FENCE) - 1)
    if end < 0:
        raise CacheMismatchError("unterminated cache header")
    try:
        header = yaml.safe_load(raw[len(_FENCE): end + 1].decode("utf-8"))
    except (yaml.YAMLError, UnicodeDecodeError) as exc:
        raise CacheMismatchError(f"unreadable cache header: {exc}") from exc
    if not isinstance(header, dict):
        raise CacheMismatchError("cache header is not a mapping")
    return header, raw[end + 1 + len(_FENCE):]


def _bases(key: TensorKey) -> tuple[ModeBasis, ModeBasis]:
    if key.excited_modes:
        return (
            ModeBasis([ModeIndex(*m) for m in key.excited_modes]),
            ModeBasis([ModeIndex(*m) for m in key.ground_modes]),
        )
    return ModeBasis(enumerate_modes(key.shells_e)), ModeBasis(enumerate_modes(key.shells_g))


def read_cache(path: str | Path, expected: TensorKey) -> AlphaTensor:
    """Load a cached tensor; raise CacheMismatchError unless the header matches *expected*."""
    header, payload = _split(Path(path).read_bytes())
    if header.get("format") != "barload-alpha" or header.get("version") != config.CACHE_FORMAT_VERSION:
        raise CacheMismatchError(f"unsupported cache format/version in {path}")
    try:
        stored = TensorKey.from_dict(header["key"])
    except (KeyError, TypeError) as exc:
        raise CacheMismatchError(f"malformed cache key: {exc}") from exc
    if stored != expected:
        raise CacheMismatchError(f"cache key {stored} does not match requested {expected}")

    excited, ground = _bases(stored)
    dim = len(excited) * len(ground)
    try:
        with np.load(io.BytesIO(payload)) as data:
            upper_r, upper_i = data["real"], data["imag"]
    except Exception as exc:  # corrupt npz payloads surface as assorted numpy/zip errors
        raise CacheMismatchError(f"unreadable cache payload: {exc}") from exc
    iu = np.triu_indices(dim)
    if upper_r.shape != iu[0].shape or upper_i.shape != iu[0].shape:
        raise CacheMismatchError("cache payload size does not match its header")

    def unpack(upper: np.ndarray) -> np.ndarray:
        full = np.zeros((dim, dim), dtype=complex)
        full[iu] = upper
        lower = np.tril_indices(dim, -1)
        full[lower] = full.T[lower].conj()
        return full

    return AlphaTensor(excited=excited, ground=ground, real=unpack(upper_r), imag=unpack(upper_i), key=stored)


def load_or_build(
    path: str | Path | None,
    expected: TensorKey,
    build: Callable[[], AlphaTensor],
) -> tuple[AlphaTensor, str]:
    """Return ``(tensor, status)`` with status ``hit``, ``miss``, ``rebuild`` or ``nocache``."""
    if path is None:
        return build(), "nocache"
    path = Path(path)
    if not path.is_file():
        tensor = build()
        write_cache(tensor, path)
        return tensor, "miss"
    try:
        tensor = read_cache(path, expected)
        logger.info("alpha cache hit %s", path)
        return tensor, "hit"
    except CacheMismatchError as exc:
        logger.warning("alpha cache %s rejected (%s); rebuilding", path, exc)
        tensor = build()
        write_cache(tensor, path)
        return tensor, "rebuild"
