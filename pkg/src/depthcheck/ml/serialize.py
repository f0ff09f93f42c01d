"""Model bytes: a small integrity envelope around a canonical JSON payload.

Layout: 8-byte magic with a format version, a 32-byte SHA-256 of the
payload, then the payload itself (JSON with sorted keys and no float
truncation, so identical models serialize to identical bytes).
"""

from __future__ import annotations

import hashlib
import json

from ..errors import ModelFormatError
from .models import _MODEL_TYPES, Model

MAGIC = b"DCMODEL\x01"


def _canonical_json(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def save_model(model: Model) -> bytes:
    """Serialize any trained model (ensembles included) to bytes."""
    if model.kind not in _MODEL_TYPES:
        raise ModelFormatError(f"cannot serialize kind {model.kind!r}")
    try:
        payload = _canonical_json({"kind": model.kind, "doc": model.to_doc()})
    except ValueError as exc:
        raise ModelFormatError(f"model parameters are not serializable: {exc}") from exc
    return MAGIC + hashlib.sha256(payload).digest() + payload


def load_model(blob: bytes) -> Model:
    """Parse model bytes back; any corruption raises ModelFormatError."""
    if len(blob) < len(MAGIC) + 32 + 2:
        raise ModelFormatError("model blob too short")
    if blob[: len(MAGIC)] != MAGIC:
        raise ModelFormatError("bad magic or unsupported format version")
    digest = blob[len(MAGIC) : len(MAGIC) + 32]
    payload = blob[len(MAGIC) + 32 :]
    if hashlib.sha256(payload).digest() != digest:
        raise ModelFormatError("checksum mismatch, model bytes are corrupt")
    try:
        doc = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"payload is not valid JSON: {exc}") from exc
    kind = doc.get("kind")
    if kind not in _MODEL_TYPES:
        raise ModelFormatError(f"unknown model kind {kind!r}")
    try:
        return _MODEL_TYPES[kind].from_doc(doc["doc"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed {kind} document: {exc}") from exc
