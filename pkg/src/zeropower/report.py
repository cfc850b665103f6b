"""Fingerprints and structured result files."""
import hashlib
import json

import numpy as np

from . import __version__

__all__ = ["model_fingerprint", "write_result", "read_result"]


def model_fingerprint(model, X=None):
    """Short SHA-256 digest of the family, ``a``, ``W`` and ``X``."""
    h = hashlib.sha256()
    h.update(model.family.encode())
    h.update(repr(float(model.a)).encode())
    h.update(str(model.n).encode())
    if model.weights is not None:
        h.update(np.ascontiguousarray(model.weights.entries).tobytes())
    if X is not None:
        entries = getattr(X, "entries", X)
        h.update(np.ascontiguousarray(np.asarray(entries, dtype=float)).tobytes())
    return h.hexdigest()[:16]


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return x


def write_result(path, payload, model, X=None, extra=None):
    """Write ``payload`` (a dict) as sorted JSON with fingerprint and version."""
    doc = {
        "result": _plain(payload),
        "model": {"family": model.family, "a": float(model.a), "n": int(model.n),
                  "fingerprint": model_fingerprint(model, X)},
        "version": __version__,
    }
    if extra:
        doc["config"] = _plain(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc


def read_result(path):
    with open(path) as fh:
        return json.load(fh)
