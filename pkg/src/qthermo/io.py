"""Matrix JSON codecs and atomic file output.

Matrices travel as {"dim": n, "re": [[...]], "im": [[...]]} with the
imaginary block optional on input.  Writers go through a same-directory
temporary file and ``os.replace`` so partially written outputs never land
under the final name.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .errors import ScenarioError


def matrix_to_json(mat) -> dict:
    """Encode a square complex matrix (or wrapper with ``.mat``)."""
    a = np.asarray(getattr(mat, "mat", mat), dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ScenarioError(f"expected a square matrix, got shape {a.shape}")
    return {
        "dim": int(a.shape[0]),
        "re": a.real.tolist(),
        "im": a.imag.tolist(),
    }


def matrix_from_json(obj, what: str = "matrix") -> np.ndarray:
    """Decode a matrix object; raises ScenarioError with context on misuse."""
    if not isinstance(obj, dict):
        raise ScenarioError(f"{what}: expected an object, got {type(obj).__name__}")
    if "dim" not in obj or "re" not in obj:
        raise ScenarioError(f'{what}: needs "dim" and "re" fields')
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros((dim, dim))), dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{what}: malformed numeric data: {exc}") from None
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise ScenarioError(
            f"{what}: blocks must be {dim}x{dim}, got re {re.shape} and im {im.shape}"
        )
    a = re + 1j * im
    if not np.isfinite(re).all() or not np.isfinite(im).all():
        raise ScenarioError(f"{what}: entries must be finite")
    return a


def atomic_write_text(path: str, text: str) -> None:
    """Write text to ``path`` through a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def dump_json(path: str, obj) -> None:
    """Deterministic JSON dump: sorted keys, two-space indent, newline at end."""
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
