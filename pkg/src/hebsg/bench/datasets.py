"""Reader for the libsvm sparse text format (``label idx:value ...``, 1-based indices).

Datasets are not bundled.  Relative paths resolve against ``$HEBSG_DATA``
(default: the working directory); the files used in the experiments are the
``space_ga_scale`` and ``glass.scale`` sets from the libsvm dataset collection.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

import numpy as np

DATA_ENV = "HEBSG_DATA"

GROUPINGS = {
    None: None,
    "none": None,
    "glass": ({1, 2, 3}, {5, 6, 7}),
    "pm1": ({-1}, {1}),
}


class LibsvmFormatError(ValueError):
    pass


def resolve_dataset(path) -> Path:
    p = Path(path).expanduser()
    if p.is_absolute():
        return p
    return Path(os.environ.get(DATA_ENV, ".")) / p


def load_libsvm(path, m_limit: Optional[int] = None, label_grouping: Optional[str] = None,
                n_features: Optional[int] = None):
    """Load a libsvm file as a dense matrix and a label vector.

    Parameters
    ----------
    path : path-like
        File to read; relative paths are resolved against ``$HEBSG_DATA``.
    m_limit : int, optional
        Keep only the first ``m_limit`` data rows.
    label_grouping : {None, "glass", "pm1"}
        ``"glass"`` maps labels 1, 2, 3 to -1 and 5, 6, 7 to +1; ``"pm1"``
        only checks that labels are already +-1.  Any other label is an error.
    n_features : int, optional
        Number of columns; defaults to the largest index seen.

    Returns
    -------
    X : ndarray, shape (m, n)
    y : ndarray, shape (m,)
    """
    if label_grouping not in GROUPINGS:
        raise ValueError(f"unknown label grouping {label_grouping!r}")
    path = resolve_dataset(path)
    labels, rows, linenos = [], [], []
    max_idx = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if m_limit is not None and len(rows) >= m_limit:
                break
            parts = line.split()
            try:
                labels.append(float(parts[0]))
            except ValueError:
                raise LibsvmFormatError(f"{path}:{lineno}: bad label {parts[0]!r}") from None
            feats = {}
            for tok in parts[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    i, v = int(idx), float(val)
                except ValueError:
                    i = None
                if not sep or i is None:
                    raise LibsvmFormatError(f"{path}:{lineno}: bad feature {tok!r}")
                if i < 1:
                    raise LibsvmFormatError(f"{path}:{lineno}: feature index {i} is not 1-based")
                feats[i] = v
                max_idx = max(max_idx, i)
            rows.append(feats)
            linenos.append(lineno)
    if not rows:
        raise LibsvmFormatError(f"{path}: no data rows")
    n = max_idx if n_features is None else n_features
    if max_idx > n:
        raise LibsvmFormatError(f"{path}: feature index {max_idx} exceeds n_features={n}")
    X = np.zeros((len(rows), n))
    for r, feats in enumerate(rows):
        for i, v in feats.items():
            X[r, i - 1] = v
    y = np.array(labels)
    grouping = GROUPINGS[label_grouping]
    if grouping is not None:
        neg, pos = grouping
        out = np.empty_like(y)
        for r, lab in enumerate(y):
            if lab in neg:
                out[r] = -1.0
            elif lab in pos:
                out[r] = 1.0
            else:
                raise LibsvmFormatError(
                    f"{path}:{linenos[r]}: label {lab:g} not covered by grouping {label_grouping!r}")
        y = out
    return X, y
