from __future__ import annotations

import numpy as np


def id_ranks(doc_ids: list[str]) -> np.ndarray:
    """Position of each ordinal in ascending external-id order (the tie-break key)."""
    order = sorted(range(len(doc_ids)), key=doc_ids.__getitem__)
    ranks = np.empty(len(doc_ids), dtype=np.int64)
    ranks[order] = np.arange(len(doc_ids))
    return ranks
