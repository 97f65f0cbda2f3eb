from .approx import ApproxIndex, ApproxParams, build_approx, recall_vs_exact, search_approx
from .exact import InvertedIndex, Posting, build_exact, search_exact
from .format import IndexFormatError, load, save


def search(index, query, k):
    """Dispatch to the exact or approximate searcher for ``index``."""
    if isinstance(index, ApproxIndex):
        return search_approx(index, query, k)
    return search_exact(index, query, k)


__all__ = [
    "ApproxIndex",
    "ApproxParams",
    "IndexFormatError",
    "InvertedIndex",
    "Posting",
    "build_approx",
    "build_exact",
    "load",
    "recall_vs_exact",
    "save",
    "search",
    "search_approx",
    "search_exact",
]
