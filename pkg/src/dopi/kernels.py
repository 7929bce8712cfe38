"""Hot numeric kernels: disease similarity and symptom score accumulation.

Two interchangeable backends. The default is numba-jitted loops; setting the
env var DOPI_NUMBA to 0/false/off (or numba failing to import) selects the
pure-numpy path. Both produce the same values; the jitted path avoids
temporary arrays and wins once graphs reach a few hundred nodes.

See benchmarks/bench_kernels.py for a side-by-side timing of the backends.
"""

import os

import numpy as np

_FALSE_VALUES = {"0", "false", "off", "no"}


def _numba_requested() -> bool:
    return os.environ.get("DOPI_NUMBA", "1").strip().lower() not in _FALSE_VALUES


def cosine_sims_np(weights: np.ndarray, patient: np.ndarray) -> np.ndarray:
    """Cosine similarity of the patient vector against every disease column.

    weights: (n_symptoms, n_diseases) float64, entries in [0, 1].
    patient: (n_symptoms,) float64 of 0/1 entries.
    Zero-norm columns (and a zero patient vector) score 0.
    """
    dots = weights.T @ patient
    col_sq = np.einsum("ki,ki->i", weights, weights)
    p_sq = float(patient @ patient)
    out = np.zeros(weights.shape[1])
    if p_sq == 0.0:
        return out
    mask = col_sq > 0.0
    # sqrt of the product, not product of sqrts: keeps self-similarity at
    # exactly 1.0.
    out[mask] = dots[mask] / np.sqrt(col_sq[mask] * p_sq)
    return out


def weighted_scores_np(weights: np.ndarray, sims: np.ndarray) -> np.ndarray:
    """Per-symptom score: sum over diseases of edge weight times similarity."""
    return weights @ sims


_HAS_NUMBA = False
if _numba_requested():
    try:
        from numba import njit

        @njit(cache=True)
        def _cosine_sims_nb(weights, patient):  # pragma: no cover - jitted
            n_s, n_d = weights.shape
            out = np.zeros(n_d)
            p_sq = 0.0
            for k in range(n_s):
                p_sq += patient[k] * patient[k]
            if p_sq == 0.0:
                return out
            for i in range(n_d):
                dot = 0.0
                w_sq = 0.0
                for k in range(n_s):
                    w = weights[k, i]
                    dot += w * patient[k]
                    w_sq += w * w
                if w_sq > 0.0:
                    out[i] = dot / np.sqrt(w_sq * p_sq)
            return out

        @njit(cache=True)
        def _weighted_scores_nb(weights, sims):  # pragma: no cover - jitted
            n_s, n_d = weights.shape
            out = np.zeros(n_s)
            for k in range(n_s):
                acc = 0.0
                for i in range(n_d):
                    acc += weights[k, i] * sims[i]
                out[k] = acc
            return out

        _HAS_NUMBA = True
    except ImportError:
        _HAS_NUMBA = False

BACKEND = "numba" if _HAS_NUMBA else "numpy"


def cosine_sims(weights: np.ndarray, patient: np.ndarray) -> np.ndarray:
    if _HAS_NUMBA:
        return _cosine_sims_nb(weights, patient)
    return cosine_sims_np(weights, patient)


def weighted_scores(weights: np.ndarray, sims: np.ndarray) -> np.ndarray:
    if _HAS_NUMBA:
        return _weighted_scores_nb(weights, sims)
    return weighted_scores_np(weights, sims)
