"""Consultation quality metrics.

All three are plain means over per-patient terms, so they are pure and
order-independent.
"""

from .errors import DataError


def diagnostic_accuracy(results) -> float:
    """Fraction of (predicted, truth) pairs with an exact id match."""
    results = list(results)
    if not results:
        raise DataError("diagnostic_accuracy over an empty result list")
    correct = sum(1 for predicted, truth in results if predicted == truth)
    return correct / len(results)


def qa_ratio(sessions) -> float:
    """Mean of per-session question rounds over answer rounds.

    Every session must have at least one answer round (the diagnosis turn
    guarantees it); a zero denominator is an upstream contract violation.
    """
    sessions = list(sessions)
    if not sessions:
        raise DataError("qa_ratio over an empty session list")
    total = 0.0
    for q, a in sessions:
        if a < 1:
            raise DataError(f"answer round count must be >= 1, got {a}")
        total += q / a
    return total / len(sessions)


def interrogation_distance(pairs) -> float:
    """Mean squared round-count gap between model runs and reference dialogues.

    Each element pairs the model's (questions, answers) with the reference's.
    """
    pairs = list(pairs)
    if not pairs:
        raise DataError("interrogation_distance over an empty pair list")
    total = 0.0
    for (qm, am), (qd, ad) in pairs:
        total += (qm - qd) ** 2 + (am - ad) ** 2
    return total / len(pairs)
