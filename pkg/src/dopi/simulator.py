"""Ground-truth-driven simulated patient.

Honest by construction: answers are the membership function of the truth
symptom set, unless a misjudgment rate is set, in which case individual
answers flip with that probability. Everything is deterministic per seed.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, UnknownNodeError
from .kg import CaseRecord, KnowledgeGraph


@dataclass
class SimulatedPatient:
    truth: CaseRecord
    initial_disclosure: int | float = 2
    misjudgment_rate: float = 0.0
    seed: int = 0
    random_disclosure: bool = False
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not (0.0 <= self.misjudgment_rate < 1.0):
            raise DataError(
                f"misjudgment_rate must be in [0, 1), got {self.misjudgment_rate}"
            )
        self._rng = np.random.default_rng(self.seed)

    def _disclosure_count(self) -> int:
        n = len(self.truth.symptoms)
        if isinstance(self.initial_disclosure, float):
            count = round(self.initial_disclosure * n)
        else:
            count = self.initial_disclosure
        return max(0, min(n, int(count)))

    def initial_complaint(self, g: KnowledgeGraph) -> set[str]:
        """The symptoms volunteered up front.

        Default mode picks the highest-weight symptoms of the true disease
        (the most prominent ones), ties by id; random_disclosure picks a
        uniform subset instead, deterministic per seed.
        """
        for s in self.truth.symptoms:
            if not g.has_symptom(s):
                raise UnknownNodeError(f"truth symptom {s!r} not in graph")
        count = self._disclosure_count()
        if count == 0:
            return set()
        pool = sorted(self.truth.symptoms)
        if self.random_disclosure:
            chosen = self._rng.choice(len(pool), size=count, replace=False)
            return {pool[i] for i in chosen}
        ranked = sorted(pool, key=lambda s: (-g.weight(s, self.truth.disease), s))
        return set(ranked[:count])

    def answer(self, symptom: str, rng: np.random.Generator | None = None) -> bool:
        """True = present. Flips the truthful answer with misjudgment_rate."""
        truthful = symptom in self.truth.symptoms
        if self.misjudgment_rate == 0.0:
            return truthful
        r = rng if rng is not None else self._rng
        if r.random() < self.misjudgment_rate:
            return not truthful
        return truthful
