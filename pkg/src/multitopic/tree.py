"""Dirichlet tree over the two vocabularies for vocabulary-link models.

Structure: a root whose children are one internal node per translation
concept plus one direct leaf per untranslated word. Each concept node has
two leaves, one per language. Words in several concepts get one leaf per
membership and never a direct root leaf.

Counting semantics: concept-edge counts pool tokens of both languages
(this is where topic knowledge crosses languages), while each language
normalizes the root distribution over its own reachable children, so a
tree with no concepts reduces exactly to per-language LDA.
"""

from __future__ import annotations

import numpy as np

from .corpus import Vocabulary
from .dictionary import BilingualDictionary
from .errors import DataError


class DirichletTree:
    def __init__(
        self,
        dictionary: BilingualDictionary,
        v1: Vocabulary,
        v2: Vocabulary,
        k: int,
    ):
        self.n_topics = k
        self.n_concepts = len(dictionary.concepts)
        self.vocab_sizes = (v1.size, v2.size)
        self.concepts_of_word: tuple[list[list[int]], list[list[int]]] = (
            [[] for _ in range(v1.size)],
            [[] for _ in range(v2.size)],
        )
        for c in dictionary.concepts:
            self.concepts_of_word[0][c.word1].append(c.concept_id)
            self.concepts_of_word[1][c.word2].append(c.concept_id)
        self.concept_word = (
            np.array([c.word1 for c in dictionary.concepts], dtype=np.int64),
            np.array([c.word2 for c in dictionary.concepts], dtype=np.int64),
        )
        self.n_untranslated = tuple(
            sum(1 for memberships in side if not memberships)
            for side in self.concepts_of_word
        )
        # per-topic counts on tree edges
        self.concept_topic = np.zeros((self.n_concepts, k), dtype=np.int64)
        self.leaf_topic = (
            np.zeros((self.n_concepts, k), dtype=np.int64),
            np.zeros((self.n_concepts, k), dtype=np.int64),
        )
        self.concept_total = np.zeros(k, dtype=np.int64)
        self.untrans_total = (
            np.zeros(k, dtype=np.int64),
            np.zeros(k, dtype=np.int64),
        )

    def root_children_prior(self, side: int, beta_root: float, beta: float) -> float:
        """Sum of priors over the root children visible to one language."""
        return self.n_concepts * beta_root + self.n_untranslated[side] * beta

    def root_total(self, side: int) -> np.ndarray:
        """Per-topic token count over one language's root children: pooled
        concept-edge counts plus that language's untranslated-leaf counts."""
        return self.concept_total + self.untrans_total[side]

    def increment(self, side: int, word: int, concept: int, topic: int, delta: int) -> None:
        """Apply `delta` (+1/-1) along the path of one token. `concept` is -1
        for an untranslated word (direct root leaf)."""
        if concept >= 0:
            self.concept_topic[concept, topic] += delta
            self.leaf_topic[side][concept, topic] += delta
            self.concept_total[topic] += delta
        else:
            self.untrans_total[side][topic] += delta

    def check_consistency(self, word_topic: tuple[np.ndarray, np.ndarray]) -> None:
        """Verify the count invariants against per-side word-topic tables.

        Raises DataError on any mismatch; used by debug mode.
        """
        if not np.array_equal(
            self.concept_topic, self.leaf_topic[0] + self.leaf_topic[1]
        ):
            raise DataError("concept-node counts do not equal the sum of their leaves")
        if not np.array_equal(self.concept_total, self.concept_topic.sum(axis=0)):
            raise DataError("pooled concept totals out of sync")
        for side in (0, 1):
            expected_untrans = np.zeros_like(self.untrans_total[side])
            for w, memberships in enumerate(self.concepts_of_word[side]):
                if memberships:
                    total = word_topic[side][w]
                    summed = self.leaf_topic[side][memberships].sum(axis=0)
                    if not np.array_equal(total, summed):
                        raise DataError(
                            f"leaf counts for word {w} on side {side} do not sum to its word-topic counts"
                        )
                else:
                    expected_untrans += word_topic[side][w]
            if not np.array_equal(expected_untrans, self.untrans_total[side]):
                raise DataError(f"untranslated totals out of sync on side {side}")

    def zero_counts(self) -> None:
        self.concept_topic[:] = 0
        self.leaf_topic[0][:] = 0
        self.leaf_topic[1][:] = 0
        self.concept_total[:] = 0
        self.untrans_total[0][:] = 0
        self.untrans_total[1][:] = 0


def build_tree(
    dictionary: BilingualDictionary, v1: Vocabulary, v2: Vocabulary, k: int
) -> DirichletTree:
    return DirichletTree(dictionary, v1, v2, k)
