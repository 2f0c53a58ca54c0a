"""Semantic equivalence filter.

Pairwise similarity under the configured method feeds a threshold graph;
groups are its connected components (transitive closure, so two thoughts can
share a group through a chain of near-duplicates even if their direct
similarity is below the threshold). The representative is the member the
model scored highest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import GroupingMethod
from .providers.base import EmbeddingVector, ProviderBundle


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric m x m similarities in [0, 1] with a unit diagonal."""

    entries: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        m = len(self.entries)
        for i, row in enumerate(self.entries):
            if len(row) != m:
                raise ValueError(f"row {i} has {len(row)} entries, expected {m}")
            if row[i] != 1.0:
                raise ValueError(f"diagonal entry ({i},{i}) must be 1.0")
            for j, value in enumerate(row):
                if not 0.0 <= value <= 1.0:
                    raise ValueError(f"entry ({i},{j}) = {value} outside [0, 1]")
                if self.entries[j][i] != value:
                    raise ValueError(f"matrix not symmetric at ({i},{j})")

    @property
    def size(self) -> int:
        return len(self.entries)

    def at(self, i: int, j: int) -> float:
        return self.entries[i][j]

    @classmethod
    def from_rows(cls, rows: list[list[float]]) -> SimilarityMatrix:
        return cls(tuple(tuple(row) for row in rows))


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine clamped to [0, 1]; negative similarity counts as dissimilar."""
    dot = sum(x * y for x, y in zip(a.values, b.values))
    norm_a = math.sqrt(sum(x * x for x in a.values))
    norm_b = math.sqrt(sum(y * y for y in b.values))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return min(max(dot / (norm_a * norm_b), 0.0), 1.0)


def pairwise_similarity(
    texts: list[str],
    method: GroupingMethod,
    providers: ProviderBundle,
) -> SimilarityMatrix:
    """Similarity of every text pair under the configured method.

    Embedding: clamped cosine of the texts' vectors. Logical: bidirectional
    entailment, min of the two NLI entailment probabilities.
    """
    if not texts:
        raise ValueError("pairwise_similarity requires at least one text")
    m = len(texts)
    rows = [[1.0] * m for _ in range(m)]
    if method is GroupingMethod.EMBEDDING:
        vectors = providers.embedder.embed(texts)
        for i in range(m):
            for j in range(i + 1, m):
                sim = cosine_similarity(vectors[i], vectors[j])
                rows[i][j] = rows[j][i] = sim
    elif method is GroupingMethod.LOGICAL:
        for i in range(m):
            for j in range(i + 1, m):
                forward = providers.nli.nli(texts[i], texts[j]).entail_prob
                backward = providers.nli.nli(texts[j], texts[i]).entail_prob
                sim = min(forward, backward)
                rows[i][j] = rows[j][i] = sim
    else:
        raise ValueError(f"no similarity defined for method {method!r}")
    return SimilarityMatrix.from_rows(rows)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # Anchor on the smaller index so component ids are stable.
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass
class IndexGroup:
    """A group over candidate indices, before tree node ids exist.

    ``evidence`` holds every above-threshold pair inside the group as
    (i, j, similarity) with i < j.
    """

    members: list[int]
    representative: int
    evidence: list[tuple[int, int, float]] = field(default_factory=list)


def group_thoughts(
    texts: list[str],
    scores: list[float],
    matrix: SimilarityMatrix,
    threshold: float,
) -> list[IndexGroup]:
    """Partition thoughts into equivalence groups.

    Edge (i, j) exists iff similarity >= threshold; groups are the connected
    components. The representative is the member with the highest score
    (ties: lowest index). Groups come back ordered by their smallest member.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    m = len(texts)
    if not (m == len(scores) == matrix.size):
        raise ValueError("texts, scores, and matrix sizes disagree")

    uf = _UnionFind(m)
    above: list[tuple[int, int, float]] = []
    for i in range(m):
        for j in range(i + 1, m):
            sim = matrix.at(i, j)
            if sim >= threshold:
                uf.union(i, j)
                above.append((i, j, sim))

    components: dict[int, list[int]] = {}
    for i in range(m):
        components.setdefault(uf.find(i), []).append(i)

    groups = []
    for root in sorted(components, key=lambda r: min(components[r])):
        members = sorted(components[root])
        member_set = set(members)
        representative = max(members, key=lambda i: (scores[i], -i))
        evidence = [(i, j, s) for i, j, s in above if i in member_set]
        groups.append(IndexGroup(members, representative, evidence))
    return groups


def consistency_signal(group_count: int, m: int) -> float:
    """How strongly m thoughts collapsed into groups, in [0, 1].

    1 means all thoughts were equivalent (high self-consistency), 0 means all
    distinct. A single thought counts as fully consistent.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 1 <= group_count <= m:
        raise ValueError(f"group_count {group_count} outside [1, {m}]")
    if m == 1:
        return 1.0
    return (m - group_count) / (m - 1)
