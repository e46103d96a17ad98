"""Triple file ingestion and knowledge-graph containers.

A knowledge graph is a set of (head, relation, tail) triples over dense
integer ids, with head != tail everywhere (self loops are excluded by
definition and dropped from source files).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

log = logging.getLogger(__name__)

Triple = tuple[int, int, int]


class ParseError(ValueError):
    """A dataset line that does not split into exactly three fields."""


@dataclass
class KnowledgeGraph:
    entity_names: list[str]
    relation_names: list[str]
    train: list[Triple]
    valid: list[Triple]
    test: list[Triple]
    # ingestion bookkeeping
    dropped_self_loops: dict[str, int] = field(default_factory=dict)
    dropped_duplicates: int = 0

    def __post_init__(self):
        self.entity_ids = {name: i for i, name in enumerate(self.entity_names)}
        self.relation_ids = {name: i for i, name in enumerate(self.relation_names)}
        self.train_set = set(self.train)

    @property
    def n_entities(self) -> int:
        return len(self.entity_names)

    @property
    def n_relations(self) -> int:
        return len(self.relation_names)

    def unseen_in_train(self) -> set[int]:
        """Entities referenced only by valid/test."""
        seen = set()
        for h, _, t in self.train:
            seen.add(h)
            seen.add(t)
        out = set()
        for split in (self.valid, self.test):
            for h, _, t in split:
                if h not in seen:
                    out.add(h)
                if t not in seen:
                    out.add(t)
        return out


def _read_lines(path: str) -> Iterable[tuple[int, str, str, str]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = [p.strip() for p in line.rstrip("\n").split("\t")]
            if len(parts) != 3:
                raise ParseError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}"
                )
            yield lineno, parts[0], parts[1], parts[2]


def load_dataset(train_path: str, valid_path: str, test_path: str) -> KnowledgeGraph:
    """Load train/valid/test triple files into one graph.

    Ids are assigned in first-appearance order over train, then valid, then
    test, so ingestion is deterministic. Self-loop lines are dropped with a
    counted warning; duplicate train lines are deduplicated likewise.
    """
    entity_names: list[str] = []
    relation_names: list[str] = []
    entity_ids: dict[str, int] = {}
    relation_ids: dict[str, int] = {}

    def ent(name: str) -> int:
        i = entity_ids.get(name)
        if i is None:
            i = len(entity_names)
            entity_ids[name] = i
            entity_names.append(name)
        return i

    def rel(name: str) -> int:
        i = relation_ids.get(name)
        if i is None:
            i = len(relation_names)
            relation_ids[name] = i
            relation_names.append(name)
        return i

    splits: dict[str, list[Triple]] = {}
    self_loop_counts: dict[str, int] = {}
    dup_count = 0
    seen_train: set[Triple] = set()
    for split_name, path in (("train", train_path), ("valid", valid_path), ("test", test_path)):
        triples: list[Triple] = []
        loops = 0
        for lineno, h, r, t in _read_lines(path):
            if h == t:
                loops += 1
                continue
            triple = (ent(h), rel(r), ent(t))
            if split_name == "train":
                if triple in seen_train:
                    dup_count += 1
                    continue
                seen_train.add(triple)
            triples.append(triple)
        if loops:
            log.warning("%s: dropped %d self-loop line(s)", path, loops)
        self_loop_counts[split_name] = loops
        splits[split_name] = triples

    if dup_count:
        log.warning("%s: dropped %d duplicate train line(s)", train_path, dup_count)
    if not splits["train"]:
        raise ValueError(f"{train_path}: empty train split after filtering")

    return KnowledgeGraph(
        entity_names=entity_names,
        relation_names=relation_names,
        train=splits["train"],
        valid=splits["valid"],
        test=splits["test"],
        dropped_self_loops=self_loop_counts,
        dropped_duplicates=dup_count,
    )


def graph_stats(g: KnowledgeGraph) -> dict:
    """Exact split counts plus train density |train| / (|E|(|E|-1)|R|)."""
    n_e, n_r = g.n_entities, g.n_relations
    possible = n_e * (n_e - 1) * n_r
    return {
        "n_entities": n_e,
        "n_relations": n_r,
        "n_train": len(g.train),
        "n_valid": len(g.valid),
        "n_test": len(g.test),
        "n_total": len(g.train) + len(g.valid) + len(g.test),
        "density": len(g.train) / possible if possible else 0.0,
        "unseen_in_train": len(g.unseen_in_train()),
        "dropped_self_loops": dict(g.dropped_self_loops),
        "dropped_duplicates": g.dropped_duplicates,
    }


def write_dictionary(names: list[str], path: str) -> None:
    """Export an id dictionary as `id<TAB>name` lines."""
    with open(path, "w", encoding="utf-8") as f:
        for i, name in enumerate(names):
            f.write(f"{i}\t{name}\n")


def write_triples(triples: Iterable[Triple], g: KnowledgeGraph, path: str) -> None:
    """Write id-resolved triples back to the tab-separated text format."""
    with open(path, "w", encoding="utf-8") as f:
        for h, r, t in triples:
            f.write(f"{g.entity_names[h]}\t{g.relation_names[r]}\t{g.entity_names[t]}\n")
