import numpy as np
import pytest

from kgforge.data import KnowledgeGraph


def kg_from_triples(train, valid=(), test=(), n_entities=None, n_relations=None):
    """Build a graph directly from id triples, bypassing the file loader."""
    all_triples = list(train) + list(valid) + list(test)
    if n_entities is None:
        n_entities = 1 + max(max(h, t) for h, _, t in all_triples)
    if n_relations is None:
        n_relations = 1 + max(r for _, r, _ in all_triples)
    return KnowledgeGraph(
        entity_names=[f"e{i}" for i in range(n_entities)],
        relation_names=[f"r{i}" for i in range(n_relations)],
        train=list(train),
        valid=list(valid),
        test=list(test),
    )


def write_dataset(tmp_path, train, valid, test):
    """Write raw string triples to train/valid/test files, return the dir."""
    for name, rows in (("train", train), ("valid", valid), ("test", test)):
        with open(tmp_path / f"{name}.txt", "w") as f:
            for h, r, t in rows:
                f.write(f"{h}\t{r}\t{t}\n")
    return tmp_path


def translational_kg(held_out=(2, 4, 6, 7, 8)):
    """20-entity graph whose triples are exactly realizable by translations.

    Entities live at latent positions z(a_i) = i*u, z(b_i) = i*u + v.
    Relation 0 is the offset v (a_i -> b_i), relation 1 the offset u (chain
    steps within each group). The held-out split is a subset of the partner
    edges, whose endpoints all retain chain context in train.
    """
    triples = [(i, 0, 10 + i) for i in range(10)]
    for i in range(9):
        triples.append((i, 1, i + 1))
        triples.append((10 + i, 1, 11 + i))
    test = [(i, 0, 10 + i) for i in held_out]
    train = [t for t in triples if t not in test]
    return kg_from_triples(train, test=test, n_entities=20, n_relations=2)


@pytest.fixture
def toy3_kg():
    """The 3-triple graph used by the co-occurrence worked examples."""
    return kg_from_triples([(0, 0, 1), (0, 0, 2), (1, 1, 0)],
                           n_entities=3, n_relations=2)
