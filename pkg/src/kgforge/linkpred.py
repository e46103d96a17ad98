"""TransE and RotatE embedding models with a margin-ranking trainer.

Scoring functions:
    TransE:  -||h + r - t||      (L1 or L2, real embeddings)
    RotatE:  -||h o r - t||^2    (complex embeddings; relations are unit
                                  rotations parameterized by phase angles,
                                  so their moduli are exactly 1)

Training uses SGD on hinge loss with uniform negative sampling and a
schedule that mixes in a growing prefix of the augmented set: at epoch e
of E the first floor((e/E)^k * |S|) triples of S join the positives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .data import KnowledgeGraph, Triple

TRANSE = "transe"
ROTATE = "rotate"


@dataclass
class EmbeddingModel:
    variant: str
    entity_emb: np.ndarray    # (E, d) for TransE, (E, 2d) re|im for RotatE
    relation_emb: np.ndarray  # (R, d): translation vectors or phase angles
    dim: int
    norm_ord: int = 1         # TransE distance norm

    @classmethod
    def init(cls, variant: str, n_entities: int, n_relations: int, dim: int,
             rng: np.random.Generator, norm_ord: int = 1) -> "EmbeddingModel":
        bound = 6.0 / np.sqrt(dim)
        if variant == TRANSE:
            ent = rng.uniform(-bound, bound, size=(n_entities, dim))
            rel = rng.uniform(-bound, bound, size=(n_relations, dim))
            ent /= np.linalg.norm(ent, axis=1, keepdims=True)
        elif variant == ROTATE:
            ent = rng.uniform(-bound, bound, size=(n_entities, 2 * dim))
            rel = rng.uniform(-np.pi, np.pi, size=(n_relations, dim))
        else:
            raise ValueError(f"unknown variant {variant!r}")
        return cls(variant=variant, entity_emb=ent, relation_emb=rel,
                   dim=dim, norm_ord=norm_ord)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    dim: int = 50
    exponent_k: int = 2
    batch_size: int = 512
    lr: float = 0.01
    margin: float = 1.0
    negatives: int = 5
    norm_ord: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.exponent_k < 1:
            raise ValueError("exponent_k must be a positive integer")
        if self.norm_ord not in (1, 2):
            raise ValueError("norm_ord must be 1 or 2")
        if self.epochs < 1 or self.batch_size < 1 or self.negatives < 1:
            raise ValueError("epochs, batch_size and negatives must be >= 1")


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    aug_count: list[int] = field(default_factory=list)
    val_mrr: list[float | None] = field(default_factory=list)


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------

def score_transe(model: EmbeddingModel, h: int, r: int, t: int) -> float:
    if model.variant != TRANSE:
        raise ValueError(f"model variant is {model.variant}, not transe")
    diff = model.entity_emb[h] + model.relation_emb[r] - model.entity_emb[t]
    return -float(np.linalg.norm(diff, ord=model.norm_ord))


def score_rotate(model: EmbeddingModel, h: int, r: int, t: int) -> float:
    if model.variant != ROTATE:
        raise ValueError(f"model variant is {model.variant}, not rotate")
    d = model.dim
    he = model.entity_emb[h, :d] + 1j * model.entity_emb[h, d:]
    te = model.entity_emb[t, :d] + 1j * model.entity_emb[t, d:]
    rot = np.exp(1j * model.relation_emb[r])
    diff = he * rot - te
    return -float(np.sum(diff.real**2 + diff.imag**2))


def score(model: EmbeddingModel, h: int, r: int, t: int) -> float:
    return (score_transe if model.variant == TRANSE else score_rotate)(model, h, r, t)


def score_candidates(model: EmbeddingModel, r: int, fixed: int, side: str,
                     candidates: np.ndarray) -> np.ndarray:
    """Vectorized scores for all candidate completions of one side.

    side='head' scores (c, r, fixed) for c in candidates; side='tail'
    scores (fixed, r, c).
    """
    ent, rel = model.entity_emb, model.relation_emb
    if model.variant == TRANSE:
        if side == "head":
            diff = ent[candidates] + rel[r] - ent[fixed]
        else:
            diff = ent[fixed] + rel[r] - ent[candidates]
        if model.norm_ord == 1:
            return -np.abs(diff).sum(axis=1)
        return -np.sqrt(np.einsum("ij,ij->i", diff, diff))
    d = model.dim
    cr, sr = np.cos(rel[r]), np.sin(rel[r])
    if side == "head":
        a, b = ent[candidates, :d], ent[candidates, d:]
        t_re, t_im = ent[fixed, :d], ent[fixed, d:]
    else:
        a, b = ent[fixed, :d], ent[fixed, d:]
        t_re, t_im = ent[candidates, :d], ent[candidates, d:]
    u_re = a * cr - b * sr
    u_im = a * sr + b * cr
    df_re = u_re - t_re
    df_im = u_im - t_im
    return -(np.einsum("ij,ij->i", df_re, df_re) + np.einsum("ij,ij->i", df_im, df_im))


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def negative_sample(g: KnowledgeGraph, positive: Triple, rng: np.random.Generator,
                    count: int) -> list[Triple]:
    """Corrupt the head or the tail (fair coin) with a uniform random entity.

    The corruption never equals the original entity, never reproduces the
    positive triple, and never creates a self loop.
    """
    h, r, t = positive
    n = g.n_entities
    if n < 3:
        # with two entities every corruption is the positive itself or a
        # self loop, so no valid negative exists
        raise ValueError("negative sampling needs at least 3 entities")
    out: list[Triple] = []
    while len(out) < count:
        corrupt_head = rng.random() < 0.5
        e = int(rng.integers(n))
        if corrupt_head:
            if e == h or e == t:
                continue
            out.append((e, r, t))
        else:
            if e == t or e == h:
                continue
            out.append((h, r, e))
    return out


def schedule_size(e: int, total_epochs: int, k: int, s_size: int) -> int:
    """floor((e/E)^k * |S|): augmented-prefix length for epoch e."""
    if not 1 <= e <= total_epochs:
        raise ValueError(f"epoch {e} outside [1, {total_epochs}]")
    return int((e / total_epochs) ** k * s_size)


def _corrupt_batch(pos: np.ndarray, n_entities: int, negatives: int,
                   rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Expanded positives and aligned corruptions, vectorized with
    resampling of the rare invalid draws."""
    rep = np.repeat(pos, negatives, axis=0)
    neg = rep.copy()
    m = len(rep)
    corrupt_head = rng.random(m) < 0.5
    cand = rng.integers(n_entities, size=m)
    bad = (cand == rep[:, 0]) | (cand == rep[:, 2])
    while bad.any():
        cand[bad] = rng.integers(n_entities, size=int(bad.sum()))
        bad = (cand == rep[:, 0]) | (cand == rep[:, 2])
    neg[corrupt_head, 0] = cand[corrupt_head]
    neg[~corrupt_head, 2] = cand[~corrupt_head]
    return rep, neg


def train(
    g: KnowledgeGraph,
    augmented: list[Triple],
    cfg: TrainConfig,
    variant: str = TRANSE,
    validate_every: int = 0,
) -> tuple[EmbeddingModel, TrainHistory]:
    """Margin-ranking SGD over train plus the scheduled augmented prefix.

    Deterministic for a fixed config: batch order, negative draws and
    initialization all derive from cfg.seed.
    """
    root = np.random.SeedSequence(cfg.seed)
    init_seq, batch_seq, neg_seq = root.spawn(3)
    model = EmbeddingModel.init(variant, g.n_entities, g.n_relations, cfg.dim,
                                np.random.default_rng(init_seq), cfg.norm_ord)
    batch_rng = np.random.default_rng(batch_seq)
    neg_rng = np.random.default_rng(neg_seq)

    train_arr = np.asarray(g.train, dtype=np.int64)
    aug_arr = np.asarray(augmented, dtype=np.int64).reshape(-1, 3)
    history = TrainHistory()

    for epoch in range(1, cfg.epochs + 1):
        r_e = schedule_size(epoch, cfg.epochs, cfg.exponent_k, len(aug_arr))
        if r_e:
            epoch_triples = np.vstack([train_arr, aug_arr[:r_e]])
        else:
            epoch_triples = train_arr
        order = batch_rng.permutation(len(epoch_triples))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = epoch_triples[order[start:start + cfg.batch_size]]
            rep, neg = _corrupt_batch(batch, g.n_entities, cfg.negatives, neg_rng)
            if variant == TRANSE:
                epoch_loss += _kernels.transe_batch(
                    model.entity_emb, model.relation_emb, rep, neg,
                    cfg.margin, cfg.lr, cfg.norm_ord)
                norms = np.linalg.norm(model.entity_emb, axis=1, keepdims=True)
                model.entity_emb /= np.maximum(norms, 1e-12)
            else:
                epoch_loss += _kernels.rotate_batch(
                    model.entity_emb, model.relation_emb, rep, neg,
                    cfg.margin, cfg.lr)
        if not np.isfinite(epoch_loss):
            raise FloatingPointError(
                f"non-finite loss {epoch_loss} at epoch {epoch}; lower the learning rate")
        history.loss.append(epoch_loss)
        history.aug_count.append(r_e)
        if validate_every and epoch % validate_every == 0 and g.valid:
            from .evaluate import evaluate

            history.val_mrr.append(evaluate(model, g.valid, "raw", g).mrr)
        else:
            history.val_mrr.append(None)
    return model, history


# ---------------------------------------------------------------------------
# checkpoint / history files
# ---------------------------------------------------------------------------

def save_model(model: EmbeddingModel, path: str) -> None:
    n_e = model.entity_emb.shape[0]
    n_r = model.relation_emb.shape[0]
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{model.variant} {n_e} {n_r} {model.dim} {model.norm_ord}\n")
        for row in model.entity_emb:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")
        for row in model.relation_emb:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_model(path: str) -> EmbeddingModel:
    with open(path, encoding="utf-8") as f:
        variant, n_e, n_r, dim, norm_ord = f.readline().split()
        n_e, n_r, dim = int(n_e), int(n_r), int(dim)
        rows = [np.array(f.readline().split(), dtype=np.float64) for _ in range(n_e + n_r)]
    return EmbeddingModel(
        variant=variant,
        entity_emb=np.vstack(rows[:n_e]),
        relation_emb=np.vstack(rows[n_e:]),
        dim=dim,
        norm_ord=int(norm_ord),
    )


def save_history(h: TrainHistory, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("epoch,loss,r_e,val_mrr\n")
        for i, (loss, r_e, mrr) in enumerate(zip(h.loss, h.aug_count, h.val_mrr), start=1):
            mrr_s = "" if mrr is None else repr(mrr)
            f.write(f"{i},{loss!r},{r_e},{mrr_s}\n")
