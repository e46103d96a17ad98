"""Command-line front end for the augmentation pipeline.

Subcommands: prepare, augment, train, evaluate, pipeline, sweep. Every
value in a config file can be overridden by a flag; flags win. Outputs are
written to a temp file and renamed, so failed runs leave nothing partial.
"""

from __future__ import annotations

import dataclasses
import json
import os
import statistics
import sys

import click
import numpy as np

from . import augment as augment_mod
from . import cluster as cluster_mod
from . import cooccur, data, evaluate as evaluate_mod, factorize, linkpred
from .config import ClusterConfig, RunConfig, load_config_file, stream_seed, worker_count


def _fail(msg: str) -> None:
    raise click.ClickException(msg)


def _atomic(path: str, writer) -> None:
    """Run writer(tmp_path) then rename tmp over path."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_graph(dataset_dir: str) -> data.KnowledgeGraph:
    paths = [os.path.join(dataset_dir, f"{s}.txt") for s in ("train", "valid", "test")]
    for p in paths:
        if not os.path.exists(p):
            _fail(f"missing dataset file: {p}")
    try:
        return data.load_dataset(*paths)
    except (data.ParseError, ValueError, OSError) as e:
        _fail(str(e))


def _merge_cfg(config: str | None, **flags) -> RunConfig:
    cfg = load_config_file(config) if config else RunConfig()
    run_updates = {}
    for key in ("dataset_dir", "out_dir", "model", "eval_mode", "num_aug",
                "exclude_train", "workers", "seed"):
        if flags.get(key) is not None:
            run_updates[key] = flags[key]
    cfg = dataclasses.replace(cfg, **run_updates)

    nnmf_updates = {k: flags[f"nnmf_{k}"] for k in ("rank", "alpha", "l1_mix")
                    if flags.get(f"nnmf_{k}") is not None}
    if nnmf_updates:
        cfg = dataclasses.replace(cfg, nnmf=dataclasses.replace(cfg.nnmf, **nnmf_updates))

    cl_updates = {k: flags[f"cluster_{k}"] for k in ("algorithm", "n_clusters", "linkage",
                                                     "eps", "min_pts")
                  if flags.get(f"cluster_{k}") is not None}
    if cl_updates:
        cfg = dataclasses.replace(cfg, cluster=dataclasses.replace(cfg.cluster, **cl_updates))

    tr_updates = {k: flags[f"train_{k}"] for k in ("epochs", "dim", "exponent_k", "batch_size",
                                                   "lr", "margin", "negatives", "norm_ord")
                  if flags.get(f"train_{k}") is not None}
    if tr_updates:
        cfg = dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, **tr_updates))
    return cfg.with_seed(cfg.seed)


# shared option decorators ---------------------------------------------------

def _common_opts(f):
    for opt in reversed([
        click.option("--config", type=click.Path(exists=True), default=None,
                     help="key=value config file; flags override it"),
        click.option("--dataset", "dataset_dir", type=click.Path(), default=None,
                     help="directory holding train.txt/valid.txt/test.txt"),
        click.option("--out", "out_dir", type=click.Path(), default=None),
        click.option("--seed", type=int, default=None),
    ]):
        f = opt(f)
    return f


def _augment_opts(f):
    for opt in reversed([
        click.option("--num-aug", "num_aug", type=int, default=None,
                     help="number of triples to generate (L)"),
        click.option("--rank", "nnmf_rank", type=int, default=None),
        click.option("--alpha", "nnmf_alpha", type=float, default=None),
        click.option("--l1-mix", "nnmf_l1_mix", type=float, default=None),
        click.option("--cluster-alg", "cluster_algorithm",
                     type=click.Choice(["agglomerative", "dbscan"]), default=None),
        click.option("--n-clusters", "cluster_n_clusters", type=int, default=None),
        click.option("--linkage", "cluster_linkage",
                     type=click.Choice(["ward", "average"]), default=None),
        click.option("--eps", "cluster_eps", type=float, default=None),
        click.option("--min-pts", "cluster_min_pts", type=int, default=None),
        click.option("--exclude-train", "exclude_train", is_flag=True, default=None),
        click.option("--workers", type=int, default=None),
    ]):
        f = opt(f)
    return f


def _train_opts(f):
    for opt in reversed([
        click.option("--model", type=click.Choice(["transe", "rotate"]), default=None),
        click.option("--epochs", "train_epochs", type=int, default=None),
        click.option("--dim", "train_dim", type=int, default=None),
        click.option("--exponent-k", "train_exponent_k", type=int, default=None),
        click.option("--batch-size", "train_batch_size", type=int, default=None),
        click.option("--lr", "train_lr", type=float, default=None),
        click.option("--margin", "train_margin", type=float, default=None),
        click.option("--negatives", "train_negatives", type=int, default=None),
        click.option("--norm-ord", "train_norm_ord", type=int, default=None),
        click.option("--eval-mode", "eval_mode",
                     type=click.Choice(["raw", "filtered"]), default=None),
    ]):
        f = opt(f)
    return f


@click.group()
def main():
    """Knowledge-graph augmentation and link-prediction toolkit."""


# ---------------------------------------------------------------------------


@main.command()
@_common_opts
def prepare(config, dataset_dir, out_dir, seed):
    """Load a dataset, write dictionaries and a stats report."""
    cfg = _merge_cfg(config, dataset_dir=dataset_dir, out_dir=out_dir, seed=seed)
    g = _load_graph(cfg.dataset_dir)
    stats = data.graph_stats(g)
    _atomic(os.path.join(cfg.out_dir, "entities.dict"),
            lambda p: data.write_dictionary(g.entity_names, p))
    _atomic(os.path.join(cfg.out_dir, "relations.dict"),
            lambda p: data.write_dictionary(g.relation_names, p))
    _atomic(os.path.join(cfg.out_dir, "stats.json"),
            lambda p: _write_json(p, stats))
    click.echo(json.dumps(stats, sort_keys=True))


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(obj, sort_keys=True) + "\n")


def _run_augment(cfg: RunConfig, g: data.KnowledgeGraph) -> augment_mod.AugmentedSet:
    A = cooccur.build_head_relation(g)
    B = cooccur.build_tail_relation(g)
    C = cooccur.build_affinity(A, B)
    rank = min(cfg.nnmf.rank, min(C.shape))
    factors = factorize.nnmf(C, dataclasses.replace(cfg.nnmf, rank=rank))
    W_prime = cluster_mod.concat_factors(factors)
    if cfg.cluster.algorithm == "dbscan":
        partition = cluster_mod.dbscan(W_prime, cfg.cluster.eps, cfg.cluster.min_pts)
    else:
        n = cfg.cluster.n_clusters or cluster_mod.default_n_clusters(g.n_entities)
        partition = cluster_mod.agglomerative(W_prime, n, cfg.cluster.linkage)
    sampler_cfg = augment_mod.SamplerConfig(
        target_count=cfg.num_aug,
        seed=stream_seed(cfg.seed, "sampler"),
        exclude_train=cfg.exclude_train,
    )
    s = augment_mod.generate(g, partition, A, B, sampler_cfg,
                             workers=worker_count(cfg.workers))
    return s, sampler_cfg, partition.n_clusters


@main.command("augment")
@_common_opts
@_augment_opts
def augment_cmd(config, dataset_dir, out_dir, seed, **flags):
    """Build matrices, factorize, cluster and sample new triples."""
    cfg = _merge_cfg(config, dataset_dir=dataset_dir, out_dir=out_dir, seed=seed, **flags)
    g = _load_graph(cfg.dataset_dir)
    sampler_cfg = augment_mod.SamplerConfig(
        target_count=cfg.num_aug, seed=stream_seed(cfg.seed, "sampler"),
        exclude_train=cfg.exclude_train)
    try:
        if cfg.num_aug == 0:
            click.echo("warning: --num-aug 0 produces an empty augmented set", err=True)
            s, n_clusters = augment_mod.AugmentedSet(triples=[], provenance=[]), 0
        else:
            s, sampler_cfg, n_clusters = _run_augment(cfg, g)
    except ValueError as e:
        _fail(str(e))
    aug_path = os.path.join(cfg.out_dir, "augmented.tsv")
    meta_path = os.path.join(cfg.out_dir, "augmented.meta")
    _atomic(aug_path, lambda p: data.write_triples(s.triples, g, p))
    _atomic(meta_path, lambda p: augment_mod.write_meta(s, sampler_cfg, n_clusters, p))
    click.echo(f"wrote {len(s)} triples to {aug_path}")


def _run_train_eval(cfg: RunConfig, g: data.KnowledgeGraph,
                    aug_triples: list, seed: int) -> dict:
    run = cfg.with_seed(seed)
    model, history = linkpred.train(g, aug_triples, run.train, variant=run.model)
    metrics = evaluate_mod.evaluate(model, g.test, run.eval_mode, g)
    record = {"variant": run.model, "seed": seed,
              "augmented": len(aug_triples), "eval_mode": run.eval_mode}
    record.update(metrics.as_dict())
    return record, model, history


def _emit_metrics(cfg: RunConfig, records: list[dict]) -> None:
    rows = list(records)
    if len(records) > 1:
        agg = {"variant": records[0]["variant"], "seed": "aggregate",
               "augmented": records[0]["augmented"], "eval_mode": records[0]["eval_mode"]}
        for key in ("mrr", "mr", "hits@1", "hits@3", "hits@5", "hits@10"):
            vals = [r[key] for r in records]
            agg[key] = statistics.fmean(vals)
            agg[f"{key}_std"] = statistics.stdev(vals) if len(vals) > 1 else 0.0
        rows.append(agg)
    _atomic(os.path.join(cfg.out_dir, "metrics.json"),
            lambda p: _write_json(p, rows))
    for r in rows:
        click.echo(json.dumps(r, sort_keys=True))
    hdr = f"{'seed':>10} {'MRR':>8} {'MR':>10} {'H@1':>6} {'H@3':>6} {'H@5':>6} {'H@10':>6}"
    click.echo(hdr, err=True)
    for r in rows:
        click.echo(
            f"{str(r['seed']):>10} {r['mrr']:8.4f} {r['mr']:10.1f} "
            f"{r['hits@1']:6.2f} {r['hits@3']:6.2f} {r['hits@5']:6.2f} {r['hits@10']:6.2f}",
            err=True)


def _parse_seeds(seed: int | None, seeds: str | None) -> list[int]:
    if seeds:
        return [int(s) for s in seeds.split(",") if s.strip()]
    return [seed if seed is not None else 0]


@main.command("train")
@_common_opts
@_train_opts
@click.option("--aug", "aug_file", type=click.Path(exists=True), default=None,
              help="augmented triples TSV from the augment command")
@click.option("--seeds", type=str, default=None, help="comma-separated seed list")
def train_cmd(config, dataset_dir, out_dir, seed, aug_file, seeds, **flags):
    """Train a link predictor (optionally with augmentation) and evaluate it."""
    cfg = _merge_cfg(config, dataset_dir=dataset_dir, out_dir=out_dir, seed=seed, **flags)
    g = _load_graph(cfg.dataset_dir)
    aug_triples = augment_mod.load_augmented(aug_file, g) if aug_file else []
    records = []
    for s in _parse_seeds(cfg.seed, seeds):
        try:
            record, model, history = _run_train_eval(cfg, g, aug_triples, s)
        except FloatingPointError as e:
            _fail(str(e))
        records.append(record)
        suffix = f".seed{s}" if seeds else ""
        _atomic(os.path.join(cfg.out_dir, f"model{suffix}.ckpt"),
                lambda p: linkpred.save_model(model, p))
        _atomic(os.path.join(cfg.out_dir, f"history{suffix}.csv"),
                lambda p: linkpred.save_history(history, p))
    _emit_metrics(cfg, records)


@main.command("evaluate")
@_common_opts
@click.option("--model-file", type=click.Path(exists=True), required=True)
@click.option("--eval-mode", "eval_mode", type=click.Choice(["raw", "filtered"]), default=None)
def evaluate_cmd(config, dataset_dir, out_dir, seed, model_file, eval_mode):
    """Evaluate a saved checkpoint on the test split."""
    cfg = _merge_cfg(config, dataset_dir=dataset_dir, out_dir=out_dir,
                     seed=seed, eval_mode=eval_mode)
    g = _load_graph(cfg.dataset_dir)
    model = linkpred.load_model(model_file)
    metrics = evaluate_mod.evaluate(model, g.test, cfg.eval_mode, g)
    record = {"variant": model.variant, "seed": cfg.seed, "eval_mode": cfg.eval_mode}
    record.update(metrics.as_dict())
    _atomic(os.path.join(cfg.out_dir, "metrics.json"), lambda p: _write_json(p, [record]))
    click.echo(json.dumps(record, sort_keys=True))


@main.command("pipeline")
@_common_opts
@_augment_opts
@_train_opts
def pipeline_cmd(config, dataset_dir, out_dir, seed, **flags):
    """prepare -> augment -> train -> evaluate in one deterministic run."""
    cfg = _merge_cfg(config, dataset_dir=dataset_dir, out_dir=out_dir, seed=seed, **flags)
    g = _load_graph(cfg.dataset_dir)
    _atomic(os.path.join(cfg.out_dir, "stats.json"),
            lambda p: _write_json(p, data.graph_stats(g)))
    try:
        if cfg.num_aug > 0:
            s, _, _ = _run_augment(cfg, g)
            aug_triples = s.triples
            _atomic(os.path.join(cfg.out_dir, "augmented.tsv"),
                    lambda p: data.write_triples(s.triples, g, p))
        else:
            aug_triples = []
        record, model, history = _run_train_eval(cfg, g, aug_triples, cfg.seed)
    except (ValueError, FloatingPointError) as e:
        _fail(str(e))
    _atomic(os.path.join(cfg.out_dir, "model.ckpt"), lambda p: linkpred.save_model(model, p))
    _atomic(os.path.join(cfg.out_dir, "history.csv"), lambda p: linkpred.save_history(history, p))
    _emit_metrics(cfg, [record])


_SWEEP_AXES = ("num-aug", "exponent-k", "cluster-alg")


@main.command("sweep")
@_common_opts
@_augment_opts
@_train_opts
@click.option("--axis", type=click.Choice(_SWEEP_AXES), required=True)
@click.option("--values", type=str, required=True,
              help="comma-separated values for the swept axis")
@click.option("--seeds", type=str, default=None)
def sweep_cmd(config, dataset_dir, out_dir, seed, axis, values, seeds, **flags):
    """Sweep one axis, holding everything else fixed; emits a tidy CSV."""
    cfg = _merge_cfg(config, dataset_dir=dataset_dir, out_dir=out_dir, seed=seed, **flags)
    g = _load_graph(cfg.dataset_dir)
    seed_list = _parse_seeds(cfg.seed, seeds)
    rows = []
    for value in [v.strip() for v in values.split(",") if v.strip()]:
        point = cfg
        if axis == "num-aug":
            point = dataclasses.replace(cfg, num_aug=int(value))
        elif axis == "exponent-k":
            point = dataclasses.replace(
                cfg, train=dataclasses.replace(cfg.train, exponent_k=int(value)))
        else:
            if value not in ("agglomerative", "dbscan"):
                _fail(f"unknown clustering algorithm {value!r}")
            point = dataclasses.replace(
                cfg, cluster=dataclasses.replace(cfg.cluster, algorithm=value))
        for s in seed_list:
            run = point.with_seed(s)
            try:
                if run.num_aug > 0:
                    aug = _run_augment(run, g)[0].triples
                else:
                    aug = []
                record, _, _ = _run_train_eval(run, g, aug, s)
            except (ValueError, FloatingPointError) as e:
                _fail(str(e))
            rows.append((axis, value, s, record))
            click.echo(f"{axis}={value} seed={s} mrr={record['mrr']!r}", err=True)

    def write_csv(p):
        with open(p, "w", encoding="utf-8") as f:
            f.write("axis,value,seed,mrr,mr,h1,h3,h5,h10\n")
            for ax, value, s, r in rows:
                f.write(f"{ax},{value},{s},{r['mrr']!r},{r['mr']!r},"
                        f"{r['hits@1']!r},{r['hits@3']!r},{r['hits@5']!r},{r['hits@10']!r}\n")

    path = os.path.join(cfg.out_dir, "sweep.csv")
    _atomic(path, write_csv)
    click.echo(f"wrote {len(rows)} rows to {path}")


if __name__ == "__main__":
    sys.exit(main())
