"""Command-line entry point: ``structcl <command> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import artifacts as art
from .autodiff import save_tensors
from .config import RunConfig, load_config, resolve
from .errors import ConfigError, StructCLError
from .graph import graph_info, load_graph, make_split, save_graph
from .metrics import evaluate, format_report
from .mining import build_structure_view, load_structure_view, parse_patterns, save_structure_view
from .pipeline import detect, pretrain, run
from .synth import planted_partition

log = logging.getLogger("structcl")


def _add_common(p, *, dataset=True, training=True):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")
    if dataset:
        p.add_argument("--edges")
        p.add_argument("--attrs")
        p.add_argument("--labels")
    if training:
        p.add_argument("--patterns")
        p.add_argument("--no-attributes", action="store_true", default=None)
        p.add_argument("--ablate", choices=["S", "SSS", "SCL"])
        p.add_argument("--tau", type=float)
        p.add_argument("--d", type=int)
        p.add_argument("--mined", help="cached mining output from 'mine'")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="structcl", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="print dataset statistics")
    _add_common(p, training=False)

    p = sub.add_parser("mine", help="count patterns; write per-edge counts/similarity and G^H")
    _add_common(p)

    p = sub.add_parser("pretrain", help="contrastive pretraining; writes embeddings")
    _add_common(p)

    p = sub.add_parser("detect", help="train the detection head on pretrained embeddings")
    _add_common(p)
    p.add_argument("--embeddings", help="defaults to <out-dir>/embeddings.txt")

    p = sub.add_parser("eval", help="score predictions against labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--test-split-seed", type=int,
                   help="score only the test nodes of the split drawn with this seed")
    p.add_argument("--nmi", default="geometric", choices=["geometric", "arithmetic", "max"])

    p = sub.add_parser("export", help="write embeddings with labels as TSV")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels")
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate a planted-partition dataset")
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--p-in", type=float, required=True)
    p.add_argument("--p-out", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("sweep", help="pretrain+detect across values of d or tau")
    _add_common(p)
    p.add_argument("--param", required=True, choices=["d", "tau"])
    p.add_argument("--values", required=True, help="comma-separated")
    p.add_argument("--jobs", type=int, default=1)
    return ap


def _overrides(args) -> dict:
    out = {}
    for item in getattr(args, "set", []):
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    for key in ("seed", "patterns", "tau", "d", "edges", "attrs", "labels", "mined"):
        v = getattr(args, key, None)
        if v is not None:
            out[key] = v
    if getattr(args, "no_attributes", None):
        out["no_attributes"] = True
    abl = getattr(args, "ablate", None)
    if abl:
        out[{"S": "use_S", "SSS": "use_SSS", "SCL": "use_SCL"}[abl]] = False
    return out


def _run_config(args) -> RunConfig:
    if args.config:
        return load_config(args.config, _overrides(args))
    return resolve({}, _overrides(args))


def _load(rc: RunConfig):
    if not rc.edges:
        raise ConfigError("no edge list given (config key 'edges' or --edges)")
    for key in ("edges", "attrs", "labels"):
        path = getattr(rc, key)
        if path and not Path(path).exists():
            raise ConfigError(f"{key} file not found: {path}")
    return load_graph(rc.edges, rc.attrs, rc.labels)


def _out_dir(args) -> Path:
    if not args.out_dir:
        raise ConfigError("--out-dir is required")
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _view(rc, g):
    if rc.mined:
        if not Path(rc.mined).exists():
            raise ConfigError(f"mined file not found: {rc.mined}")
        view = load_structure_view(rc.mined, g.n_nodes)
        if view.edges.shape != g.edges.shape or (view.edges != g.edges).any():
            raise ConfigError(f"{rc.mined} does not match the edge list")
        return view
    return None


def cmd_info(args):
    g = _load(_run_config(args))
    info = graph_info(g)
    print("nodes  edges  avg_deg  attrs  comms")
    print(f"{info['nodes']}  {info['edges']}  {info['avg_degree']:.2f}  "
          f"{info['attrs'] or 'NA'}  {info['communities']}")
    return 0


def cmd_mine(args):
    rc = _run_config(args)
    g = _load(rc)
    out = _out_dir(args)
    view = build_structure_view(g, parse_patterns(rc.train.patterns))
    save_structure_view(view, out / "mined.txt", out / "high_edges.txt")
    print(f"mined {g.n_edges} edges; {view.high_edges.shape[0]} kept in the high-level graph; "
          f"max count {int(view.dic.max()) if view.dic.size else 0}")
    return 0


def cmd_pretrain(args):
    rc = _run_config(args)
    g = _load(rc)
    out = _out_dir(args)
    res = pretrain(g, rc.train, _view(rc, g))
    (out / "config.cfg").write_text(rc.to_text(relative_to=out))
    art.write_loss_history(out / "loss_history.csv", res.loss_history)
    save_tensors(out / "encoder.ckpt", res.checkpoint())
    art.write_embeddings(out / "embeddings.txt", res.embeddings)
    last = f"{res.loss_history[-1]:.4f}" if res.loss_history else "n/a (untrained)"
    print(f"pretrained {res.epochs_run} epochs; final loss {last}")
    return 0


def cmd_detect(args):
    rc = _run_config(args)
    g = _load(rc)
    out = _out_dir(args)
    emb_path = Path(args.embeddings) if args.embeddings else out / "embeddings.txt"
    if not emb_path.exists():
        raise ConfigError(f"embeddings file not found: {emb_path}")
    z = art.read_embeddings(emb_path)
    if z.shape[0] != g.n_nodes:
        raise ConfigError(f"{emb_path} has {z.shape[0]} rows for {g.n_nodes} nodes")
    split = make_split(g, rc.train.seed)
    det = detect(g, z, split, rc.train)
    art.write_predictions(out / "predictions.txt", det.predictions)
    save_tensors(out / "head.ckpt", {p.name: p for p in det.head.params()})
    scores = evaluate(g.labels[split.test], det.predictions[split.test])
    art.write_metrics(out / "metrics.txt", {
        **scores, "seed": rc.train.seed, "config_hash": rc.train.digest(),
        "best_val_acc": det.best_val_acc, "detect_epochs": det.epochs_run})
    print(format_report(scores))
    return 0


def cmd_eval(args):
    pred = art.read_predictions(args.pred)
    from .graph import read_labels, split_nodes
    truth = read_labels(args.labels)
    if pred.shape != truth.shape:
        raise ConfigError(f"{pred.size} predictions for {truth.size} labels")
    if args.test_split_seed is not None:
        idx = split_nodes(truth.size, args.test_split_seed).test
        pred, truth = pred[idx], truth[idx]
    print(format_report(evaluate(truth, pred, args.nmi)))
    return 0


def cmd_export(args):
    z = art.read_embeddings(args.embeddings)
    labels = None
    if args.labels:
        from .graph import read_labels
        labels = read_labels(args.labels)
    with open(args.out, "w") as fh:
        cols = ["node"] + (["label"] if labels is not None else []) + [f"z{i}" for i in range(z.shape[1])]
        fh.write("\t".join(cols) + "\n")
        for i, row in enumerate(z):
            head = [str(i)] + ([str(labels[i])] if labels is not None else [])
            fh.write("\t".join(head + [f"{v:.17g}" for v in row]) + "\n")
    return 0


def cmd_synth(args):
    g = planted_partition(args.blocks, args.size, args.p_in, args.p_out, args.seed)
    out = _out_dir(args)
    save_graph(g, out / "edges.txt", out / "attrs.txt", out / "labels.txt")
    (out / "dataset.cfg").write_text("edges = edges.txt\nattrs = attrs.txt\nlabels = labels.txt\n")
    print(f"wrote {g.n_nodes} nodes, {g.n_edges} edges to {out}")
    return 0


def _sweep_point(job):
    rc, g, view = job
    return run(g, rc.train, view).report.metrics()


def cmd_sweep(args):
    rc = _run_config(args)
    g = _load(rc)
    out = _out_dir(args)
    view = _view(rc, g)
    kind = float if args.param == "tau" else int
    try:
        values = [kind(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values: cannot parse {args.values!r}") from None
    jobs = [(replace(rc, train=replace(rc.train, **{args.param: v})), g, view) for v in values]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    lines = ["value,ACC,NMI,MF1"]
    lines += [f"{v},{m['ACC']:.17g},{m['NMI']:.17g},{m['MF1']:.17g}" for v, m in zip(values, results)]
    (out / f"sweep_{args.param}.csv").write_text("\n".join(lines) + "\n")
    for v, m in zip(values, results):
        print(f"{args.param}={v}  {format_report(m)}")
    return 0


COMMANDS = {"info": cmd_info, "mine": cmd_mine, "pretrain": cmd_pretrain, "detect": cmd_detect,
            "eval": cmd_eval, "export": cmd_export, "synth": cmd_synth, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (StructCLError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
