"""Pretrain on a planted-partition graph, then fit the detection head.

Prints the loss every 100 epochs, how well blocks separate in embedding
space, and the test-split scores. Takes about 15 s on one core.

    python demos/02_sbm_detection.py [seed]
"""
import sys

import numpy as np

from structcl.graph import make_split
from structcl.metrics import evaluate, format_report
from structcl.pipeline import TrainConfig, detect, pretrain
from structcl.synth import planted_partition

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
g = planted_partition(4, 50, 0.3, 0.01, seed=seed)
print(f"{g.n_nodes} nodes, {g.n_edges} edges, {g.n_classes} blocks")

cfg = TrainConfig(seed=seed)


def progress(epoch, loss):
    if epoch % 100 == 0:
        print(f"  epoch {epoch:4d}  loss {loss:.4f}")


pre = pretrain(g, cfg, callback=progress)
z, y = pre.embeddings, g.labels
sims = z @ z.T
same = y[:, None] == y[None, :]
print(f"mean cosine within blocks {sims[same].mean():.3f}, across {sims[~same].mean():.3f}")

split = make_split(g, seed)
det = detect(g, z, split, cfg)
print(f"head stopped after {det.epochs_run} epochs (best val acc {det.best_val_acc:.3f})")
print(format_report(evaluate(y[split.test], det.predictions[split.test])))
