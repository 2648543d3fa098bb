"""Compare the full model against its three ablations on harder SBM graphs.

Blocks here are sparser and noisier than in the benchmark so the variants
have room to differ. Runs 4 variants x 3 seeds, a few minutes on one core.

    python demos/03_ablations.py
"""
import numpy as np

from structcl.pipeline import TrainConfig, run
from structcl.synth import planted_partition

variants = {"full": None, "w/o S": "S", "w/o SSS": "SSS", "w/o SCL": "SCL"}
seeds = (0, 1, 2)
graphs = [planted_partition(4, 50, 0.12, 0.03, seed=s, attributes=False) for s in seeds]

print(f"{'variant':10s} {'ACC':>6s} {'NMI':>6s}")
for name, ablate in variants.items():
    scores = []
    for s, g in zip(seeds, graphs):
        cfg = TrainConfig(seed=s, no_attributes=True, pretrain_epochs=300).ablate(ablate)
        rep = run(g, cfg).report
        scores.append((rep.ACC, rep.NMI))
    acc, nmi = np.median(scores, axis=0)
    print(f"{name:10s} {acc:6.3f} {nmi:6.3f}")
