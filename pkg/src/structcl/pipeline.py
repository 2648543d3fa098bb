"""Contrastive pretraining followed by a supervised GCN detection head."""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import autodiff as ad
from . import rng
from .autodiff import Adam, Tape, Tensor
from .contrastive import PairContext, total_loss
from .encoders import GcnParams, SssParams, encode_views, glorot, normalize_adjacency, zeros
from .errors import ConfigError, DegenerateInputError, TrainingError
from .graph import DataGraph, SplitAssignment, adjacency_as_attrs, make_split
from .metrics import evaluate
from .mining import StructureView, build_structure_view, parse_patterns

@dataclass(frozen=True)
class TrainConfig:
    pretrain_epochs: int = 1000
    detect_epochs: int = 500
    lr: float = 5e-4
    tau: float = 1.0
    d: int = 32
    sss_hidden: int = 128
    gcn_hidden: int = 128
    out_dim: int = 64
    head_hidden: int = 64
    patience: int = 50
    seed: int = 0
    patterns: str = "triangle"
    use_S: bool = True
    use_SSS: bool = True
    use_SCL: bool = True
    no_attributes: bool = False

    def __post_init__(self):
        for name in ("pretrain_epochs", "detect_epochs", "d", "sss_hidden", "gcn_hidden",
                     "out_dim", "head_hidden", "patience"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if not self.tau > 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        parse_patterns(self.patterns)

    def ablate(self, what: str | None) -> "TrainConfig":
        if what in (None, "", "none"):
            return self
        key = {"S": "use_S", "SSS": "use_SSS", "SCL": "use_SCL"}.get(what)
        if key is None:
            raise ConfigError(f"unknown ablation {what!r}; choose S, SSS or SCL")
        return replace(self, **{key: False})

    def digest(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in sorted(asdict(self).items()))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class Wiring:
    """How an ablation variant assembles the model."""

    identity_similarity: bool
    trainable_semantics: bool
    train_encoder: bool


def apply_ablation(cfg: TrainConfig) -> Wiring:
    return Wiring(identity_similarity=not cfg.use_S,
                  trainable_semantics=cfg.use_SSS,
                  train_encoder=cfg.use_SCL)


@dataclass
class Encoder:
    """Everything pretraining needs to run a forward pass."""

    sss: SssParams | None
    gcn: GcnParams
    s: sp.csr_matrix
    x: np.ndarray
    norm_adj: sp.csr_matrix
    norm_high_adj: sp.csr_matrix
    h0_fixed: Tensor | None = None

    def params(self) -> list[Tensor]:
        out = [] if self.sss is None else self.sss.params()
        return out + self.gcn.params()

    def named_params(self) -> dict:
        return {p.name: p for p in self.params()}

    def forward(self):
        return encode_views(self.sss, self.gcn, self.s, self.x, self.norm_adj,
                            self.norm_high_adj, h0=self.h0_fixed)


def prepare_graph(g: DataGraph, cfg: TrainConfig) -> DataGraph:
    if cfg.no_attributes:
        return adjacency_as_attrs(g)
    if g.attrs is None:
        raise ConfigError("graph has no attributes; enable no_attributes to use adjacency rows")
    return g


def build_encoder(g: DataGraph, view: StructureView, cfg: TrainConfig) -> Encoder:
    wiring = apply_ablation(cfg)
    n = g.n_nodes
    s = sp.identity(n, format="csr") if wiring.identity_similarity else view.sim
    x = g.attrs
    init = rng.stream(cfg.seed, "init")
    sss = h0 = None
    if wiring.trainable_semantics:
        sss = SssParams.init(init, n, x.shape[1], cfg.sss_hidden, cfg.d)
    else:
        proj = rng.stream(cfg.seed, "project")
        p_s = glorot(proj, n, cfg.d).data
        p_x = glorot(proj, x.shape[1], cfg.d).data
        h0 = Tensor(np.hstack([np.asarray(s @ p_s), x @ p_x]))
    gcn = GcnParams.init(init, 2 * cfg.d, cfg.gcn_hidden, cfg.out_dim)
    return Encoder(sss, gcn, s, x, normalize_adjacency(g.adjacency()),
                   normalize_adjacency(view.high_adj), h0)


@dataclass
class PretrainResult:
    embeddings: np.ndarray
    raw: np.ndarray
    loss_history: list
    encoder: Encoder
    view: StructureView
    epochs_run: int

    def checkpoint(self) -> dict:
        return {k: v.data for k, v in self.encoder.named_params().items()}


def pretrain(g: DataGraph, cfg: TrainConfig, view: StructureView | None = None,
             callback=None) -> PretrainResult:
    """Train the encoders with the contrastive loss; returns unit-norm view-1 embeddings."""
    g = prepare_graph(g, cfg)
    if view is None:
        view = build_structure_view(g, parse_patterns(cfg.patterns))
    enc = build_encoder(g, view, cfg)
    ctx = PairContext(view.high_adj, cfg.tau)
    history = []
    epochs = 0
    if apply_ablation(cfg).train_encoder:
        opt = Adam(enc.params(), lr=cfg.lr)
        for epoch in range(1, cfg.pretrain_epochs + 1):
            opt.zero_grad()
            with Tape() as tape:
                z1, z2 = enc.forward()
                loss = total_loss(z1, z2, ctx)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingError(f"loss is {value} at pretrain epoch {epoch}")
            tape.backward(loss)
            del tape
            try:
                opt.step()
            except TrainingError as exc:
                raise TrainingError(f"pretrain epoch {epoch}: {exc}") from exc
            history.append(value)
            epochs = epoch
            if callback is not None:
                callback(epoch, value)
    z, _ = enc.forward()
    raw = z.data
    emb = raw / np.maximum(np.linalg.norm(raw, axis=1, keepdims=True), ad.L2_EPS)
    return PretrainResult(emb, raw, history, enc, view, epochs)


@dataclass
class HeadParams:
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    @classmethod
    def init(cls, gen, n_in, hidden, n_classes):
        return cls(glorot(gen, n_in, hidden, "head.w1"), zeros(hidden, "head.b1"),
                   glorot(gen, hidden, n_classes, "head.w2"), zeros(n_classes, "head.b2"))

    def params(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def snapshot(self):
        return [p.data.copy() for p in self.params()]

    def restore(self, snap):
        for p, a in zip(self.params(), snap):
            p.data = a.copy()

    def logits(self, norm_adj, x: Tensor) -> Tensor:
        h = ad.relu(ad.add(ad.sparse_matmul(norm_adj, ad.matmul(x, self.w1)), self.b1))
        return ad.add(ad.sparse_matmul(norm_adj, ad.matmul(h, self.w2)), self.b2)


@dataclass
class DetectResult:
    predictions: np.ndarray
    head: HeadParams
    best_val_acc: float
    best_epoch: int
    epochs_run: int


def detect(g: DataGraph, z: np.ndarray, split: SplitAssignment, cfg: TrainConfig) -> DetectResult:
    """Fit the GCN head on train nodes; early-stop on validation accuracy."""
    if g.labels is None:
        raise ConfigError("detection needs ground-truth labels")
    y = g.labels
    train, val = split.train, split.val
    if np.unique(y[train]).size < 2:
        raise DegenerateInputError("training split holds a single community")
    n_classes = g.n_classes
    norm_adj = normalize_adjacency(g.adjacency())
    x = Tensor(z)
    head = HeadParams.init(rng.stream(cfg.seed, "detect"), z.shape[1], cfg.head_hidden, n_classes)
    opt = Adam(head.params(), lr=cfg.lr)
    best = (-1.0, np.inf)
    best_epoch, snap, stale, epochs = 0, head.snapshot(), 0, 0
    for epoch in range(1, cfg.detect_epochs + 1):
        opt.zero_grad()
        with Tape() as tape:
            logp = ad.log_softmax(head.logits(norm_adj, x))
            loss = ad.scale(ad.total(ad.pick(ad.take_rows(logp, train), y[train])), -1.0 / train.size)
        if not np.isfinite(loss.item()):
            raise TrainingError(f"loss is {loss.item()} at detect epoch {epoch}")
        # the forward pass already reflects the parameters of the previous step
        if val.size:
            val_acc = float(np.mean(logp.data[val].argmax(axis=1) == y[val]))
            val_loss = float(-logp.data[val, y[val]].mean())
        else:
            val_acc, val_loss = 0.0, loss.item()
        if val_acc > best[0] or (val_acc == best[0] and val_loss < best[1]):
            best, best_epoch, snap, stale = (val_acc, val_loss), epoch - 1, head.snapshot(), 0
        else:
            stale += 1
            if stale >= cfg.patience:
                epochs = epoch
                break
        tape.backward(loss)
        opt.step()
        epochs = epoch
    head.restore(snap)
    pred = head.logits(norm_adj, x).data.argmax(axis=1)
    return DetectResult(pred, head, best[0], best_epoch, epochs)


@dataclass
class EvalReport:
    ACC: float
    NMI: float
    MF1: float
    seed: int
    config_hash: str
    pretrain_epochs: int
    detect_epochs: int
    extra: dict = field(default_factory=dict)

    def metrics(self) -> dict:
        return {"ACC": self.ACC, "NMI": self.NMI, "MF1": self.MF1}


@dataclass
class RunResult:
    pretrain: PretrainResult
    detect: DetectResult
    split: SplitAssignment
    report: EvalReport


def run(g: DataGraph, cfg: TrainConfig, view: StructureView | None = None) -> RunResult:
    """Pretrain, detect, and score on the test split."""
    split = make_split(g, cfg.seed)
    pre = pretrain(g, cfg, view)
    det = detect(g, pre.embeddings, split, cfg)
    test = split.test
    scores = evaluate(g.labels[test], det.predictions[test])
    report = EvalReport(scores["ACC"], scores["NMI"], scores["MF1"], cfg.seed, cfg.digest(),
                        pre.epochs_run, det.epochs_run)
    return RunResult(pre, det, split, report)
