"""Two-stage architecture optimization.

Stage 1 alternates a gradient step on the architecture logits with inner
gradient steps on the model parameters, both against the combined objective
loss + lambda * normalized expected latency, evaluating on the validation
split each epoch and keeping the best logits.  Stage 2 freezes a pruned
architecture and trains the parameters on the plain loss, checkpointing the
best validation value at a fixed interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..latency import LatencyTable, softmax_weights
from .space import ArchLogits, DiscreteArch, SearchSpace, one_hot_weights
from .surrogate import SurrogateEvaluator


class SearchDivergedError(RuntimeError):
    """The search produced a non-finite loss."""

    def __init__(self, epoch: int, message: str = "non-finite loss"):
        super().__init__(f"{message} at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class Stage1Budget:
    epochs: int = 50
    theta_iters: int = 10
    alpha_lr: float = 0.05
    theta_lr: float = 0.01

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("need at least one epoch")
        if self.theta_iters < 0:
            raise ValueError("theta_iters must be >= 0")


@dataclass(frozen=True)
class Stage2Budget:
    iters: int = 200
    eval_interval: int = 10
    theta_lr: float = 0.01

    def __post_init__(self):
        if self.iters < 0:
            raise ValueError("iters must be >= 0")
        if self.eval_interval < 1:
            raise ValueError("eval_interval must be >= 1")


@dataclass
class Stage1Result:
    arch: ArchLogits
    theta: np.ndarray
    best_val_loss: float
    val_history: list[float] = field(default_factory=list)


@dataclass
class Stage2Result:
    params: np.ndarray
    best_val_loss: float
    val_history: list[float] = field(default_factory=list)
    best_history: list[float] = field(default_factory=list)


def _edge_latencies(space: SearchSpace, table: LatencyTable) -> dict[str, np.ndarray]:
    """Per kind: instance-weighted latency of each candidate op on one edge."""
    out = {}
    for kind in space.kinds():
        template = space.op_template(kind)
        lats = np.array([table.mean_ms(template.with_op(op)) for op in space.ops])
        out[kind] = lats * space.instance_count(kind)
    return out


def max_latency_ms(space: SearchSpace, table: LatencyTable) -> float:
    """Latency of the architecture putting all weight on the slowest op per edge."""
    lats = _edge_latencies(space, table)
    return math.fsum(
        space.n_positions * float(lats[kind].max()) for kind in space.kinds()
    )


def relaxed_latency_ms(space: SearchSpace, arch: ArchLogits,
                       table: LatencyTable) -> float:
    """Softmax-weighted expected latency of relaxed logits over all edge instances."""
    lats = _edge_latencies(space, table)
    terms = []
    for kind in space.kinds():
        logits = arch.by_kind[kind]
        for pos in range(space.n_positions):
            w = softmax_weights(logits[pos])
            terms.append(float(w @ lats[kind]))
    return math.fsum(terms)


def arch_weights(space: SearchSpace, arch: ArchLogits) -> dict[str, np.ndarray]:
    """Per-kind softmax weights, row per edge position."""
    return {
        kind: np.vstack([
            softmax_weights(arch.by_kind[kind][p]) for p in range(space.n_positions)
        ])
        for kind in space.kinds()
    }


def total_loss(
    space: SearchSpace,
    arch: ArchLogits,
    theta: np.ndarray,
    evaluator: SurrogateEvaluator,
    table: LatencyTable,
    lam: float,
    split: str = "train",
) -> float:
    """Tracking loss plus lambda times the normalized latency term.

    The latency term is expected latency divided by the max-latency
    architecture's value, so it lies in (0, 1] and lambda values stay
    comparable across tables.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    track = evaluator.loss(arch_weights(space, arch), np.asarray(theta), split)
    if lam == 0.0:
        return track
    norm = max_latency_ms(space, table)
    return track + lam * (relaxed_latency_ms(space, arch, table) / norm)


def _alpha_gradient(
    space: SearchSpace,
    arch: ArchLogits,
    theta: np.ndarray,
    evaluator: SurrogateEvaluator,
    lat_vectors: dict[str, np.ndarray],
    norm: float,
    lam: float,
) -> dict[str, np.ndarray]:
    """Exact gradient of total_loss w.r.t. the logits via the softmax Jacobian."""
    weights = arch_weights(space, arch)
    g_w, _ = evaluator.grad(weights, theta, "train")
    grads = {}
    for kind in space.kinds():
        w = weights[kind]
        g = np.asarray(g_w[kind], dtype=np.float64).copy()
        if lam > 0.0:
            g = g + lam * lat_vectors[kind][None, :] / norm
        # d loss / d logits = W * (g - (W . g)) per row
        dot = (w * g).sum(axis=1, keepdims=True)
        grads[kind] = w * (g - dot)
    return grads


def stage1_search(
    space: SearchSpace,
    evaluator: SurrogateEvaluator,
    table: LatencyTable,
    lam: float,
    budget: Stage1Budget = Stage1Budget(),
    seed: int = 0,
) -> Stage1Result:
    """Search the relaxed architecture under a latency-weighted objective.

    Per epoch: one gradient step on the logits, `theta_iters` gradient steps
    on the parameters (both on the train split), then a validation
    evaluation; the logits with the best validation total loss are returned.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    rng = np.random.default_rng(seed)
    arch = ArchLogits.random(space, rng)
    theta = rng.normal(0.0, 0.5, size=evaluator.theta_dim)
    lat_vectors = _edge_latencies(space, table)
    norm = max_latency_ms(space, table)

    best_val = math.inf
    best_arch = arch.copy()
    best_theta = theta.copy()
    history = []
    for epoch in range(budget.epochs):
        grads = _alpha_gradient(space, arch, theta, evaluator, lat_vectors, norm, lam)
        for kind in space.kinds():
            arch.by_kind[kind] -= budget.alpha_lr * grads[kind]
        if not arch.is_finite():
            raise SearchDivergedError(epoch, "non-finite logits")
        for _ in range(budget.theta_iters):
            _, g_theta = evaluator.grad(arch_weights(space, arch), theta, "train")
            theta = theta - budget.theta_lr * g_theta
        val = total_loss(space, arch, theta, evaluator, table, lam, "val")
        if not math.isfinite(val):
            raise SearchDivergedError(epoch)
        history.append(val)
        if val < best_val:
            best_val = val
            best_arch = arch.copy()
            best_theta = theta.copy()
    return Stage1Result(
        arch=best_arch, theta=best_theta, best_val_loss=best_val, val_history=history
    )


def stage2_train(
    space: SearchSpace,
    arch: DiscreteArch,
    evaluator: SurrogateEvaluator,
    budget: Stage2Budget = Stage2Budget(),
    seed: int = 0,
) -> Stage2Result:
    """Train parameters for a frozen pruned architecture on the plain loss.

    No latency term: the architecture no longer changes.  The parameters at
    the best periodic validation evaluation are returned; with a zero budget
    the initial parameters come back untouched.
    """
    rng = np.random.default_rng(seed)
    theta = rng.normal(0.0, 0.5, size=evaluator.theta_dim)
    weights = one_hot_weights(arch, space)

    best_val = evaluator.loss(weights, theta, "val")
    best_theta = theta.copy()
    history = [best_val]
    best_history = [best_val]
    for t in range(1, budget.iters + 1):
        _, g_theta = evaluator.grad(weights, theta, "train")
        theta = theta - budget.theta_lr * g_theta
        if t % budget.eval_interval == 0 or t == budget.iters:
            val = evaluator.loss(weights, theta, "val")
            if not math.isfinite(val):
                raise SearchDivergedError(t)
            history.append(val)
            if val < best_val:
                best_val = val
                best_theta = theta.copy()
            best_history.append(best_val)
    return Stage2Result(
        params=best_theta,
        best_val_loss=best_val,
        val_history=history,
        best_history=best_history,
    )
