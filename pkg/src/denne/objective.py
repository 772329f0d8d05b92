"""Negative log-likelihood of the denoising model, its gradients, and SGD training.

The batch loss is

    sum_pos -log p_ij  +  sum_neg -log(1 - p_ij)
    + alpha_e * R(E) + alpha_u * R(U) + alpha_com * center prior

with ``p_ij = clamp(sigmoid(s_ij) + eps_ij)``. ``R(E)`` is either the sum of
squared noises or the mixture penalty ``sum_l beta_l (eps - mu_l)^2 / (2 var_l)``;
``R(U)`` is the plain squared norm, or the community penalty, plus
``alpha_deg * lam * sum(d)`` when the fitness prior is on.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from . import _kernels as K
from .graph import Graph
from .model import Model, clamp_prob, edge_prob, mixture_weights, pair_effective_probs, softmax
from .rng import substream
from .sampling import (NegativeSampler, TrainingPair, WalkConfig, corpus_pairs, draw_negatives,
                       generate_walks)

log = logging.getLogger(__name__)


class TrainingError(FloatingPointError):
    pass


@dataclass(frozen=True)
class LossBreakdown:
    proximity: float
    reg_noise: float
    reg_embed: float
    reg_prior_extras: float
    total: float
    alpha_e: float = 0.0
    alpha_u: float = 0.0
    alpha_extras: float = 0.0


@dataclass
class TrainReport:
    epochs: list[tuple[int, LossBreakdown, float]] = field(default_factory=list)

    def losses(self) -> list[float]:
        return [b.total for _, b, _ in self.epochs]

    def write_csv(self, stream: TextIO, seconds: bool = True) -> None:
        stream.write("epoch,proximity,reg_noise,reg_embed,reg_extras,total,seconds\n")
        for ep, b, sec in self.epochs:
            stream.write(f"{ep},{b.proximity:.12g},{b.reg_noise:.12g},{b.reg_embed:.12g},"
                         f"{b.reg_prior_extras:.12g},{b.total:.12g},{sec if seconds else 0.0:.3f}\n")


# --- scalar losses ---------------------------------------------------------------

def pair_loss(model: Model, pair: TrainingPair) -> float:
    i, j = pair.center, pair.context
    eps = 0.0 if model.config.freeze_noise else model.noise.get(i, j)
    p = clamp_prob(edge_prob(model, i, j) + eps, model.config.clamp)
    return -math.log(p) if pair.positive else -math.log(1.0 - p)


def noise_penalty(model: Model, eps: np.ndarray) -> np.ndarray:
    """Elementwise noise penalty under the active noise mode."""
    if model.config.adaptive:
        beta = mixture_weights(model)
        return sum(b * (eps - mu) ** 2 / (2.0 * var)
                   for b, mu, var in zip(beta, model.mixture_mu, model.mixture_var))
    return eps ** 2


def reg_noise_gaussian(model: Model) -> float:
    return float(np.sum(model.noise.values ** 2))


def reg_noise_adaptive(model: Model) -> float:
    # unmaterialized entries sit at 0 and are left out; exact only when every mu is 0
    if not model.config.adaptive:
        raise ValueError("adaptive noise penalty needs noise_mode='adaptive'")
    return float(np.sum(noise_penalty(model, model.noise.values)))


def reg_embed_basic(model: Model) -> float:
    return float(np.sum(model.u ** 2))


def _community_rows(model: Model, u: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    m1 = model.config.m1
    local = np.sum(u[:, :m1] ** 2, axis=1)
    d2 = ((u[:, None, m1:] - model.centers[None, :, :]) ** 2).sum(axis=2)
    return local + (gamma * d2).sum(axis=1) / (2.0 * model.config.sigma_c2)


def reg_embed_community(model: Model) -> float:
    return float(np.sum(_community_rows(model, model.u, model.gamma())))


def reg_center_prior(model: Model) -> float:
    return float(np.sum(model.centers ** 2) / (2.0 * model.config.sigma_w2))


def reg_embed_degree(model: Model) -> float:
    return float(model.config.lam * np.sum(model.fitness))


def reg_embed(model: Model) -> float:
    """Active embedding regularizers combined by their prior weights."""
    cfg = model.config
    base = cfg.alpha_com * reg_embed_community(model) if cfg.community else reg_embed_basic(model)
    if cfg.degree:
        base += cfg.alpha_deg * reg_embed_degree(model)
    return base


def _as_pairs(pairs) -> np.ndarray:
    if isinstance(pairs, np.ndarray):
        return pairs.reshape(-1, 2).astype(np.int64)
    pairs = list(pairs)
    if pairs and isinstance(pairs[0], TrainingPair):
        return np.array([(p.center, p.context) for p in pairs], dtype=np.int64).reshape(-1, 2)
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def total_loss(model: Model, positives, negatives=()) -> LossBreakdown:
    cfg = model.config
    pos, neg = _as_pairs(positives), _as_pairs(negatives)
    prox = 0.0
    if len(pos):
        prox -= float(np.sum(np.log(pair_effective_probs(model, pos))))
    if len(neg):
        prox -= float(np.sum(np.log(1.0 - pair_effective_probs(model, neg))))
    if cfg.freeze_noise:
        rn = 0.0
    else:
        rn = reg_noise_adaptive(model) if cfg.adaptive else reg_noise_gaussian(model)
    re = reg_embed(model)
    rx = reg_center_prior(model) if cfg.community else 0.0
    ax = cfg.alpha_com if cfg.community else 0.0
    total = prox + cfg.alpha_e * rn + cfg.alpha_u * re + ax * rx
    return LossBreakdown(prox, rn, re, rx, total, cfg.alpha_e, cfg.alpha_u, ax)


# --- one SGD step ----------------------------------------------------------------

def _hp(model: Model) -> np.ndarray:
    c = model.config
    hp = np.zeros(K.N_HP)
    hp[K.ALPHA_U], hp[K.ALPHA_E], hp[K.ALPHA_COM], hp[K.ALPHA_DEG] = c.alpha_u, c.alpha_e, c.alpha_com, c.alpha_deg
    hp[K.LAM], hp[K.SIGMA_C2], hp[K.SIGMA_W2], hp[K.CLAMP] = c.lam, c.sigma_c2, c.sigma_w2, c.clamp
    hp[K.EXTRAS_W] = c.alpha_com
    return hp


def _kernel_state(model: Model):
    c = model.config
    gamma_fixed = model.fixed_gamma if model.fixed_gamma is not None else np.zeros((1, model.centers.shape[0]))
    # the eps view must be the table's backing array so updates land in place
    return (model.u, model.noise._values, model.fitness, model.centers, model.member_logits, gamma_fixed,
            model.mixture_logits, model.mixture_mu, model.mixture_var,
            not c.freeze_noise, c.community, c.degree, c.adaptive, model.trains_memberships, c.m1, _hp(model))


@dataclass
class StepGradients:
    """Gradients of one step's objective, keyed by occurrence.

    ``nodes`` lists node occurrences [center, context, negatives...];
    ``pairs`` lists pair occurrences [(center, context), (center, neg)...].
    """

    nodes: np.ndarray
    pairs: np.ndarray
    u: np.ndarray
    fitness: np.ndarray
    member_logits: np.ndarray
    centers: np.ndarray
    eps: np.ndarray
    eps_data: np.ndarray
    mixture_logits: np.ndarray
    loss: float

    def dense(self, model: Model) -> dict[str, np.ndarray]:
        """Accumulate occurrence gradients into full-size arrays."""
        out = {
            "u": np.zeros_like(model.u),
            "fitness": np.zeros_like(model.fitness),
            "member_logits": np.zeros_like(model.member_logits),
            "centers": self.centers.copy(),
            "mixture_logits": self.mixture_logits.copy(),
            "eps": {},
        }
        for r, a in enumerate(self.nodes):
            if a < 0:
                continue
            out["u"][a] += self.u[r]
            out["fitness"][a] += self.fitness[r]
            if model.trains_memberships:
                out["member_logits"][a] += self.member_logits[r]
        for q, (i, j) in enumerate(self.pairs):
            if j < 0 or model.config.freeze_noise:
                continue
            key = (min(i, j), max(i, j))
            out["eps"][key] = out["eps"].get(key, 0.0) + self.eps[q]
        return out


def _step_arrays(model, pair, negatives, node_weights, pair_weights):
    i, j = (pair.center, pair.context) if isinstance(pair, TrainingPair) else pair
    negs = np.array([v.context if isinstance(v, TrainingPair) else v for v in negatives], dtype=np.int64)
    k = len(negs)
    nodes = np.concatenate([[i, j], negs]).astype(np.int64)
    pairs = np.stack([np.full(k + 1, i), np.concatenate([[j], negs])], axis=1).astype(np.int64)
    if model.config.freeze_noise:
        slots = np.full(k + 1, -1, dtype=np.int64)
    else:
        keys = np.array([model.noise.key(a, b) if b >= 0 else -1 for a, b in pairs], dtype=np.int64)
        slots = np.full(k + 1, -1, dtype=np.int64)
        valid = keys >= 0
        slots[valid] = model.noise.slots(keys[valid])
    node_w = np.ones(k + 2) if node_weights is None else np.asarray(node_weights, dtype=float)
    slot_w = np.ones(k + 1) if pair_weights is None else np.asarray(pair_weights, dtype=float)
    return int(i), int(j), negs, nodes, pairs, slots, node_w, slot_w


def _buffers(model: Model, k: int):
    m, Kc, L = model.m, model.centers.shape[0], len(model.mixture_logits)
    return (np.zeros((k + 2, m)), np.zeros(k + 2), np.zeros((k + 2, max(Kc, 1))), np.zeros(model.centers.shape),
            np.zeros(k + 1), np.zeros(k + 1), np.zeros(L))


def step_gradients(model: Model, pair, negatives=(), node_weights=None, pair_weights=None,
                   center_weight: float = 1.0) -> StepGradients:
    """Analytic gradient of the step objective (see ``step_objective``).

    Touches (materializes) the noise entries of every pair in the step.
    """
    i, j, negs, nodes, pairs, slots, node_w, slot_w = _step_arrays(model, pair, negatives, node_weights, pair_weights)
    state = _kernel_state(model)
    bufs = _buffers(model, len(negs))
    loss = K.step_gradients(i, j, negs, slots, node_w, slot_w, center_weight, *state, *bufs)
    gu, gd, gm, gc, geps, geps_data, gmix = bufs
    return StepGradients(nodes, pairs, gu, gd, gm[:, :model.centers.shape[0]], gc, geps, geps_data, gmix, loss)


def gradient_step(model: Model, pair, negatives=(), learning_rate: float = 0.025, node_weights=None,
                  pair_weights=None, center_weight: float = 1.0) -> StepGradients:
    """One SGD update for a positive pair and its negatives; returns the gradients used."""
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    i, j, negs, nodes, pairs, slots, node_w, slot_w = _step_arrays(model, pair, negatives, node_weights, pair_weights)
    state = _kernel_state(model)
    bufs = _buffers(model, len(negs))
    loss = K.step_gradients(i, j, negs, slots, node_w, slot_w, center_weight, *state, *bufs)
    gu, gd, gm, gc, geps, geps_data, gmix = bufs
    if not (math.isfinite(loss) and all(np.isfinite(b).all() for b in bufs)):
        raise TrainingError(f"non-finite gradient at pair ({i}, {j}) with negatives {negs.tolist()}")
    (u, eps, fit, cen, ml, _gf, mixl, mu, var, use_noise, com, deg, adap, trm, _m1, hp) = state
    K.apply_step(i, j, negs, slots, slot_w, learning_rate, u, eps, fit, cen, ml, mixl, mu, var,
                 use_noise, com, deg, adap, trm, hp, gu, gd, gm, gc, geps_data, gmix)
    return StepGradients(nodes, pairs, gu, gd, gm[:, :model.centers.shape[0]], gc, geps, geps_data, gmix, loss)


def step_objective(model: Model, pair, negatives=(), node_weights=None, pair_weights=None,
                   center_weight: float = 1.0) -> float:
    """Objective whose gradient one SGD step follows, evaluated directly.

    Pair losses of the step, plus each regularizer restricted to the step's
    occurrences and scaled by the occurrence weights; the center prior is
    scaled by ``center_weight``. Reads noise without materializing it.
    """
    cfg = model.config
    i, j = (pair.center, pair.context) if isinstance(pair, TrainingPair) else pair
    negs = [v.context if isinstance(v, TrainingPair) else v for v in negatives]
    k = len(negs)
    node_w = np.ones(k + 2) if node_weights is None else np.asarray(node_weights, dtype=float)
    pair_w = np.ones(k + 1) if pair_weights is None else np.asarray(pair_weights, dtype=float)

    total = 0.0
    others = [(j, True)] + [(v, False) for v in negs]
    for q, (x, positive) in enumerate(others):
        if x < 0:
            continue
        total += pair_loss(model, TrainingPair(i, x, positive))
        if not cfg.freeze_noise:
            eps = np.array([model.noise.get(i, x)])
            total += cfg.alpha_e * pair_w[q] * float(noise_penalty(model, eps)[0])

    gamma = model.gamma() if cfg.community else None
    for r, a in enumerate([i, j] + negs):
        if a < 0:
            continue
        if cfg.community:
            row = _community_rows(model, model.u[a:a + 1], gamma[a:a + 1])[0]
            reg = cfg.alpha_com * row
        else:
            reg = float(np.sum(model.u[a] ** 2))
        if cfg.degree:
            reg += cfg.alpha_deg * cfg.lam * model.fitness[a]
        total += cfg.alpha_u * node_w[r] * reg
    if cfg.community:
        total += cfg.alpha_com * center_weight * reg_center_prior(model)
    return total


# --- training loop ---------------------------------------------------------------

@dataclass
class Corpus:
    centers: np.ndarray
    contexts: np.ndarray


def build_corpus(graph: Graph, walk_config: WalkConfig, seed_name: str = "walks") -> Corpus:
    walks = generate_walks(graph, walk_config, substream(walk_config.seed, seed_name))
    c, x = corpus_pairs(walks, walk_config.window)
    return Corpus(c, x)


def _probe_set(corpus: Corpus, sampler: NegativeSampler, size: int, rng: np.random.Generator):
    P = len(corpus.centers)
    take = np.sort(rng.choice(P, size=min(size, P), replace=False)) if P else np.empty(0, np.int64)
    pos = np.stack([corpus.centers[take], corpus.contexts[take]], axis=1)
    negs = draw_negatives(sampler, pos[:, 0], rng)
    neg = np.stack([np.repeat(pos[:, 0], negs.shape[1]), negs.ravel()], axis=1)
    return pos, neg[neg[:, 1] >= 0]


def train(model: Model, graph: Graph, walk_config: WalkConfig, epochs: int | None = None,
          corpus: Corpus | None = None) -> TrainReport:
    """SGD over a DeepWalk-style corpus with k negatives per positive pair.

    Serial and deterministic for a fixed model seed and walk seed.
    """
    cfg = model.config
    epochs = cfg.epochs if epochs is None else epochs
    if corpus is None:
        corpus = build_corpus(graph, walk_config)
    sampler = NegativeSampler.from_graph(graph, cfg.neg_exponent, cfg.negatives)
    rng = substream(cfg.seed, "sgd")
    probe_pos, probe_neg = _probe_set(corpus, sampler, cfg.probe_size, substream(cfg.seed, "probe"))

    report = TrainReport()
    report.epochs.append((0, total_loss(model, probe_pos, probe_neg), 0.0))
    n = model.n
    P = len(corpus.centers)
    total_steps = max(P * epochs, 1)
    use_noise = not cfg.freeze_noise
    for ep in range(1, epochs + 1):
        t0 = time.perf_counter()
        if cfg.regenerate_walks and ep > 1:
            corpus = build_corpus(graph, walk_config, seed_name=f"walks/{ep}")
            P = len(corpus.centers)
        order = rng.permutation(P)
        ci, cx = corpus.centers[order], corpus.contexts[order]
        negs = draw_negatives(sampler, ci, rng)
        if use_noise:
            pos_keys = np.minimum(ci, cx) * n + np.maximum(ci, cx)
            nv = negs >= 0
            neg_keys = np.where(nv, np.minimum(ci[:, None], negs) * n + np.maximum(ci[:, None], negs), -1)
            all_slots = model.noise.slots(np.concatenate([pos_keys, neg_keys[nv]]))
            pos_slots = all_slots[:P]
            neg_slots = np.full(negs.shape, -1, dtype=np.int64)
            neg_slots[nv] = all_slots[P:]
        else:
            pos_slots = np.full(P, -1, dtype=np.int64)
            neg_slots = np.full(negs.shape, -1, dtype=np.int64)

        S = max(len(model.noise), 1)
        if cfg.reg_mode == "amortized":
            valid = negs[negs >= 0]
            counts = np.bincount(ci, minlength=n) + np.bincount(cx, minlength=n) + np.bincount(valid, minlength=n)
            node_inv = np.where(counts > 0, 1.0 / np.maximum(counts, 1), 0.0)
            if use_noise:
                sc = np.bincount(pos_slots, minlength=S) + np.bincount(neg_slots[neg_slots >= 0], minlength=S)
                slot_inv = np.where(sc > 0, 1.0 / np.maximum(sc, 1), 0.0)
            else:
                slot_inv = np.zeros(S)
        else:
            node_inv = np.ones(n)
            slot_inv = np.ones(S)

        state = _kernel_state(model)
        loss, bad = K.train_epoch(ci, cx, negs, pos_slots, neg_slots, node_inv, slot_inv, 1.0 / max(P, 1),
                                  *state, cfg.lr, cfg.lr_final_ratio, cfg.lr_schedule == "linear",
                                  (ep - 1) * P, total_steps)
        if bad >= 0:
            raise TrainingError(f"non-finite gradient in epoch {ep} at step {bad}: "
                                f"pair ({ci[bad]}, {cx[bad]}), negatives {negs[bad].tolist()}")
        breakdown = total_loss(model, probe_pos, probe_neg)
        report.epochs.append((ep, breakdown, time.perf_counter() - t0))
        log.info("epoch %d: corpus loss %.4f, probe total %.4f, %d noise entries",
                 ep, loss / max(P, 1), breakdown.total, len(model.noise))
    return report


def mean_abs_noise(model: Model) -> float:
    vals = model.noise.values
    return float(np.mean(np.abs(vals))) if len(vals) else 0.0


__all__ = [
    "LossBreakdown", "TrainReport", "TrainingError", "StepGradients", "Corpus",
    "pair_loss", "noise_penalty", "reg_noise_gaussian", "reg_noise_adaptive", "reg_embed_basic",
    "reg_embed_community", "reg_center_prior", "reg_embed_degree", "reg_embed", "total_loss",
    "step_gradients", "gradient_step", "step_objective", "build_corpus", "train", "mean_abs_noise",
    "softmax",
]
