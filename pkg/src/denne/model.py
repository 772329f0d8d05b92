"""Parameter store and forward computations of the denoising embedding model.

Edge probability between nodes i and j is ``sigmoid(s_ij)`` where the score
``s_ij`` is the negative squared distance of their embeddings, plus
``d_i * d_j`` when the degree (fitness) prior is active. The observed edge
indicator is Bernoulli with success probability ``a_ij + eps_ij`` clamped to
``[delta, 1 - delta]``; ``eps_ij`` lives in a sparse, lazily filled table.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TextIO

import numpy as np
from scipy.special import expit

from .graph import Graph
from .rng import substream

VARIANTS = ("basic", "com", "deg", "adap", "com+deg")
DEFAULT_MIXTURE = ((0.0, 5.0), (0.0, 0.5), (0.01, 0.5))


class ConfigError(ValueError):
    pass


class ModeError(RuntimeError):
    pass


class DomainError(ValueError):
    """A self-pair was scored; the model never scores i == j."""


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    dim: int = 32
    community: bool = False
    degree: bool = False
    noise_mode: str = "gaussian"  # "gaussian" | "adaptive"
    # alpha_u is the embedding-regularizer weight (published as alpha_N)
    alpha_u: float = 0.001
    alpha_e: float = 50.0
    alpha_com: float = 1.0
    alpha_deg: float = 1.0
    init_scale: float = 0.1
    clamp: float = 1e-6
    sigma_c2: float = 1.0
    sigma_w2: float = 1.0
    lam: float = 2.0
    mixture: tuple[tuple[float, float], ...] = DEFAULT_MIXTURE
    n_communities: int = 8
    split: int | None = None
    negatives: int = 5
    neg_exponent: float = 0.75
    lr: float = 0.025
    lr_final_ratio: float = 0.01
    lr_schedule: str = "linear"  # "linear" | "constant"
    epochs: int = 1
    reg_mode: str = "per_touch"  # "per_touch" | "amortized"
    freeze_noise: bool = False
    regenerate_walks: bool = False
    probe_size: int = 10000
    seed: int = 0

    @classmethod
    def for_variant(cls, variant: str, **overrides) -> "ModelConfig":
        if variant not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
        flags = dict(
            community="com" in variant,
            degree="deg" in variant,
            noise_mode="adaptive" if variant == "adap" else "gaussian",
        )
        flags.update(overrides)
        return cls(**flags)

    @property
    def m1(self) -> int:
        return self.dim // 2 if self.split is None else self.split

    @property
    def adaptive(self) -> bool:
        return self.noise_mode == "adaptive"

    def validate(self) -> None:
        bad = []
        if self.dim < 1:
            bad.append("dim")
        if self.alpha_u < 0:
            bad.append("alpha_u")
        if self.alpha_e < 0:
            bad.append("alpha_e")
        if not 0.0 < self.clamp < 0.5:
            bad.append("clamp")
        if self.noise_mode not in ("gaussian", "adaptive"):
            bad.append("noise_mode")
        if self.adaptive and (not self.mixture or any(v <= 0 for _, v in self.mixture)):
            bad.append("mixture")
        if self.community and not 0 < self.m1 < self.dim:
            bad.append("split")
        if self.community and self.n_communities < 2:
            bad.append("n_communities")
        if self.sigma_c2 <= 0:
            bad.append("sigma_c2")
        if self.sigma_w2 <= 0:
            bad.append("sigma_w2")
        if self.lr <= 0:
            bad.append("lr")
        if self.lr_schedule not in ("linear", "constant"):
            bad.append("lr_schedule")
        if self.reg_mode not in ("per_touch", "amortized"):
            bad.append("reg_mode")
        if self.negatives < 0:
            bad.append("negatives")
        if self.epochs < 1:
            bad.append("epochs")
        if bad:
            raise ConfigError("invalid model config keys: " + ", ".join(bad))


class NoiseTable:
    """Sparse symmetric table of per-pair noises; absent pairs read as 0.

    Entries live in a growable value array addressed by slot, so the
    training kernel can update them in place.
    """

    def __init__(self, n: int):
        self.n = n
        self._slot: dict[int, int] = {}
        self._keys = np.zeros(0, dtype=np.int64)
        self._values = np.zeros(0, dtype=np.float64)

    def key(self, i: int, j: int) -> int:
        if i == j:
            raise DomainError(f"noise is undefined for the self-pair ({i}, {i})")
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(f"pair ({i}, {j}) outside 0..{self.n - 1}")
        return min(i, j) * self.n + max(i, j)

    def __len__(self) -> int:
        return len(self._slot)

    @property
    def values(self) -> np.ndarray:
        """Live view of materialized values, indexed by slot."""
        return self._values[: len(self._slot)]

    @property
    def keys(self) -> np.ndarray:
        return self._keys[: len(self._slot)]

    def get(self, i: int, j: int) -> float:
        slot = self._slot.get(self.key(i, j))
        return 0.0 if slot is None else float(self._values[slot])

    def touch(self, i: int, j: int) -> int:
        return int(self.slots(np.array([self.key(i, j)]))[0])

    def set(self, i: int, j: int, value: float) -> None:
        slot = self.touch(i, j)
        self._values[slot] = value

    def _grow(self, need: int) -> None:
        cap = len(self._values)
        if need <= cap:
            return
        cap = max(need, 2 * cap, 64)
        vals = np.zeros(cap)
        vals[: len(self._slot)] = self.values
        keys = np.zeros(cap, dtype=np.int64)
        keys[: len(self._slot)] = self.keys
        self._values, self._keys = vals, keys

    def slots(self, keys: np.ndarray) -> np.ndarray:
        """Slot for each key, materializing new entries (value 0) in sorted-key order."""
        keys = np.asarray(keys, dtype=np.int64)
        uniq, inverse = np.unique(keys, return_inverse=True)
        uslots = np.empty(len(uniq), dtype=np.int64)
        fresh = []
        for t, k in enumerate(uniq.tolist()):
            s = self._slot.get(k)
            if s is None:
                fresh.append(t)
            else:
                uslots[t] = s
        if fresh:
            start = len(self._slot)
            self._grow(start + len(fresh))
            for off, t in enumerate(fresh):
                k = int(uniq[t])
                self._slot[k] = start + off
                self._keys[start + off] = k
                uslots[t] = start + off
        return uslots[inverse].reshape(keys.shape)

    def lookup(self, keys: np.ndarray) -> np.ndarray:
        """Values for keys without materializing anything."""
        keys = np.asarray(keys, dtype=np.int64)
        flat = keys.ravel().tolist()
        vals = self._values
        get = self._slot.get
        out = np.array([vals[s] if (s := get(k)) is not None else 0.0 for k in flat], dtype=np.float64)
        return out.reshape(keys.shape)

    def items(self) -> list[tuple[int, int, float]]:
        order = np.argsort(self.keys, kind="stable")
        return [(int(k // self.n), int(k % self.n), float(v))
                for k, v in zip(self.keys[order], self.values[order])]


@dataclass
class Model:
    config: ModelConfig
    n: int
    u: np.ndarray
    noise: NoiseTable
    centers: np.ndarray
    member_logits: np.ndarray
    fixed_gamma: np.ndarray | None
    fitness: np.ndarray
    mixture_logits: np.ndarray
    mixture_mu: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mixture_var: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def m(self) -> int:
        return self.u.shape[1]

    @property
    def trains_memberships(self) -> bool:
        return self.config.community and self.fixed_gamma is None

    def gamma(self) -> np.ndarray:
        """Community memberships, re-derived from logits on every call."""
        if self.fixed_gamma is not None:
            return self.fixed_gamma
        return softmax(self.member_logits, axis=1)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = np.exp(x - np.max(x, axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def init_model(config: ModelConfig, graph: Graph | int, memberships=None) -> Model:
    """Fresh parameters; ``memberships`` (per-node community ids) freezes gamma one-hot."""
    config.validate()
    n = graph if isinstance(graph, int) else graph.n
    rng = substream(config.seed, "init")
    u = rng.normal(0.0, config.init_scale, size=(n, config.dim))
    m2 = config.dim - config.m1
    K = config.n_communities if config.community else 0
    centers = rng.normal(0.0, config.init_scale, size=(K, m2)) if config.community else np.zeros((0, m2))
    member_logits = np.zeros((n, K))
    fixed = None
    if config.community and memberships is not None:
        memberships = np.asarray(memberships, dtype=np.int64)
        if memberships.shape != (n,) or memberships.min() < 0 or memberships.max() >= K:
            raise ConfigError(f"memberships must be {n} community ids in 0..{K - 1}")
        fixed = np.zeros((n, K))
        fixed[np.arange(n), memberships] = 1.0
    fitness = np.full(n, 1.0 / config.lam if config.degree else 0.0)
    L = len(config.mixture) if config.adaptive else 0
    mix = np.array(config.mixture, dtype=float).reshape(-1, 2)[:L]
    return Model(config, n, u, NoiseTable(n), centers, member_logits, fixed, fitness,
                 np.zeros(L), mix[:, 0].copy(), mix[:, 1].copy())


def clone(model: Model) -> Model:
    table = NoiseTable(model.n)
    table._slot = dict(model.noise._slot)
    table._keys = model.noise._keys.copy()
    table._values = model.noise._values.copy()
    return replace(
        model, u=model.u.copy(), noise=table, centers=model.centers.copy(),
        member_logits=model.member_logits.copy(),
        fixed_gamma=None if model.fixed_gamma is None else model.fixed_gamma.copy(),
        fitness=model.fitness.copy(), mixture_logits=model.mixture_logits.copy(),
    )


def sigmoid(x: float) -> float:
    if x < -700.0:
        return math.exp(x)
    return 1.0 / (1.0 + math.exp(-x))


def proximity(x, y) -> float:
    """Negative squared Euclidean distance, correctly rounded."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ShapeError(f"length mismatch: {x.shape} vs {y.shape}")
    d = x - y
    return -math.fsum((d * d).tolist())


def similarity(model: Model, i: int, j: int) -> float:
    if i == j:
        raise DomainError(f"self-pair ({i}, {i}) is never scored")
    ui, uj = model.u[i], model.u[j]
    if model.config.community:
        m1 = model.config.m1
        s = proximity(ui[:m1], uj[:m1]) + proximity(ui[m1:], uj[m1:])
    else:
        s = proximity(ui, uj)
    if model.config.degree:
        s += float(model.fitness[i] * model.fitness[j])
    return s


def edge_prob(model: Model, i: int, j: int) -> float:
    return sigmoid(similarity(model, i, j))


def get_noise(model: Model, i: int, j: int) -> float:
    return model.noise.get(i, j)


def touch_noise(model: Model, i: int, j: int) -> float:
    model.noise.touch(i, j)
    return model.noise.get(i, j)


def clamp_prob(raw: float, delta: float) -> float:
    return min(max(raw, delta), 1.0 - delta)


def effective_prob(model: Model, i: int, j: int) -> float:
    eps = 0.0 if model.config.freeze_noise else model.noise.get(i, j)
    return clamp_prob(edge_prob(model, i, j) + eps, model.config.clamp)


def mixture_weights(model: Model) -> np.ndarray:
    if not model.config.adaptive:
        raise ModeError("mixture weights exist only in adaptive noise mode")
    return softmax(model.mixture_logits)


# --- array forms used by batch losses and evaluation -------------------------

def pair_scores(model: Model, pairs: np.ndarray) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    diff = model.u[pairs[:, 0]] - model.u[pairs[:, 1]]
    s = -np.einsum("ij,ij->i", diff, diff)
    if model.config.degree:
        s = s + model.fitness[pairs[:, 0]] * model.fitness[pairs[:, 1]]
    return s


def pair_effective_probs(model: Model, pairs: np.ndarray) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if np.any(pairs[:, 0] == pairs[:, 1]):
        raise DomainError("self-pairs are never scored")
    a = expit(pair_scores(model, pairs))
    if model.config.freeze_noise:
        eps = np.zeros(len(pairs))
    else:
        lo, hi = np.minimum(pairs[:, 0], pairs[:, 1]), np.maximum(pairs[:, 0], pairs[:, 1])
        eps = model.noise.lookup(lo * model.n + hi)
    d = model.config.clamp
    return np.clip(a + eps, d, 1.0 - d)


# --- file formats --------------------------------------------------------------

def write_embeddings(u: np.ndarray, stream: TextIO) -> None:
    n, m = u.shape
    stream.write(f"{n} {m}\n")
    for i in range(n):
        stream.write(f"{i} " + " ".join(f"{v:.9g}" for v in u[i]) + "\n")


def read_embeddings(stream: TextIO) -> np.ndarray:
    n, m = map(int, stream.readline().split())
    u = np.zeros((n, m))
    for line in stream:
        tok = line.split()
        if tok:
            u[int(tok[0])] = [float(t) for t in tok[1:]]
    return u


def write_noise_dump(model: Model, stream: TextIO) -> None:
    stream.write("[noise]\n")
    for i, j, v in model.noise.items():
        stream.write(f"{i} {j} {v:.9g}\n")
    if model.config.adaptive:
        stream.write("[mixture]\n")
        for (mu, var), beta in zip(model.config.mixture, mixture_weights(model)):
            stream.write(f"{mu:g} {var:g} {beta:.9g}\n")
    if model.config.degree:
        stream.write("[fitness]\n")
        for i, d in enumerate(model.fitness):
            stream.write(f"{i} {d:.9g}\n")
