"""Independent reference computations shared by the unit and acceptance tests."""
import math

import numpy as np

from denne.model import ModelConfig, init_model
from denne.objective import step_gradients, step_objective

def _effective(model, i, j):
    cfg = model.config
    s = -float(np.sum((model.u[i] - model.u[j]) ** 2))
    if cfg.degree:
        s += model.fitness[i] * model.fitness[j]
    return 1.0 / (1.0 + math.exp(-s)) + model.noise.get(i, j)


def random_step(variant: str, seed: int, n: int = 7, dim: int = 6, k: int = 3):
    """A random model and step whose probabilities all sit well inside the clamp."""
    rng = np.random.default_rng(seed)
    while True:
        cfg = ModelConfig.for_variant(variant, dim=dim, n_communities=3, seed=int(rng.integers(1 << 30)),
                                      alpha_u=float(rng.uniform(0.01, 1)), alpha_e=float(rng.uniform(0.5, 5)),
                                      alpha_com=float(rng.uniform(0.5, 2)), alpha_deg=float(rng.uniform(0.5, 2)),
                                      sigma_c2=float(rng.uniform(0.5, 2)), sigma_w2=float(rng.uniform(0.5, 2)))
        model = init_model(cfg, n)
        model.u[:] = rng.normal(0, 0.4, model.u.shape)
        model.centers[:] = rng.normal(0, 0.5, model.centers.shape)
        model.member_logits[:] = rng.normal(0, 1, model.member_logits.shape)
        model.fitness[:] = rng.uniform(0.2, 1.0, n)
        model.mixture_logits[:] = rng.normal(0, 1, model.mixture_logits.shape)
        i, j = rng.choice(n, 2, replace=False).tolist()
        negs = [int(v) for v in rng.choice([v for v in range(n) if v != i], k)]
        for x in [j] + negs:
            model.noise.set(i, x, float(rng.uniform(-0.05, 0.05)))
        probs = [_effective(model, i, x) for x in [j] + negs]
        if all(1e-2 < p < 1 - 1e-2 for p in probs):
            node_w = rng.uniform(0.5, 2.0, k + 2)
            pair_w = rng.uniform(0.5, 2.0, k + 1)
            return model, (i, j), negs, node_w, pair_w, float(rng.uniform(0.1, 1.0))


def _params(model):
    return {"u": model.u, "centers": model.centers, "member_logits": model.member_logits,
            "fitness": model.fitness, "mixture_logits": model.mixture_logits}


def gradient_errors(model, pair, negs, node_w, pair_w, center_w, h: float = 1e-5) -> dict[str, float]:
    """Norm-wise relative error between analytic and central-difference gradients per family."""
    grads = step_gradients(model, pair, negs, node_w, pair_w, center_w).dense(model)

    def f():
        return step_objective(model, pair, negs, node_w, pair_w, center_w)

    errors = {}
    for name, arr in _params(model).items():
        if arr.size == 0:
            continue
        fd = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + h
            up = f()
            arr[idx] = old - h
            down = f()
            arr[idx] = old
            fd[idx] = (up - down) / (2 * h)
        if name == "member_logits" and not model.trains_memberships:
            continue
        errors[name] = _rel(grads[name], fd)
    keys = sorted(grads["eps"])
    if keys:
        analytic = np.array([grads["eps"][kk] for kk in keys])
        fd = np.zeros(len(keys))
        for t, (a, b) in enumerate(keys):
            old = model.noise.get(a, b)
            model.noise.set(a, b, old + h)
            up = f()
            model.noise.set(a, b, old - h)
            down = f()
            model.noise.set(a, b, old)
            fd[t] = (up - down) / (2 * h)
        errors["eps"] = _rel(analytic, fd)
    return errors


def _rel(a, b) -> float:
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if scale < 1e-12 else float(np.linalg.norm(a - b) / scale)


def skipgram_loss(u_i, u_j, positive: bool) -> float:
    """Plain distance-kernel SkipGram term, computed from scratch."""
    diffs = [float(a) - float(b) for a, b in zip(u_i, u_j)]
    s = -math.fsum(d * d for d in diffs)
    sig = 1.0 / (1.0 + math.exp(-s))
    return -math.log(sig) if positive else -math.log(1.0 - sig)


def brute_force_objective(model, positives, negatives) -> float:
    """Full objective assembled from explicit enumeration of every term.

    Walks all pairs and nodes with plain loops, independent of the vectorized
    library code. Covers the Gaussian noise mode only.
    """
    cfg = model.config
    d = cfg.clamp
    prox = 0.0
    for (i, j), positive in [(p, True) for p in positives] + [(p, False) for p in negatives]:
        s = -sum((model.u[i, r] - model.u[j, r]) ** 2 for r in range(model.m))
        if cfg.degree:
            s += model.fitness[i] * model.fitness[j]
        a = 1.0 / (1.0 + math.exp(-s))
        eps = 0.0 if cfg.freeze_noise else model.noise.get(i, j)
        p = min(max(a + eps, d), 1 - d)
        prox += -math.log(p) if positive else -math.log(1 - p)
    reg_noise = 0.0
    for a in range(model.n):
        for b in range(a + 1, model.n):
            reg_noise += model.noise.get(a, b) ** 2
    if cfg.community:
        gamma = model.gamma()
        reg_u = 0.0
        for i in range(model.n):
            reg_u += sum(model.u[i, r] ** 2 for r in range(cfg.m1))
            for kk in range(model.centers.shape[0]):
                dist = sum((model.u[i, cfg.m1 + r] - model.centers[kk, r]) ** 2 for r in range(model.m - cfg.m1))
                reg_u += gamma[i, kk] * dist / (2 * cfg.sigma_c2)
        reg_u *= cfg.alpha_com
        extras = sum(float(c) ** 2 for c in model.centers.ravel()) / (2 * cfg.sigma_w2)
    else:
        reg_u = sum(float(x) ** 2 for x in model.u.ravel())
        extras = 0.0
    if cfg.degree:
        reg_u += cfg.alpha_deg * cfg.lam * sum(model.fitness)
    return prox + cfg.alpha_e * reg_noise + cfg.alpha_u * reg_u + cfg.alpha_com * extras
