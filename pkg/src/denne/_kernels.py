"""Compiled per-step gradient and update routines.

One step is a positive pair (i, j) plus up to k negatives (i, v). Node
occurrences are laid out as rows ``[i, j, v_1, ..., v_k]`` and pair
occurrences as ``[(i, j), (i, v_1), ...]``; a negative of -1 is skipped.
"""
import math

import numpy as np
from numba import njit

# hp layout
ALPHA_U, ALPHA_E, ALPHA_COM, ALPHA_DEG, LAM, SIGMA_C2, SIGMA_W2, CLAMP, EXTRAS_W = range(9)
N_HP = 9


@njit(cache=True)
def _sigmoid(x):
    if x < -700.0:
        return math.exp(x)
    return 1.0 / (1.0 + math.exp(-x))


@njit(cache=True)
def step_gradients(i, j, negs, slots, node_w, slot_w, center_w,
                   u, eps, fitness, centers, mlogits, gamma_fixed,
                   mix_logits, mix_mu, mix_var,
                   use_noise, community, degree, adaptive, train_members, m1, hp,
                   gu, gd, gm, gc, geps, geps_data, gmix):
    """Fill gradient buffers for one step; returns the data (pair) loss."""
    k = negs.shape[0]
    m = u.shape[1]
    K = centers.shape[0]
    L = mix_logits.shape[0]
    alpha_u, alpha_e = hp[ALPHA_U], hp[ALPHA_E]
    delta = hp[CLAMP]

    gu[:] = 0.0
    gd[:] = 0.0
    gm[:] = 0.0
    gc[:] = 0.0
    geps[:] = 0.0
    geps_data[:] = 0.0
    gmix[:] = 0.0

    beta = np.zeros(L)
    if adaptive:
        mx = mix_logits.max()
        tot = 0.0
        for l in range(L):
            beta[l] = math.exp(mix_logits[l] - mx)
            tot += beta[l]
        for l in range(L):
            beta[l] /= tot

    loss = 0.0
    for q in range(k + 1):
        if q == 0:
            x = j
            row = 1
        else:
            x = negs[q - 1]
            row = q + 1
        if x < 0:
            continue
        s = 0.0
        for r in range(m):
            dr = u[i, r] - u[x, r]
            s -= dr * dr
        if degree:
            s += fitness[i] * fitness[x]
        a = _sigmoid(s)
        e = 0.0
        live = use_noise and slots[q] >= 0
        if live:
            e = eps[slots[q]]
        raw = a + e
        p = min(max(raw, delta), 1.0 - delta)
        if q == 0:
            loss -= math.log(p)
        else:
            loss -= math.log(1.0 - p)
        if raw < delta or raw > 1.0 - delta:
            continue
        dldp = -1.0 / p if q == 0 else 1.0 / (1.0 - p)
        g_s = dldp * a * (1.0 - a)
        for r in range(m):
            dr = u[i, r] - u[x, r]
            gu[0, r] -= 2.0 * g_s * dr
            gu[row, r] += 2.0 * g_s * dr
        if degree:
            gd[0] += g_s * fitness[x]
            gd[row] += g_s * fitness[i]
        if live:
            geps_data[q] += dldp

    # noise regularizer, one term per pair occurrence
    if use_noise:
        for q in range(k + 1):
            if slots[q] < 0 or (q > 0 and negs[q - 1] < 0):
                continue
            w = slot_w[q]
            e = eps[slots[q]]
            if adaptive:
                dR = 0.0
                rbar = 0.0
                for l in range(L):
                    dR += beta[l] * (e - mix_mu[l]) / mix_var[l]
                    rbar += beta[l] * (e - mix_mu[l]) ** 2 / (2.0 * mix_var[l])
                for l in range(L):
                    rl = (e - mix_mu[l]) ** 2 / (2.0 * mix_var[l])
                    gmix[l] += alpha_e * w * beta[l] * (rl - rbar)
            else:
                dR = 2.0 * e
            geps[q] = geps_data[q] + alpha_e * w * dR

    # embedding regularizers, one term per node occurrence
    cw = alpha_u * hp[ALPHA_COM]
    gam = np.zeros(K)
    rk = np.zeros(K)
    for row in range(k + 2):
        if row == 0:
            a_node = i
        elif row == 1:
            a_node = j
        else:
            a_node = negs[row - 2]
        if a_node < 0:
            continue
        w = node_w[row]
        if community:
            for r in range(m1):
                gu[row, r] += cw * w * 2.0 * u[a_node, r]
            if train_members:
                mx = mlogits[a_node].max()
                tot = 0.0
                for kk in range(K):
                    gam[kk] = math.exp(mlogits[a_node, kk] - mx)
                    tot += gam[kk]
                for kk in range(K):
                    gam[kk] /= tot
            else:
                for kk in range(K):
                    gam[kk] = gamma_fixed[a_node, kk]
            rbar = 0.0
            for kk in range(K):
                coef = cw * w * gam[kk] / hp[SIGMA_C2]
                d2 = 0.0
                for r in range(m1, m):
                    dc = u[a_node, r] - centers[kk, r - m1]
                    d2 += dc * dc
                    gu[row, r] += coef * dc
                    gc[kk, r - m1] -= coef * dc
                rk[kk] = d2 / (2.0 * hp[SIGMA_C2])
                rbar += gam[kk] * rk[kk]
            if train_members:
                for kk in range(K):
                    gm[row, kk] += cw * w * gam[kk] * (rk[kk] - rbar)
        else:
            for r in range(m):
                gu[row, r] += alpha_u * w * 2.0 * u[a_node, r]
        if degree:
            gd[row] += alpha_u * hp[ALPHA_DEG] * w * hp[LAM]

    # center prior, spread evenly over the steps of an epoch
    if community:
        coef = hp[EXTRAS_W] * center_w / hp[SIGMA_W2]
        for kk in range(K):
            for r in range(m - m1):
                gc[kk, r] += coef * centers[kk, r]
    return loss


@njit(cache=True)
def apply_step(i, j, negs, slots, slot_w, lr,
               u, eps, fitness, centers, mlogits, mix_logits, mix_mu, mix_var,
               use_noise, community, degree, adaptive, train_members, hp,
               gu, gd, gm, gc, geps_data, gmix):
    """SGD update from filled buffers.

    The quadratic noise penalty is integrated implicitly (proximal step) so
    that large alpha_e stays stable at any learning rate.
    """
    k = negs.shape[0]
    L = mix_logits.shape[0]
    for row in range(k + 2):
        if row == 0:
            a_node = i
        elif row == 1:
            a_node = j
        else:
            a_node = negs[row - 2]
        if a_node < 0:
            continue
        u[a_node] -= lr * gu[row]
        if degree:
            fitness[a_node] -= lr * gd[row]
        if train_members:
            mlogits[a_node] -= lr * gm[row]
    if degree:
        for row in range(k + 2):
            a_node = i if row == 0 else (j if row == 1 else negs[row - 2])
            if a_node >= 0 and fitness[a_node] < 0.0:
                fitness[a_node] = 0.0
    if community:
        centers -= lr * gc

    if use_noise:
        # curvature A and shift B of the noise penalty: R'(e) = A e - B
        A = 2.0
        B = 0.0
        if adaptive:
            mx = mix_logits.max()
            tot = 0.0
            for l in range(L):
                tot += math.exp(mix_logits[l] - mx)
            A = 0.0
            for l in range(L):
                b = math.exp(mix_logits[l] - mx) / tot
                A += b / mix_var[l]
                B += b * mix_mu[l] / mix_var[l]
        ae = hp[ALPHA_E]
        for q in range(k + 1):
            s = slots[q]
            if s < 0 or (q > 0 and negs[q - 1] < 0):
                continue
            seen = False
            for q2 in range(q):
                if slots[q2] == s and (q2 == 0 or negs[q2 - 1] >= 0):
                    seen = True
            if seen:
                continue
            G = 0.0
            W = 0.0
            for q2 in range(q, k + 1):
                if slots[q2] == s and (q2 == 0 or negs[q2 - 1] >= 0):
                    G += geps_data[q2]
                    W += slot_w[q2]
            eps[s] = (eps[s] - lr * G + lr * ae * W * B) / (1.0 + lr * ae * W * A)

    if adaptive:
        mix_logits -= lr * gmix


@njit(cache=True)
def train_epoch(centers_idx, contexts_idx, negs, pos_slots, neg_slots,
                node_inv, slot_inv, center_w,
                u, eps, fitness, centers, mlogits, gamma_fixed,
                mix_logits, mix_mu, mix_var,
                use_noise, community, degree, adaptive, train_members, m1, hp,
                lr0, lr_final_ratio, linear, step0, total_steps):
    """Run SGD over every step of one epoch in order.

    Returns (summed data loss, index of the first non-finite step or -1).
    """
    P = centers_idx.shape[0]
    k = negs.shape[1]
    m = u.shape[1]
    K = centers.shape[0]
    L = mix_logits.shape[0]
    gu = np.zeros((k + 2, m))
    gd = np.zeros(k + 2)
    gm = np.zeros((k + 2, max(K, 1)))
    gc = np.zeros(centers.shape)
    geps = np.zeros(k + 1)
    geps_data = np.zeros(k + 1)
    gmix = np.zeros(L)
    slots = np.empty(k + 1, dtype=np.int64)
    node_w = np.zeros(k + 2)
    slot_w = np.zeros(k + 1)
    total = 0.0
    for t in range(P):
        i = centers_idx[t]
        j = contexts_idx[t]
        nv = negs[t]
        slots[0] = pos_slots[t]
        slot_w[0] = slot_inv[pos_slots[t]] if pos_slots[t] >= 0 else 0.0
        node_w[0] = node_inv[i]
        node_w[1] = node_inv[j]
        for q in range(k):
            slots[q + 1] = neg_slots[t, q]
            slot_w[q + 1] = slot_inv[neg_slots[t, q]] if neg_slots[t, q] >= 0 else 0.0
            node_w[q + 2] = node_inv[nv[q]] if nv[q] >= 0 else 0.0
        if linear:
            frac = (step0 + t) / total_steps
            lr = lr0 * (1.0 - (1.0 - lr_final_ratio) * frac)
        else:
            lr = lr0
        loss = step_gradients(i, j, nv, slots, node_w, slot_w, center_w,
                              u, eps, fitness, centers, mlogits, gamma_fixed,
                              mix_logits, mix_mu, mix_var,
                              use_noise, community, degree, adaptive, train_members, m1, hp,
                              gu, gd, gm, gc, geps, geps_data, gmix)
        if not (math.isfinite(loss) and np.isfinite(gu).all() and np.isfinite(geps).all()
                and np.isfinite(gd).all() and np.isfinite(gc).all() and np.isfinite(gmix).all()):
            return total, t
        total += loss
        apply_step(i, j, nv, slots, slot_w, lr,
                   u, eps, fitness, centers, mlogits, mix_logits, mix_mu, mix_var,
                   use_noise, community, degree, adaptive, train_members, hp,
                   gu, gd, gm, gc, geps_data, gmix)
    return total, -1
