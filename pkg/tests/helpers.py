"""Independent oracles and the finite-difference gradient checker.

Everything here is deliberately written the slow, obvious way (python
loops, enumeration) so the fast library paths are checked against a
different derivation, not against themselves.
"""

import itertools
import math

import numpy as np

from tmcn.tensor import Tape, Tensor, apply, parameter


# ---------------------------------------------------------------------------
# finite-difference gradient checking

def numeric_grads(scalar_fn, tensors, h=1e-6):
    """Central finite differences of scalar_fn() wrt each tensor's elements.

    scalar_fn must recompute the forward pass from the tensors' current
    ``data`` on every call.
    """
    grads = []
    for t in tensors:
        g = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = scalar_fn()
            flat[i] = orig - h
            down = scalar_fn()
            flat[i] = orig
            gf[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def grad_rel_error(analytic, numeric):
    """max over elements of |analytic - numeric| / max(1, |analytic|)."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        err = np.abs(a - n) / np.maximum(1.0, np.abs(a))
        worst = max(worst, float(err.max()) if err.size else 0.0)
    return worst


def check_grads(build_fn, leaves, rtol=1e-5, h=1e-6, seed=0):
    """Compare taped gradients of a scalar-projected output against central FD.

    ``build_fn()`` runs the forward pass and returns a Tensor (any
    shape); a fixed random projection turns it into a scalar so the full
    Jacobian action is exercised.  Returns the worst relative error.
    """
    probe = np.random.default_rng(seed).normal(size=build_fn().shape)

    def scalar():
        return float((build_fn().data * probe).sum())

    for t in leaves:
        t.grad = None
    with Tape() as tape:
        out = build_fn()
        loss = (out * Tensor(probe)).sum()
        tape.backward(loss)
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in leaves]
    numeric = numeric_grads(scalar, leaves, h=h)
    err = grad_rel_error(analytic, numeric)
    assert err < rtol, f"gradient mismatch: rel err {err:.3e} >= {rtol:.0e}"
    return err


def op_grad_case(kind, rng):
    """Random (leaves, attrs) for one catalog op, inputs kept off kinks.

    Returns (leaves, build_fn); build_fn recomputes the op through the
    named dispatcher from the leaves' current data.
    """
    normal = lambda *shape: parameter(rng.normal(size=shape))
    if kind == "matmul":
        leaves, attrs = [normal(3, 4), normal(4, 2)], {}
    elif kind in ("add", "sub", "elementwise-mul"):
        # one broadcast operand so the unbroadcast path is on the hook too
        leaves, attrs = [normal(3, 4), normal(4)], {}
    elif kind == "scalar-mul":
        leaves, attrs = [normal(3, 4)], {"scalar": float(rng.normal())}
    elif kind == "reshape":
        leaves, attrs = [normal(2, 6)], {"shape": (3, 4)}
    elif kind == "concat":
        leaves, attrs = [normal(2, 3), normal(2, 2), normal(2, 4)], {"axis": 1}
    elif kind == "slice":
        leaves, attrs = [normal(3, 6)], {"axis": 1, "start": 1, "stop": 4}
    elif kind == "transpose":
        shape = (3, 4) if rng.integers(2) else (2, 3, 4)
        leaves, attrs = [normal(*shape)], {}
    elif kind in ("sum", "mean"):
        axis = [None, 0, 1][int(rng.integers(3))]
        leaves, attrs = [normal(3, 4)], {"axis": axis, "keepdims": bool(rng.integers(2))}
    elif kind == "exp":
        leaves, attrs = [parameter(rng.uniform(-2.0, 2.0, size=(3, 4)))], {}
    elif kind == "log":
        leaves, attrs = [parameter(rng.uniform(0.5, 2.0, size=(3, 4)))], {}
    elif kind in ("softplus", "sigmoid", "silu", "square"):
        leaves, attrs = [parameter(rng.normal(scale=2.0, size=(3, 4)))], {}
    elif kind == "clamp-min":
        signs = rng.choice([-1.0, 1.0], size=(3, 4))
        leaves = [parameter(rng.uniform(0.2, 1.5, size=(3, 4)) * signs)]
        attrs = {"floor": 0.0}
    elif kind == "l2-norm":
        axis = [None, 1][int(rng.integers(2))]
        leaves, attrs = [normal(4, 5)], {"axis": axis, "keepdims": False}
    elif kind == "cosine-similarity-matrix":
        leaves, attrs = [normal(4, 5), normal(3, 5)], {}
    elif kind == "conv1d-depthwise":
        k = [2, 4, 7][int(rng.integers(3))]  # 7 > L exercises the short-input path
        leaves, attrs = [normal(2, 3, 5), normal(3, k)], {}
    elif kind == "state-scan":
        # delta positive and decay rates negative, the recurrence's domain
        length = [1, 3, 6][int(rng.integers(3))]  # 6 > ceil(sqrt(6)) hits multi-segment replay
        leaves = [normal(2, length, 3),
                  parameter(rng.uniform(0.05, 0.8, size=(2, length, 3))),
                  normal(2, length, 2), normal(2, length, 2),
                  parameter(rng.uniform(-2.0, -0.2, size=(3, 2))),
                  normal(3)]
        attrs = {}
    else:
        raise ValueError(f"no gradient case for op kind {kind!r}")
    return leaves, lambda: apply(kind, leaves, attrs)


# ---------------------------------------------------------------------------
# scalar oracles

def conv_causal_reference(x, w):
    """Per-channel causal convolution, triple loop."""
    n, c, length = x.shape
    k = w.shape[1]
    out = np.zeros_like(x)
    for i in range(n):
        for ch in range(c):
            for t in range(length):
                acc = 0.0
                for j in range(k):
                    if t - j >= 0:
                        acc += w[ch, j] * x[i, ch, t - j]
                out[i, ch, t] = acc
    return out


def scan_reference(x, a_log, b_proj, c_proj, delta_proj, delta_bias, skip):
    """Scalar unrolled state-space recurrence, one loop level per index."""
    n, length, dp = x.shape
    state = a_log.shape[1]
    out = np.zeros_like(x)
    for i in range(n):
        h = np.zeros((dp, state))
        for t in range(length):
            token = x[i, t]
            pre = delta_proj.T @ token + delta_bias
            delta = np.log1p(np.exp(-np.abs(pre))) + np.maximum(pre, 0.0)  # softplus
            b_t = b_proj.T @ token
            c_t = c_proj.T @ token
            for ch in range(dp):
                y = 0.0
                for s in range(state):
                    a = -math.exp(a_log[ch, s])
                    decay = math.exp(delta[ch] * a)
                    h[ch, s] = decay * h[ch, s] + delta[ch] * b_t[s] * token[ch]
                    y += c_t[s] * h[ch, s]
                out[i, t, ch] = y + skip[ch] * token[ch]
    return out


def cosine_matrix_reference(a, b, eps=1e-12):
    """Pairwise cosines by explicit double loop."""
    out = np.zeros((a.shape[0], b.shape[0]))
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            na = math.sqrt(float((a[i] * a[i]).sum())) + eps
            nb = math.sqrt(float((b[j] * b[j]).sum())) + eps
            out[i, j] = float((a[i] * b[j]).sum()) / (na * nb)
    return out


def contrastive_reference(cos_mats, similarity, tau, mode, floor):
    """Term-by-term contrastive loss from precomputed cosine matrices.

    Returns (loss, clamp count).  ``cos_mats[m][i][j]`` is the cosine of
    fused anchor i against view-m projection j.
    """
    n = similarity.shape[0]
    total = 0.0
    clamped = 0
    for cos in cos_mats:
        for i in range(n):
            num = math.exp(cos[i][i] / tau)
            if mode == "literal":
                den = sum(math.exp((1.0 - similarity[i][j]) * cos[i][j] / tau)
                          for j in range(n)) - math.exp(1.0 / tau)
                if den < floor:
                    den = floor
                    clamped += 1
            else:
                den = sum(math.exp((1.0 - similarity[i][j]) * cos[i][j] / tau)
                          for j in range(n) if j != i)
            total += math.log(num / den)
    return -total / (2.0 * n), clamped


def accuracy_bruteforce(pred, truth):
    """Best matched fraction over every cluster/class bijection."""
    ids = sorted(set(int(v) for v in pred) | set(int(v) for v in truth))
    best = 0
    for perm in itertools.permutations(ids):
        relabel = dict(zip(ids, perm))
        best = max(best, sum(1 for p, t in zip(pred, truth) if relabel[int(p)] == int(t)))
    return best / len(pred)


def nmi_reference(pred, truth):
    """sqrt-normalized mutual information from explicit contingency counts."""
    n = len(pred)
    pred_ids = sorted(set(int(v) for v in pred))
    truth_ids = sorted(set(int(v) for v in truth))
    counts = {(t, p): 0 for t in truth_ids for p in pred_ids}
    for p, t in zip(pred, truth):
        counts[(int(t), int(p))] += 1
    pt = {t: sum(counts[(t, p)] for p in pred_ids) / n for t in truth_ids}
    pp = {p: sum(counts[(t, p)] for t in truth_ids) / n for p in pred_ids}
    h_t = -sum(v * math.log(v) for v in pt.values() if v > 0)
    h_p = -sum(v * math.log(v) for v in pp.values() if v > 0)
    if h_t == 0.0 or h_p == 0.0:
        return 0.0
    mi = 0.0
    for t in truth_ids:
        for p in pred_ids:
            joint = counts[(t, p)] / n
            if joint > 0:
                mi += joint * math.log(joint / (pt[t] * pp[p]))
    return max(mi, 0.0) / math.sqrt(h_t * h_p)


def purity_reference(pred, truth):
    """Average best-class overlap via explicit per-cluster counting."""
    n = len(pred)
    total = 0
    for cluster in set(int(v) for v in pred):
        members = [int(t) for p, t in zip(pred, truth) if int(p) == cluster]
        counts = {}
        for t in members:
            counts[t] = counts.get(t, 0) + 1
        total += max(counts.values())
    return total / n


def best_two_partition_centers(points):
    """Brute-force optimal 2-means on a 1-D point set: try every split."""
    pts = sorted(float(p) for p in points)
    best = None
    for cut in range(1, len(pts)):
        left, right = pts[:cut], pts[cut:]
        ml = sum(left) / len(left)
        mr = sum(right) / len(right)
        cost = sum((p - ml) ** 2 for p in left) + sum((p - mr) ** 2 for p in right)
        if best is None or cost < best[0]:
            best = (cost, (ml, mr))
    return best[1]
