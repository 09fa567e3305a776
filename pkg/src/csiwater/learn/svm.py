"""Support vector machine trained by sequential minimal optimisation.

Binary machines solve the dual soft-margin problem two multipliers at a
time: each iteration picks the maximal violating pair (the sample
imposing the largest lower bound on the bias against the one imposing
the smallest upper bound), maximises the dual analytically over that
pair inside the box, and stops once the feasible bias interval closes
within tolerance, i.e. the KKT conditions hold within ``tol`` for every
sample. Each pair step solves its subproblem exactly, so the dual
objective never decreases. The solver is deterministic.

Multiclass problems train one machine per unordered class pair
(one-vs-one) and predict by majority vote, ties broken by the aggregate
decision values.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .base import (
    DegenerateClassError,
    check_width,
    encode_labels,
    resolve_classes,
    sigmoid,
)

KERNELS = ("linear", "rbf")
_MIN_STEP = 1e-12


def kernel_matrix(
    kernel: str, gamma: Optional[float], A: np.ndarray, B: np.ndarray
) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        aa = np.sum(A * A, axis=1)[:, None]
        bb = np.sum(B * B, axis=1)[None, :]
        sq = np.maximum(aa + bb - 2.0 * (A @ B.T), 0.0)
        return np.exp(-gamma * sq)
    raise ValueError(f"kernel must be one of {KERNELS}")


@dataclass(eq=False)
class BinarySvm:
    """One trained binary machine on +/-1 labels."""

    kernel: str
    gamma: Optional[float]
    C: float
    tol: float
    X_sv: np.ndarray
    y_sv: np.ndarray
    alpha_sv: np.ndarray
    b: float
    converged: bool
    dual_history: np.ndarray
    n_passes: int

    def decision(self, Q: np.ndarray) -> np.ndarray:
        K = kernel_matrix(self.kernel, self.gamma, Q, self.X_sv)
        return K @ (self.alpha_sv * self.y_sv) + self.b


def _dual_objective(alpha: np.ndarray, y: np.ndarray, K: np.ndarray) -> float:
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def _pair_step(i, j, alpha, y, raw, K, C):
    """Analytic two-multiplier update, or None when the pair admits none.

    The update direction depends only on the bias-free decision values:
    E_i - E_j = raw_i - y_i - raw_j + y_j.
    """
    if i == j:
        return None
    dE = (raw[i] - y[i]) - (raw[j] - y[j])
    ai, aj = alpha[i], alpha[j]
    if y[i] != y[j]:
        L, H = max(0.0, aj - ai), min(C, C + aj - ai)
    else:
        L, H = max(0.0, ai + aj - C), min(C, ai + aj)
    if H - L < _MIN_STEP:
        return None
    eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
    if eta >= 0.0:
        return None
    aj_new = aj - y[j] * dE / eta
    aj_new = min(H, max(L, aj_new))
    if abs(aj_new - aj) < _MIN_STEP:
        return None
    ai_new = ai + y[i] * y[j] * (aj - aj_new)
    return ai_new, aj_new


def _bias_interval(raw, y, alpha, C):
    """Feasible-bias bounds from the KKT conditions.

    With g_i = y_i - raw_i, every multiplier below its upper bound on the
    positive side (or above zero on the negative side) imposes b >= g_i,
    and symmetrically for the other side. The margin conditions hold
    within tol for every sample iff max(lower) - min(upper) <= 2*tol.
    """
    g = y - raw
    lower_set = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    upper_set = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
    lo = np.max(g[lower_set]) if lower_set.any() else -np.inf
    hi = np.min(g[upper_set]) if upper_set.any() else np.inf
    return lo, hi


def _midpoint_bias(lo: float, hi: float) -> float:
    if np.isinf(lo) and np.isinf(hi):
        return 0.0
    if np.isinf(lo):
        return float(hi)
    if np.isinf(hi):
        return float(lo)
    return float(0.5 * (lo + hi))


def _smo(X, y, kernel, gamma, C, tol, max_passes):
    """Maximal-violating-pair SMO. One pass = n pair updates."""
    n = X.shape[0]
    K = kernel_matrix(kernel, gamma, X, X)
    alpha = np.zeros(n)
    raw = np.zeros(n)  # decision values without bias, kept incremental
    dual_history: list[float] = []
    converged = False
    steps = 0
    max_steps = max_passes * n

    neg_inf = -np.inf
    while steps < max_steps:
        g = y - raw
        lower_set = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        upper_set = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        if not lower_set.any() or not upper_set.any():
            converged = True
            break
        i = int(np.argmax(np.where(lower_set, g, neg_inf)))
        j = int(np.argmin(np.where(upper_set, g, np.inf)))
        if g[i] - g[j] <= 2.0 * tol:
            converged = True
            break

        step = _pair_step(i, j, alpha, y, raw, K, C)
        pair = (i, j)
        if step is None:
            # degenerate pair (duplicate points or pinned box); scan a few
            # next-most-violating partners before giving up
            lo_order = np.nonzero(lower_set)[0][
                np.argsort(-g[lower_set], kind="stable")
            ]
            hi_order = np.nonzero(upper_set)[0][np.argsort(g[upper_set], kind="stable")]
            for ii in lo_order[:8]:
                for jj in hi_order[:8]:
                    step = _pair_step(ii, jj, alpha, y, raw, K, C)
                    if step is not None:
                        pair = (int(ii), int(jj))
                        break
                if step is not None:
                    break
        if step is None:
            break  # a violation remains but no pair admits progress

        i, j = pair
        ai_new, aj_new = step
        raw = raw + (ai_new - alpha[i]) * y[i] * K[i] \
            + (aj_new - alpha[j]) * y[j] * K[j]
        alpha[i], alpha[j] = ai_new, aj_new
        steps += 1
        if steps % n == 0:
            dual_history.append(_dual_objective(alpha, y, K))

    lo, hi = _bias_interval(raw, y, alpha, C)
    b = _midpoint_bias(lo, hi)
    if not converged:
        converged = lo - hi <= 2.0 * tol
    dual_history.append(_dual_objective(alpha, y, K))
    n_passes = steps // n + (1 if steps % n else 0)
    return alpha, b, bool(converged), np.array(dual_history), n_passes


@dataclass(eq=False)
class SvmModel:
    classes: tuple
    n_features: int
    kernel: str
    gamma: Optional[float]
    C: float
    tol: float
    machines: list[tuple[int, int, BinarySvm]]
    converged: bool


def svm_train(
    X: np.ndarray,
    y: Sequence,
    kernel: str = "linear",
    C: float = 1.0,
    gamma: Optional[float] = None,
    tol: float = 1e-3,
    max_passes: int = 200,
    classes=None,
) -> SvmModel:
    """Fit one-vs-one SMO machines.

    ``max_passes`` caps the number of optimisation sweeps; if the budget
    runs out the best iterate is kept and the model's ``converged`` flag
    is False (a warning condition, not an error).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ValueError("X must be 2-D with one label per row")
    if kernel not in KERNELS:
        raise ValueError(f"kernel must be one of {KERNELS}")
    if C <= 0 or tol <= 0 or max_passes < 1:
        raise ValueError("need C > 0, tol > 0, max_passes >= 1")
    if kernel == "rbf" and gamma is None:
        gamma = 1.0 / X.shape[1]

    classes = resolve_classes(y, classes)
    if len(classes) < 2:
        raise DegenerateClassError("svm needs at least two classes")
    codes = encode_labels(y, classes)

    machines: list[tuple[int, int, BinarySvm]] = []
    all_converged = True
    for a, bcls in combinations(range(len(classes)), 2):
        mask = (codes == a) | (codes == bcls)
        Xp = X[mask]
        y_pm = np.where(codes[mask] == bcls, 1.0, -1.0)
        if np.all(y_pm == 1.0) or np.all(y_pm == -1.0):
            raise DegenerateClassError(
                f"pair ({classes[a]!r}, {classes[bcls]!r}) saw a single class"
            )
        alpha, b, conv, dual_history, n_passes = _smo(
            Xp, y_pm, kernel, gamma, C, tol, max_passes
        )
        keep = alpha > 0.0
        machine = BinarySvm(
            kernel=kernel,
            gamma=gamma,
            C=C,
            tol=tol,
            X_sv=Xp[keep].copy(),
            y_sv=y_pm[keep].copy(),
            alpha_sv=alpha[keep].copy(),
            b=b,
            converged=conv,
            dual_history=dual_history,
            n_passes=n_passes,
        )
        all_converged = all_converged and conv
        machines.append((a, bcls, machine))

    return SvmModel(
        classes=classes,
        n_features=int(X.shape[1]),
        kernel=kernel,
        gamma=gamma,
        C=C,
        tol=tol,
        machines=machines,
        converged=all_converged,
    )


def svm_scores(model: SvmModel, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-class scores.

    Binary models expose the signed decision value directly (scores
    (-f, f)), which preserves ranking for AUC. One-vs-one models score
    votes plus a squashed aggregate decision value, so the argmax is the
    majority vote with decision-magnitude tie-breaking.
    """
    Q = check_width(model.n_features, Q)
    K = len(model.classes)
    if K == 2:
        f = model.machines[0][2].decision(Q)
        scores = np.stack([-f, f], axis=1)
        return np.argmax(scores, axis=1), scores

    votes = np.zeros((Q.shape[0], K))
    toward = np.zeros((Q.shape[0], K))
    for a, bcls, machine in model.machines:
        f = machine.decision(Q)
        votes[:, bcls] += (f > 0).astype(float)
        votes[:, a] += (f <= 0).astype(float)
        toward[:, bcls] += f
        toward[:, a] -= f
    scores = votes + sigmoid(toward)
    return np.argmax(scores, axis=1), scores
