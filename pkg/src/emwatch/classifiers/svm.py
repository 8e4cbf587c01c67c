"""Kernelized SVM trained with simplified sequential minimal optimization.

Multiclass is one-vs-rest (one binary machine per class). With two classes a
single machine is trained for the positive class and mirrored, so the argmax
of the score vector always equals the sign of that machine's margin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KERNELS = ("linear", "polynomial", "rbf")

_POLY_COEF0 = 1.0  # fixed; degree/gamma are the tunable axes


def resolve_gamma(gamma, n_features: int) -> float:
    if gamma == "auto":
        return 1.0 / n_features
    value = float(gamma)
    if value <= 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    return value


def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: str, degree: int, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    if kernel == "polynomial":
        return (gamma * (A @ B.T) + _POLY_COEF0) ** degree
    if kernel == "rbf":
        sq = (
            np.sum(A * A, axis=1)[:, None]
            + np.sum(B * B, axis=1)[None, :]
            - 2.0 * (A @ B.T)
        )
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


def smo_train(
    K: np.ndarray,
    y: np.ndarray,
    C: float,
    rng: np.random.Generator,
    tol: float = 1e-3,
    max_quiet_passes: int = 5,
    max_sweeps: int = 120,
) -> tuple[np.ndarray, float]:
    """Solve the dual for one binary machine (y in {-1, +1}) on a precomputed
    kernel matrix. Stops after ``max_quiet_passes`` sweeps without an update."""
    n = y.size
    alpha = np.zeros(n)
    coef = np.zeros(n)  # alpha * y, kept in sync for O(n) margin evaluation
    b = 0.0
    quiet = 0
    sweeps = 0
    while quiet < max_quiet_passes and sweeps < max_sweeps:
        changed = 0
        for i in range(n):
            e_i = float(coef @ K[i]) + b - y[i]
            r_i = e_i * y[i]
            if not ((r_i < -tol and alpha[i] < C) or (r_i > tol and alpha[i] > 0)):
                continue
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            e_j = float(coef @ K[j]) + b - y[j]
            a_i, a_j = alpha[i], alpha[j]
            if y[i] == y[j]:
                lo, hi = max(0.0, a_i + a_j - C), min(C, a_i + a_j)
            else:
                lo, hi = max(0.0, a_j - a_i), min(C, C + a_j - a_i)
            if hi - lo < 1e-12:
                continue
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0:
                continue
            a_j_new = a_j - y[j] * (e_i - e_j) / eta
            a_j_new = min(max(a_j_new, lo), hi)
            if abs(a_j_new - a_j) < 1e-7:
                continue
            a_i_new = a_i + y[i] * y[j] * (a_j - a_j_new)
            alpha[i], alpha[j] = a_i_new, a_j_new
            coef[i], coef[j] = a_i_new * y[i], a_j_new * y[j]
            b1 = b - e_i - y[i] * (a_i_new - a_i) * K[i, i] - y[j] * (a_j_new - a_j) * K[i, j]
            b2 = b - e_j - y[i] * (a_i_new - a_i) * K[i, j] - y[j] * (a_j_new - a_j) * K[j, j]
            if 0.0 < a_i_new < C:
                b = b1
            elif 0.0 < a_j_new < C:
                b = b2
            else:
                b = (b1 + b2) / 2.0
            changed += 1
        sweeps += 1
        quiet = quiet + 1 if changed == 0 else 0
    return alpha, b


@dataclass(frozen=True)
class SvmMachine:
    """One binary one-vs-rest machine: margin(x) = coef . k(sv, x) + bias."""
    target_class: int
    support_vectors: np.ndarray  # (m, n_features)
    coef: np.ndarray  # (m,) = alpha_i * y_i at support points
    bias: float
    kernel: str
    degree: int
    gamma: float

    def margins(self, X: np.ndarray) -> np.ndarray:
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        K = kernel_matrix(X, self.support_vectors, self.kernel, self.degree, self.gamma)
        return K @ self.coef + self.bias


def fit_machines(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    C: float,
    kernel: str,
    degree: int,
    gamma,
    seed: int,
) -> list[SvmMachine]:
    gamma_value = resolve_gamma(gamma, X.shape[1])
    K = kernel_matrix(X, X, kernel, degree, gamma_value)
    targets = [1] if n_classes == 2 else list(range(n_classes))
    children = np.random.SeedSequence(seed).spawn(len(targets))
    machines = []
    for target, child in zip(targets, children):
        y_bin = np.where(y == target, 1.0, -1.0)
        alpha, bias = smo_train(K, y_bin, C, np.random.default_rng(child))
        keep = alpha > 1e-10
        machines.append(
            SvmMachine(
                target_class=target,
                support_vectors=X[keep].copy(),
                coef=(alpha * y_bin)[keep].copy(),
                bias=float(bias),
                kernel=kernel,
                degree=degree,
                gamma=gamma_value,
            )
        )
    return machines


def machine_scores(machines: list[SvmMachine], n_classes: int, X: np.ndarray) -> np.ndarray:
    """Per-class signed margins, shape (n_samples, n_classes)."""
    if n_classes == 2:
        m = machines[0].margins(X)
        return np.column_stack([-m, m])
    return np.column_stack([mach.margins(X) for mach in machines])
