"""Default hyperparameter grids, four tunable axes per family.

The SVM grid contains the known-good configuration C=0.5, polynomial kernel of
degree 2, gamma = 1/n_features. Degree only matters for the polynomial kernel,
so non-polynomial cells collapse across the degree axis."""
from __future__ import annotations

from itertools import product

from . import ForestSpec, MlpSpec, SvmSpec

SVM_C = (0.1, 0.5, 1.0, 10.0)
SVM_KERNELS = ("linear", "polynomial", "rbf")
SVM_DEGREES = (2, 3)
SVM_GAMMAS = ("auto", 0.01)

FOREST_TREES = (50, 100)
FOREST_DEPTHS = (8, 16)
FOREST_MIN_LEAF = (1, 5)
FOREST_FEATURE_FRACTIONS = (0.3, 0.6)

MLP_HIDDEN = ((64,), (128, 64))
MLP_LEARNING_RATES = (0.01, 0.001)
MLP_EPOCHS = (100, 300)
MLP_L2 = (0.0, 1e-4)


def svm_grid() -> list:
    cells = []
    for C, kernel, degree, gamma in product(SVM_C, SVM_KERNELS, SVM_DEGREES, SVM_GAMMAS):
        if kernel != "polynomial" and degree != SVM_DEGREES[0]:
            continue  # degree is inert outside the polynomial kernel
        cells.append(SvmSpec(C=C, kernel=kernel, degree=degree, gamma=gamma))
    return cells


def forest_grid() -> list:
    return [
        ForestSpec(n_trees=t, max_depth=d, min_samples_leaf=m, max_features_fraction=f)
        for t, d, m, f in product(
            FOREST_TREES, FOREST_DEPTHS, FOREST_MIN_LEAF, FOREST_FEATURE_FRACTIONS
        )
    ]


def mlp_grid() -> list:
    return [
        MlpSpec(hidden_layers=h, learning_rate=lr, epochs=e, l2_penalty=l2)
        for h, lr, e, l2 in product(MLP_HIDDEN, MLP_LEARNING_RATES, MLP_EPOCHS, MLP_L2)
    ]


def default_grid(family: str) -> list:
    if family == "svm":
        return svm_grid()
    if family == "forest":
        return forest_grid()
    if family == "mlp":
        return mlp_grid()
    raise ValueError(f"unknown family {family!r}")
