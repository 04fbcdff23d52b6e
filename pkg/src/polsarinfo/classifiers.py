"""Supervised pixel classifiers on the nine covariance feature channels.

Two classifiers are implemented: Gaussian maximum likelihood with equal
priors, and an RBF-kernel SVM trained by SMO and combined one-against-one.
Ties are always broken toward the lowest class id.
"""
import logging
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import kernels
from .raster import N_FEATURES

log = logging.getLogger(__name__)

MIN_TRAIN_PIXELS = 10
DEFAULT_GAMMA = 1.0 / N_FEATURES
DEFAULT_C = 1.0
DEFAULT_TOL = 1e-3
RIDGE_FACTOR = 1e-6
RIDGE_FLOOR = 1e-12


class TrainingError(ValueError):
    """Training data cannot support the requested model."""


class ConvergenceWarning(UserWarning):
    pass


def _training_set(features, regions):
    X, y = regions.samples(features, "train")
    return np.asarray(X, dtype=np.float64), y


# --------------------------------------------------------------------------
# Gaussian maximum likelihood


@dataclass(frozen=True, eq=False)
class GaussianModel:
    class_ids: tuple
    class_names: tuple
    means: np.ndarray
    covariances: np.ndarray
    priors: np.ndarray
    ridges: np.ndarray

    kind = "ml"

    def regularized(self):
        eye = np.eye(self.means.shape[1])
        return self.covariances + self.ridges[:, None, None] * eye


def ridge_for(cov):
    t = np.trace(cov)
    return RIDGE_FACTOR * t / cov.shape[0] if t > 0 else RIDGE_FLOOR


def fit_gaussian(features, regions):
    """Per-class sample mean and covariance of the training pixels."""
    X, y = _training_set(features, regions)
    ids = regions.class_ids
    if not ids:
        raise TrainingError("no training regions")
    names = dict(zip(regions.class_ids, regions.class_names))
    means, covs, ridges = [], [], []
    for cid in ids:
        Xk = X[y == cid]
        if Xk.shape[0] < MIN_TRAIN_PIXELS:
            raise TrainingError(
                f"class {cid} ({names[cid]}) has {Xk.shape[0]} training pixels; "
                f"at least {MIN_TRAIN_PIXELS} are required"
            )
        mu = Xk.mean(axis=0)
        cov = np.cov(Xk, rowvar=False)
        means.append(mu)
        covs.append(cov)
        ridges.append(ridge_for(cov))
    k = len(ids)
    return GaussianModel(
        class_ids=tuple(ids),
        class_names=tuple(names[c] for c in ids),
        means=np.array(means),
        covariances=np.array(covs),
        priors=np.full(k, 1.0 / k),
        ridges=np.array(ridges),
    )


def gaussian_discriminants(model, X):
    """(n, K) values of ln P(k) - ln det(S_k)/2 - (x - mu_k)' S_k^-1 (x - mu_k) / 2."""
    X = np.asarray(X, dtype=np.float64).reshape(-1, model.means.shape[1])
    out = np.empty((X.shape[0], len(model.class_ids)))
    for k, A in enumerate(model.regularized()):
        L = np.linalg.cholesky(A)
        logdet = 2.0 * np.log(np.diag(L)).sum()
        Linv = np.linalg.inv(L)
        z = (X - model.means[k]) @ Linv.T
        out[:, k] = np.log(model.priors[k]) - 0.5 * logdet - 0.5 * np.einsum("ij,ij->i", z, z)
    return out


def predict_gaussian(model, X):
    """Class id of the largest discriminant; accepts one vector or (..., 9)."""
    X = np.asarray(X, dtype=np.float64)
    g = gaussian_discriminants(model, X)
    pred = np.asarray(model.class_ids)[np.argmax(g, axis=1)]
    if X.ndim == 1:
        return int(pred[0])
    return pred.reshape(X.shape[:-1])


# --------------------------------------------------------------------------
# Support vector machine


def rbf_kernel(x, y, gamma=DEFAULT_GAMMA):
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    d = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return float(np.exp(-gamma * np.dot(d, d)))


@dataclass(frozen=True, eq=False)
class SvmBinaryModel:
    """Kernel expansion g(x) = sum_i coef_i K(sv_i, x) + bias.

    ``coef`` holds alpha_i * r_i; positive decision values vote for
    ``labels[0]``, the rest for ``labels[1]``. ``support`` indexes the
    support vectors into the training set when known.
    """

    support_vectors: np.ndarray
    coef: np.ndarray
    bias: float
    gamma: float
    C: float
    labels: tuple = (1, -1)
    support: np.ndarray = None
    n_iter: int = 0

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return kernels.decision_values(X, self.support_vectors, self.coef, self.gamma, self.bias)


def dual_objective(alpha, K, r):
    """sum(alpha) - alpha' Q alpha / 2 with Q_ij = r_i r_j K_ij."""
    ar = alpha * r
    return float(alpha.sum() - 0.5 * ar @ K @ ar)


def train_svm_binary(X, r, C=DEFAULT_C, gamma=DEFAULT_GAMMA, tol=DEFAULT_TOL, max_iter=None,
                     labels=(1, -1)):
    """Soft-margin RBF SVM on labels r in {-1, +1}, solved by SMO."""
    X = np.asarray(X, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != r.shape[0]:
        raise ValueError("X must be (n, p) with one label per row")
    if not np.all((r == 1) | (r == -1)):
        raise ValueError("labels must be +1 or -1")
    if not ((r > 0).any() and (r < 0).any()):
        raise TrainingError("binary SVM needs samples of both classes")
    if not gamma > 0 or not C > 0:
        raise ValueError("gamma and C must be positive")
    n = X.shape[0]
    if max_iter is None:
        max_iter = max(10_000_000, 100 * n)
    K = kernels.rbf_matrix(X, X, gamma)
    alpha, bias, n_iter, converged = kernels.smo_solve(K, r, C, tol, max_iter)
    if not converged:
        warnings.warn(f"SMO stopped after {n_iter} iterations without reaching tol={tol}",
                      ConvergenceWarning, stacklevel=2)
    support = np.flatnonzero(alpha > 0)
    return SvmBinaryModel(
        support_vectors=X[support].copy(),
        coef=(alpha * r)[support],
        bias=float(bias),
        gamma=float(gamma),
        C=float(C),
        labels=tuple(labels),
        support=support,
        n_iter=n_iter,
    )


@dataclass(frozen=True, eq=False)
class SvmMulticlassModel:
    class_ids: tuple
    class_names: tuple
    mean: np.ndarray
    scale: np.ndarray
    pairs: tuple = field(default_factory=tuple)

    kind = "svm"

    def standardize(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale


def standardization(X):
    """Per-channel mean and (population) standard deviation; zero sd maps to 1."""
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    return mean, np.where(sd > 0, sd, 1.0)


def fit_svm(features, regions, C=DEFAULT_C, gamma=DEFAULT_GAMMA, tol=DEFAULT_TOL):
    """One-against-one SVM over every pair of training classes."""
    X, y = _training_set(features, regions)
    ids = regions.class_ids
    if len(ids) < 2:
        raise TrainingError("SVM classification needs at least two classes")
    names = dict(zip(regions.class_ids, regions.class_names))
    for cid in ids:
        if not (y == cid).any():
            raise TrainingError(f"class {cid} ({names[cid]}) has no training pixels")
    mean, scale = standardization(X)
    Z = (X - mean) / scale
    pairs = []
    for a, b in combinations(ids, 2):
        sel = (y == a) | (y == b)
        r = np.where(y[sel] == a, 1.0, -1.0)
        model = train_svm_binary(Z[sel], r, C=C, gamma=gamma, tol=tol, labels=(a, b))
        log.debug("pair %d/%d: %d SVs, %d iterations", a, b, model.coef.size, model.n_iter)
        pairs.append(((a, b), model))
    return SvmMulticlassModel(
        class_ids=tuple(ids),
        class_names=tuple(names[c] for c in ids),
        mean=mean,
        scale=scale,
        pairs=tuple(pairs),
    )


def vote(class_ids, pair_labels, decisions):
    """One-against-one majority vote; ties go to the lowest class id.

    ``decisions`` is (n_pairs, n_samples); a positive value votes for the
    first label of its pair.
    """
    ids = np.asarray(class_ids)
    order = {c: k for k, c in enumerate(class_ids)}
    decisions = np.asarray(decisions)
    votes = np.zeros((decisions.shape[1], len(ids)), dtype=np.int64)
    for (a, b), g in zip(pair_labels, decisions):
        pos = g > 0
        votes[pos, order[a]] += 1
        votes[~pos, order[b]] += 1
    return ids[np.argmax(votes, axis=1)]


def predict_svm(model, X):
    """Class ids for raw (unstandardized) feature vectors; accepts (9,) or (..., 9)."""
    X = np.asarray(X, dtype=np.float64)
    Z = model.standardize(X.reshape(-1, X.shape[-1]))
    decisions = np.array([m.decision_function(Z) for _, m in model.pairs])
    pred = vote(model.class_ids, [p for p, _ in model.pairs], decisions)
    if X.ndim == 1:
        return int(pred[0])
    return pred.reshape(X.shape[:-1])


# --------------------------------------------------------------------------
# dispatch


CLASSIFIERS = ("ml", "svm")


def fit_classifier(kind, features, regions):
    if kind == "ml":
        return fit_gaussian(features, regions)
    if kind == "svm":
        return fit_svm(features, regions)
    raise ValueError(f"unknown classifier {kind!r}; choose from {CLASSIFIERS}")


def predict(model, X):
    if model.kind == "ml":
        return predict_gaussian(model, X)
    return predict_svm(model, X)
