"""The attack models: four scikit-learn classifiers and a CMA-ES surrogate.

Each trainer gets the same seeded train/test split and reports plain
test-set accuracy, so the numbers are directly comparable with the
majority-class baseline.  The CMA-ES attacker evolves a single linear
threshold over +/-1-encoded challenge bits (the one-stage analogue of an
arbiter-model attack, which is all an address-indexed PUF exposes), scoring
candidates by correlation between the linear response and the labels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.model_selection import GridSearchCV
from sklearn.neural_network import MLPClassifier
from sklearn.svm import SVC

# kernel methods and the evolution loop get a bounded, seeded subsample;
# everything else trains on the full split
SVM_SUBSAMPLE = 5000
SVM_GRID = {"C": [0.1, 1.0, 10.0], "gamma": ["scale", 0.1]}
CMA_SUBSAMPLE = 20000
CMA_MAX_ITER = 150
CMA_SIGMA0 = 0.5

MODEL_NAMES = ("lr", "svm", "cma_es", "mlp", "rf")


@dataclass(frozen=True)
class AttackResult:
    name: str
    accuracy: float | None
    trained: bool
    detail: str = ""


def majority_baseline(y_train: np.ndarray, y_test: np.ndarray) -> AttackResult:
    guess = int(np.round(y_train.mean()))
    acc = float(np.mean(y_test == guess))
    return AttackResult("majority", acc, True, detail=f"always {guess}")


def _subsample(rng: np.random.Generator, n: int, cap: int) -> np.ndarray:
    if n <= cap:
        return np.arange(n)
    return rng.choice(n, size=cap, replace=False)


def _train_lr(xtr, ytr, xte, yte, seed) -> AttackResult:
    clf = LogisticRegression(solver="lbfgs", max_iter=1000, random_state=seed)
    clf.fit(xtr, ytr)
    return AttackResult("lr", float(clf.score(xte, yte)), True)


def _train_svm(xtr, ytr, xte, yte, seed) -> AttackResult:
    idx = _subsample(np.random.default_rng(seed), ytr.size, SVM_SUBSAMPLE)
    search = GridSearchCV(SVC(kernel="rbf", random_state=seed),
                          SVM_GRID, cv=3, n_jobs=1)
    search.fit(xtr[idx], ytr[idx])
    return AttackResult("svm", float(search.score(xte, yte)), True,
                        detail=f"best {search.best_params_}")


def _train_mlp(xtr, ytr, xte, yte, seed) -> AttackResult:
    clf = MLPClassifier(hidden_layer_sizes=(100,), activation="relu",
                        alpha=1e-4, solver="lbfgs", max_iter=300,
                        random_state=seed)
    with warnings.catch_warnings():
        # unlearnable (post-XOR) data never converges; that is the point
        warnings.simplefilter("ignore", ConvergenceWarning)
        clf.fit(xtr, ytr)
    return AttackResult("mlp", float(clf.score(xte, yte)), True)


def _train_rf(xtr, ytr, xte, yte, seed) -> AttackResult:
    clf = RandomForestClassifier(n_estimators=100, criterion="entropy",
                                 oob_score=True, random_state=seed, n_jobs=1)
    clf.fit(xtr, ytr)
    return AttackResult("rf", float(clf.score(xte, yte)), True,
                        detail=f"oob {clf.oob_score_:.4f}")


def cma_minimize(fn, x0, sigma0: float, rng: np.random.Generator,
                 max_iter: int = CMA_MAX_ITER, population: int | None = None):
    """Minimize fn over R^n with a standard (mu/mu_w, lambda) CMA-ES.

    Returns (best_x, best_f, iterations).  Step-size control uses the
    usual conjugate evolution path; the covariance gets the rank-one plus
    rank-mu update.  Small fixed budgets — this is an attack harness, not
    an optimization library.
    """
    mean = np.asarray(x0, dtype=float).copy()
    n = mean.size
    lam = population if population is not None else 4 + int(3 * np.log(n))
    mu = lam // 2
    w = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mueff = 1.0 / float(np.sum(w ** 2))

    cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
    cs = (mueff + 2) / (n + mueff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, np.sqrt((mueff - 1) / (n + 1)) - 1) + cs
    chin = np.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n ** 2))

    sigma = float(sigma0)
    cov = np.eye(n)
    ps = np.zeros(n)
    pc = np.zeros(n)
    best_x, best_f = mean.copy(), float(fn(mean))
    it = 0
    for it in range(1, max_iter + 1):
        vals, vecs = np.linalg.eigh(cov)
        vals = np.maximum(vals, 1e-20)
        sqrt_c = (vecs * np.sqrt(vals)) @ vecs.T
        inv_sqrt_c = (vecs / np.sqrt(vals)) @ vecs.T

        z = rng.standard_normal((lam, n))
        xs = mean + sigma * z @ sqrt_c.T
        fs = np.array([fn(x) for x in xs])
        order = np.argsort(fs)
        if fs[order[0]] < best_f:
            best_f = float(fs[order[0]])
            best_x = xs[order[0]].copy()

        sel = xs[order[:mu]]
        old_mean = mean
        mean = w @ sel
        y = (mean - old_mean) / sigma

        ps = (1 - cs) * ps + np.sqrt(cs * (2 - cs) * mueff) * (inv_sqrt_c @ y)
        hsig = (np.linalg.norm(ps) / np.sqrt(1 - (1 - cs) ** (2 * it))
                < (1.4 + 2 / (n + 1)) * chin)
        pc = (1 - cc) * pc + hsig * np.sqrt(cc * (2 - cc) * mueff) * y

        art = (sel - old_mean) / sigma
        cov = ((1 - c1 - cmu) * cov
               + c1 * (np.outer(pc, pc)
                       + (0.0 if hsig else cc * (2 - cc)) * cov)
               + cmu * art.T @ (w[:, None] * art))
        sigma *= np.exp((cs / damps) * (np.linalg.norm(ps) / chin - 1))
        if sigma * np.sqrt(float(vals.max())) < 1e-12:
            break
    return best_x, best_f, it


def _train_cma(xtr, ytr, xte, yte, seed) -> AttackResult:
    rng = np.random.default_rng(seed)
    idx = _subsample(rng, ytr.size, CMA_SUBSAMPLE)
    # +/-1 encoding with a bias column; fitness = -|corr(linear score, labels)|
    enc = np.hstack([2.0 * xtr[idx] - 1.0, np.ones((idx.size, 1))])
    target = 2.0 * ytr[idx] - 1.0
    t_centered = target - target.mean()
    t_norm = float(np.linalg.norm(t_centered))

    def fitness(wv: np.ndarray) -> float:
        s = enc @ wv
        s = s - s.mean()
        denom = float(np.linalg.norm(s)) * t_norm
        if denom == 0.0:
            return 0.0
        return -abs(float(s @ t_centered) / denom)

    w, f, iters = cma_minimize(fitness, np.zeros(enc.shape[1]), CMA_SIGMA0,
                               rng, max_iter=CMA_MAX_ITER)
    if np.mean((enc @ w > 0) == (target > 0)) < 0.5:
        w = -w          # |corr| is sign-blind; orient by train accuracy
    enc_te = np.hstack([2.0 * xte - 1.0, np.ones((yte.size, 1))])
    acc = float(np.mean((enc_te @ w > 0) == (yte > 0)))
    return AttackResult("cma_es", acc, True,
                        detail=f"corr {-f:.4f} after {iters} iterations")


_TRAINERS = {"lr": _train_lr, "svm": _train_svm, "cma_es": _train_cma,
             "mlp": _train_mlp, "rf": _train_rf}


def train_one(args) -> tuple[str, AttackResult]:
    """Picklable worker: (name, xtr, ytr, xte, yte, seed) -> (name, result)."""
    name, xtr, ytr, xte, yte, seed = args
    return name, _TRAINERS[name](xtr, ytr, xte, yte, seed)
