"""Learned delay regressor: a small multilayer perceptron from (n, p_norm) to alpha.

Inputs are min-max scaled per column.  The network regresses the spacing as
a fraction of its feasible range, ``alpha / (2 pi / n)``, which keeps the
target in ``[0, 1]`` for every population size; predictions are clamped to
that range before converting back to radians.
"""

from dataclasses import dataclass
import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .delay import alpha_grid, steady_state_rms
from .errors import ConfigError, DegenerateScalerError, ModelCorruptError, ShapeError, TrainingError
from .oscillators import TWO_PI
from .seeding import rng_for

FORMAT_VERSION = 1
DEFAULT_SIZES = (2, 2, 4, 1)


@dataclass(frozen=True)
class Scaler:
    """Column-wise min-max bounds."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape:
            raise ShapeError("scaler bounds differ in shape")
        flat = np.flatnonzero(hi <= lo)
        if flat.size:
            raise DegenerateScalerError(f"column(s) {flat.tolist()} have zero range")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def fit(cls, x):
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            raise ShapeError("cannot fit a scaler on no data")
        return cls(x.min(axis=0), x.max(axis=0))

    def transform(self, x):
        return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)

    def inverse(self, z):
        return np.asarray(z, dtype=float) * (self.hi - self.lo) + self.lo


def minmax_normalize(x, scaler=None):
    """Scale ``x`` to ``[0, 1]`` per column; returns ``(scaled, scaler)``."""
    scaler = Scaler.fit(x) if scaler is None else scaler
    return scaler.transform(x), scaler


def minmax_denormalize(z, scaler):
    return scaler.inverse(z)


# --- dataset -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Dataset:
    n: np.ndarray
    p_norm: np.ndarray  # percent
    alpha: np.ndarray  # rad
    seed: int = None

    def __post_init__(self):
        cols = [np.asarray(c, dtype=float).ravel() for c in (self.n, self.p_norm, self.alpha)]
        if len({c.size for c in cols}) != 1:
            raise ShapeError("dataset columns differ in length")
        for name, c in zip(("n", "p_norm", "alpha"), cols):
            object.__setattr__(self, name, c)

    def __len__(self):
        return self.n.size

    @property
    def features(self):
        return np.column_stack([self.n, self.p_norm])

    def subset(self, idx):
        return Dataset(self.n[idx], self.p_norm[idx], self.alpha[idx], self.seed)


def generate_dataset(n_range=(10, 500), grid_size=100, seed=0, stride=1,
                     power_range=(1.0, 2.0), duty_range=(0.4812, 0.5354)):
    """Tabulate steady-state RMS reduction for one population per size ``n``.

    Each population draws from its own labelled stream, so a strided dataset
    is an exact row subset of the full one.
    """
    lo, hi = (int(v) for v in n_range)
    if lo < 2 or hi < lo or stride < 1:
        raise ConfigError(f"bad n_range {n_range} or stride {stride}")
    blocks = []
    for n in range(lo, hi + 1, stride):
        rng = rng_for(seed, f"dataset/n={n}")
        powers = rng.uniform(*power_range, n)
        duties = rng.uniform(*duty_range, n)
        alphas = alpha_grid(n, grid_size)
        levels = steady_state_rms(powers, duties, alphas)
        pn = 100.0 * (levels[0] - levels) / levels[0]
        blocks.append((np.full(grid_size, n), pn, alphas))
    n_col, p_col, a_col = (np.concatenate(c) for c in zip(*blocks))
    return Dataset(n_col, p_col, a_col, seed)


def split_dataset(ds, train_fraction=0.7, seed=0):
    """Seeded shuffle then split; the training part holds ``floor(fraction * rows)``."""
    if not 0 < train_fraction < 1:
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")
    order = rng_for(seed, "split").permutation(len(ds))
    k = int(math.floor(train_fraction * len(ds) + 1e-9))
    return ds.subset(order[:k]), ds.subset(order[k:])


# --- network -----------------------------------------------------------------

def _relu(z):
    return np.maximum(z, 0.0)


ACTIVATIONS = {
    # tag: (f, f' expressed through pre-activation z and output a)
    "relu": (_relu, lambda z, a: (z > 0).astype(float)),
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "identity": (lambda z: z, lambda z, a: np.ones_like(z)),
}


@dataclass(eq=False)
class MlpModel:
    """Fully connected network plus the scalers that frame its inputs and target."""

    sizes: tuple
    weights: list  # weights[l] has shape (sizes[l], sizes[l+1])
    biases: list
    hidden_activation: str = "tanh"
    output_activation: str = "identity"
    input_scaler: Scaler = None
    alpha_scaler: Scaler = None  # min-max of alpha, used for scaled-domain metrics

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        for tag in (self.hidden_activation, self.output_activation):
            if tag not in ACTIVATIONS:
                raise ConfigError(f"unknown activation {tag!r}")
        shapes = list(zip(self.sizes[:-1], self.sizes[1:]))
        if len(self.weights) != len(shapes) or len(self.biases) != len(shapes):
            raise ShapeError(f"expected {len(shapes)} layers")
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.biases = [np.asarray(b, dtype=float) for b in self.biases]
        for w, b, shape in zip(self.weights, self.biases, shapes):
            if w.shape != shape or b.shape != (shape[1],):
                raise ShapeError(f"layer shape {w.shape}/{b.shape} does not match {shape}")

    @property
    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    @property
    def activations(self):
        return [self.hidden_activation] * (len(self.weights) - 1) + [self.output_activation]

    def params(self):
        return self.weights + self.biases

    def copy(self):
        return MlpModel(self.sizes, [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.hidden_activation,
                        self.output_activation, self.input_scaler, self.alpha_scaler)


def init_mlp(sizes=DEFAULT_SIZES, seed=0, hidden_activation="tanh", restart=0):
    """Weights uniform in +-1/sqrt(fan_in), zero biases."""
    rng = rng_for(seed, f"init/{restart}")
    weights = [rng.uniform(-1.0, 1.0, (a, b)) / math.sqrt(a)
               for a, b in zip(sizes[:-1], sizes[1:])]
    biases = [np.zeros(b) for b in sizes[1:]]
    return MlpModel(tuple(sizes), weights, biases, hidden_activation)


def _forward_trace(model, x):
    pre, post = [], [x]
    a = x
    for w, b, tag in zip(model.weights, model.biases, model.activations):
        z = a @ w + b
        a = ACTIVATIONS[tag][0](z)
        pre.append(z)
        post.append(a)
    return pre, post


def forward(model, x):
    """Raw network output for already-scaled inputs of shape (batch, sizes[0])."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.sizes[0]:
        raise ShapeError(f"expected {model.sizes[0]} input columns, got {x.shape[1]}")
    out = _forward_trace(model, x)[1][-1]
    if not np.all(np.isfinite(out)):
        raise ModelCorruptError("network produced non-finite output")
    return out


def gradients(model, x, y):
    """Mean-squared-error loss and its gradient for every weight and bias."""
    pre, post = _forward_trace(model, x)
    err = post[-1] - y
    loss = float(np.mean(err * err))
    g = 2.0 * err / err.size
    last = len(model.weights) - 1
    gw, gb = [None] * len(model.weights), [None] * len(model.weights)
    for l in range(last, -1, -1):
        g = g * ACTIVATIONS[model.activations[l]][1](pre[l], post[l + 1])
        gw[l] = post[l].T @ g
        gb[l] = g.sum(axis=0)
        g = g @ model.weights[l].T
    return loss, gw + gb


def _design(model, ds):
    x = model.input_scaler.transform(ds.features)
    y = (ds.alpha * ds.n / TWO_PI)[:, None]
    return x, y


def fit_scalers(model, ds):
    model.input_scaler = Scaler.fit(ds.features)
    model.alpha_scaler = Scaler.fit(ds.alpha[:, None])
    return model


@dataclass
class TrainHistory:
    loss: list  # per-epoch training RMSE of the range-fraction target
    val_loss: list
    best_epoch: int
    stopped_early: bool


def train(model, train_set, epochs=40, batch_size=64, learning_rate=0.01,
          final_learning_rate=1e-4, seed=0, validation=None, patience=10, restart=0):
    """Adam on minibatches with geometric learning-rate decay.

    Scalers are fitted on ``train_set`` when the model has none.  With a
    ``validation`` set, training stops after ``patience`` epochs without
    improvement and the best-validated weights are restored.
    """
    if model.input_scaler is None:
        fit_scalers(model, train_set)
    x, y = _design(model, train_set)
    xv, yv = _design(model, validation) if validation is not None else (None, None)
    rng = rng_for(seed, f"shuffle/{restart}")
    params = model.params()
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    step = 0
    hist = TrainHistory([], [], 0, False)
    last_good, best, best_val, since = model.copy(), None, math.inf, 0
    for epoch in range(epochs):
        lr = learning_rate * (final_learning_rate / learning_rate) ** (epoch / max(1, epochs - 1))
        order = rng.permutation(len(x))
        for k in range(0, len(order), batch_size):
            idx = order[k:k + batch_size]
            _, grads = gradients(model, x[idx], y[idx])
            step += 1
            for i, (p, g) in enumerate(zip(params, grads)):
                m[i] = b1 * m[i] + (1 - b1) * g
                v[i] = b2 * v[i] + (1 - b2) * g * g
                p -= lr * (m[i] / (1 - b1 ** step)) / (np.sqrt(v[i] / (1 - b2 ** step)) + eps)
        out = _forward_trace(model, x)[1][-1]
        if not np.all(np.isfinite(out)):
            raise TrainingError(f"loss diverged at epoch {epoch + 1}", checkpoint=last_good)
        last_good = model.copy()
        hist.loss.append(float(np.sqrt(np.mean((out - y) ** 2))))
        if xv is None:
            hist.best_epoch = epoch + 1
            continue
        val = float(np.sqrt(np.mean((forward(model, xv) - yv) ** 2)))
        hist.val_loss.append(val)
        if val < best_val:
            best, best_val, since, hist.best_epoch = last_good, val, 0, epoch + 1
        else:
            since += 1
            if since >= patience:
                hist.stopped_early = True
                break
    if best is not None:
        model.weights, model.biases = best.weights, best.biases
    return model, hist


def fit_delay_model(train_set, sizes=DEFAULT_SIZES, hidden_activation="tanh", n_init=3, seed=0,
                    validation_fraction=0.1, **train_kw):
    """Train ``n_init`` independently initialised networks and keep the best one.

    A slice of ``train_set`` is held out for early stopping and for choosing
    among restarts; a 23-parameter network occasionally settles in a poor
    basin, and restarts make the outcome insensitive to the seed.
    """
    if n_init < 1:
        raise ConfigError(f"n_init must be >= 1, got {n_init}")
    fit_set, val_set = train_set, None
    if validation_fraction:
        fit_set, val_set = split_dataset(train_set, 1.0 - validation_fraction, seed)
    best, best_score = None, math.inf
    for r in range(n_init):
        model = fit_scalers(init_mlp(sizes, seed, hidden_activation, restart=r), train_set)
        model, hist = train(model, fit_set, seed=seed, validation=val_set, restart=r, **train_kw)
        score = min(hist.val_loss) if hist.val_loss else hist.loss[-1]
        if score < best_score:
            best, best_score = (model, hist), score
    return best


def predict_alpha(model, n, p_norm):
    """Phase spacing in radians, clamped to ``[0, 2 pi / n]``."""
    if model.input_scaler is None:
        raise ModelCorruptError("model has no input scaler")
    n = np.asarray(n, dtype=float).ravel()
    p = np.asarray(p_norm, dtype=float).ravel()
    x = model.input_scaler.transform(np.column_stack([n, p]))
    frac = np.clip(forward(model, x)[:, 0], 0.0, 1.0)
    return frac * TWO_PI / n


def evaluate(model, test_set):
    """RMSE and MSE of min-max scaled alpha (percent) plus MAE in degrees."""
    pred = predict_alpha(model, test_set.n, test_set.p_norm)
    scale = model.alpha_scaler
    e = scale.transform(pred[:, None])[:, 0] - scale.transform(test_set.alpha[:, None])[:, 0]
    mse = float(np.mean(e * e))
    return {"rmse_pct": 100.0 * math.sqrt(mse), "mse_pct": 100.0 * mse,
            "mae_deg": float(np.degrees(np.mean(np.abs(pred - test_set.alpha))))}


# --- persistence -------------------------------------------------------------

def _fmt(values):
    return " ".join(repr(float(v)) for v in np.ravel(values))


def save_model(model, path):
    """Write the model as versioned plain text."""
    if model.input_scaler is None or model.alpha_scaler is None:
        raise ModelCorruptError("cannot save a model without fitted scalers")
    lines = [f"tclswarm-mlp {FORMAT_VERSION}",
             "sizes " + " ".join(map(str, model.sizes)),
             "activations " + " ".join(model.activations)]
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"W{l} {_fmt(w)}")
        lines.append(f"b{l} {_fmt(b)}")
    lines += [f"input_lo {_fmt(model.input_scaler.lo)}", f"input_hi {_fmt(model.input_scaler.hi)}",
              f"alpha_lo {_fmt(model.alpha_scaler.lo)}", f"alpha_hi {_fmt(model.alpha_scaler.hi)}"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    try:
        if lines[0][0] != "tclswarm-mlp" or int(lines[0][1]) != FORMAT_VERSION:
            raise ModelCorruptError(f"unsupported model header {' '.join(lines[0])!r}")
        fields = {ln[0]: ln[1:] for ln in lines[1:]}
        sizes = tuple(int(s) for s in fields["sizes"])
        tags = fields["activations"]
        nums = {k: np.array([float(x) for x in v]) for k, v in fields.items()
                if k not in ("sizes", "activations")}
        layers = list(zip(sizes[:-1], sizes[1:]))
        weights = [nums[f"W{l}"].reshape(shape) for l, shape in enumerate(layers)]
        biases = [nums[f"b{l}"].reshape(shape[1]) for l, shape in enumerate(layers)]
        if len(tags) != len(layers) or len(set(tags[:-1])) > 1:
            raise ModelCorruptError(f"activation tags {tags} do not fit {len(layers)} layers")
        model = MlpModel(sizes, weights, biases, tags[0] if len(tags) > 1 else "tanh", tags[-1],
                         Scaler(nums["input_lo"], nums["input_hi"]),
                         Scaler(nums["alpha_lo"], nums["alpha_hi"]))
    except ModelCorruptError:
        raise
    except (IndexError, KeyError, ValueError) as exc:
        raise ModelCorruptError(f"malformed model file {path}: {exc}") from exc
    if not all(np.all(np.isfinite(p)) for p in model.params()):
        raise ModelCorruptError(f"non-finite parameters in {path}")
    return model


# --- estimator wrappers ------------------------------------------------------

class MinMaxNormalizer(TransformerMixin, BaseEstimator):
    """Per-column min-max scaling that refuses constant columns."""

    def fit(self, X, y=None):
        X = check_array(X)
        self.scaler_ = Scaler.fit(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scaler_")
        return self.scaler_.transform(check_array(X))

    def inverse_transform(self, X):
        check_is_fitted(self, "scaler_")
        return self.scaler_.inverse(check_array(X))


class DelayRegressor(RegressorMixin, BaseEstimator):
    """Learned spacing predictor.

    ``X`` has columns ``(n, p_norm %)`` and ``y`` is alpha in radians.
    """

    def __init__(self, hidden_sizes=(2, 4), hidden_activation="tanh", epochs=40,
                 batch_size=64, learning_rate=0.01, final_learning_rate=1e-4, n_init=3, seed=0):
        self.hidden_sizes = hidden_sizes
        self.hidden_activation = hidden_activation
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.final_learning_rate = final_learning_rate
        self.n_init = n_init
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if X.shape[1] != 2:
            raise ShapeError(f"expected columns (n, p_norm), got {X.shape[1]}")
        ds = Dataset(X[:, 0], X[:, 1], y)
        self.model_, self.history_ = fit_delay_model(
            ds, (2, *self.hidden_sizes, 1), self.hidden_activation, self.n_init, self.seed,
            epochs=self.epochs, batch_size=self.batch_size, learning_rate=self.learning_rate,
            final_learning_rate=self.final_learning_rate)
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return predict_alpha(self.model_, X[:, 0], X[:, 1])
