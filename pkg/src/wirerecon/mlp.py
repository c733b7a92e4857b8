"""Feed-forward corner-error regressor and its conjugate-gradient trainer.

Topology is fixed to ``16 -> H (tanh) -> 1 (identity)``. Inputs are z-scored
with statistics captured from the training split and stored in the model.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import line_search

from .features import FEATURE_ORDER, N_FEATURES, FeatureVector

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
STD_FLOOR = 1e-8


class ModelFormatError(ValueError):
    pass


class FeatureOrderMismatch(ModelFormatError):
    pass


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Network:
    w1: np.ndarray  # (H, 16)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (1, H)
    b2: np.ndarray  # (1,)
    mean: np.ndarray  # (16,)
    std: np.ndarray  # (16,)
    feature_order: str = FEATURE_ORDER

    def __post_init__(self) -> None:
        for name in ("w1", "b1", "w2", "b2", "mean", "std"):
            a = np.array(getattr(self, name), dtype=float, copy=True)
            if not np.all(np.isfinite(a)):
                raise ValueError(f"network parameter {name} is not finite")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        h = self.w1.shape[0]
        if self.w1.shape != (h, N_FEATURES) or self.b1.shape != (h,) or self.w2.shape != (1, h) or self.b2.shape != (1,):
            raise ValueError("inconsistent layer shapes")
        if self.mean.shape != (N_FEATURES,) or self.std.shape != (N_FEATURES,) or np.any(self.std < STD_FLOOR):
            raise ValueError("invalid standardization statistics")

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    @property
    def layer_sizes(self) -> tuple[int, int, int]:
        return (N_FEATURES, self.hidden, 1)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Outputs for a batch of feature rows, shape ``(..., 16) -> (...)``."""
        xs = (np.asarray(x, dtype=float) - self.mean) / self.std
        h = np.tanh(xs @ self.w1.T + self.b1)
        return h @ self.w2[0] + self.b2[0]


def forward(net: Network, f: FeatureVector | np.ndarray) -> float:
    x = f.as_array() if isinstance(f, FeatureVector) else np.asarray(f, dtype=float)
    if x.shape != (N_FEATURES,):
        raise ValueError(f"expected {N_FEATURES} features, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite feature input")
    return float(net.predict(x))


# --------------------------------------------------------------------------
# parameters as a flat vector
# --------------------------------------------------------------------------


def n_params(hidden: int) -> int:
    return hidden * N_FEATURES + hidden + hidden + 1


def pack(net: Network) -> np.ndarray:
    return np.concatenate([net.w1.ravel(), net.b1, net.w2.ravel(), net.b2])


def unpack(theta: np.ndarray, hidden: int, mean: np.ndarray, std: np.ndarray) -> Network:
    h, d = hidden, N_FEATURES
    i = 0
    w1 = theta[i:i + h * d].reshape(h, d); i += h * d
    b1 = theta[i:i + h]; i += h
    w2 = theta[i:i + h].reshape(1, h); i += h
    b2 = theta[i:i + 1]
    return Network(w1, b1, w2, b2, mean, std)


def mse_and_grad(theta: np.ndarray, xs: np.ndarray, y: np.ndarray, hidden: int) -> tuple[float, np.ndarray]:
    """MSE of the network on already-standardized inputs, and its gradient wrt ``theta``."""
    h, d = hidden, N_FEATURES
    w1 = theta[:h * d].reshape(h, d)
    b1 = theta[h * d:h * d + h]
    w2 = theta[h * d + h:h * d + 2 * h]
    b2 = theta[-1]
    act = np.tanh(xs @ w1.T + b1)
    resid = act @ w2 + b2 - y
    n = len(y)
    loss = float(resid @ resid) / n
    dout = (2.0 / n) * resid
    g_w2 = dout @ act
    g_b2 = dout.sum()
    dpre = np.outer(dout, w2) * (1.0 - act * act)
    g_w1 = dpre.T @ xs
    g_b1 = dpre.sum(axis=0)
    return loss, np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])


# --------------------------------------------------------------------------
# training
# --------------------------------------------------------------------------


@dataclass
class TrainingSet:
    features: np.ndarray
    targets: np.ndarray
    groups: np.ndarray | None = None  # rows sharing a group never straddle the split

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float).reshape(-1, N_FEATURES)
        self.targets = np.asarray(self.targets, dtype=float).reshape(-1)
        if len(self.targets) == 0:
            raise ValueError("training set is empty")
        if len(self.features) != len(self.targets):
            raise ValueError("features and targets differ in length")
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.targets))):
            raise ValueError("training set contains non-finite values")
        if np.any(self.targets < 0) or np.any(self.targets >= 0.5):
            raise ValueError("targets must lie in [0, 0.5)")
        if self.groups is None:
            self.groups = np.arange(len(self.targets))
        self.groups = np.asarray(self.groups).reshape(-1)

    def __len__(self) -> int:
        return len(self.targets)


@dataclass
class TrainConfig:
    hidden: int = 24
    max_epochs: int = 1000
    val_fraction: float = 0.1
    patience: int = 20
    seed: int = 0


@dataclass
class TrainResult:
    network: Network
    best_epoch: int
    stop_epoch: int
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    stop_reason: str = ""

    @property
    def best_val_mse(self) -> float:
        return self.val_mse[self.best_epoch]


def split_groups(groups: np.ndarray, val_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean train/validation row masks, splitting by whole groups."""
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("validation fraction must lie strictly between 0 and 1")
    uniq = np.unique(groups)
    if len(uniq) < 2:
        raise TrainingError("need at least two groups to form a train/validation split")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(uniq)
    n_val = min(max(1, int(round(val_fraction * len(uniq)))), len(uniq) - 1)
    val = np.isin(groups, perm[:n_val])
    return ~val, val


def _init_params(hidden: int, y_mean: float, rng: np.random.Generator) -> np.ndarray:
    lim1 = np.sqrt(6.0 / (N_FEATURES + hidden))
    lim2 = np.sqrt(6.0 / (hidden + 1))
    return np.concatenate([
        rng.uniform(-lim1, lim1, hidden * N_FEATURES),
        np.zeros(hidden),
        rng.uniform(-lim2, lim2, hidden),
        [y_mean],
    ])


def fit(data: TrainingSet, config: TrainConfig | None = None) -> TrainResult:
    """Full-batch Polak-Ribiere conjugate gradient with early stopping.

    One epoch is one CG iteration (line search along the current direction).
    The direction is reset to steepest descent every ``n_params`` iterations,
    whenever PR's beta turns negative, and whenever the line search fails.
    """
    cfg = config or TrainConfig()
    tr_mask, va_mask = split_groups(data.groups, cfg.val_fraction, cfg.seed)
    x_tr, y_tr = data.features[tr_mask], data.targets[tr_mask]
    x_va, y_va = data.features[va_mask], data.targets[va_mask]
    if len(y_tr) == 0 or len(y_va) == 0:
        raise TrainingError("empty train or validation split")

    mean = x_tr.mean(axis=0)
    std = np.maximum(x_tr.std(axis=0), STD_FLOOR)
    xs_tr = (x_tr - mean) / std
    xs_va = (x_va - mean) / std
    h = cfg.hidden
    rng = np.random.default_rng(cfg.seed)
    theta = _init_params(h, float(y_tr.mean()), rng)

    cache: dict[bytes, tuple[float, np.ndarray]] = {}

    def evaluate(t: np.ndarray) -> tuple[float, np.ndarray]:
        key = t.tobytes()
        if key not in cache:
            if len(cache) > 64:
                cache.clear()
            cache[key] = mse_and_grad(t, xs_tr, y_tr, h)
        return cache[key]

    def val_loss(t: np.ndarray) -> float:
        return mse_and_grad(t, xs_va, y_va, h)[0]

    loss, grad = evaluate(theta)
    val = val_loss(theta)
    train_hist, val_hist = [loss], [val]
    best_theta, best_epoch = theta.copy(), 0
    direction = -grad
    prev_loss = None
    restart_every = n_params(h)
    since_restart = 0
    stop_reason = "max_epochs"
    epoch = 0

    for epoch in range(1, cfg.max_epochs + 1):
        alpha, new_loss, new_grad = _line_step(evaluate, theta, direction, grad, loss, prev_loss)
        if alpha is None and since_restart > 0:
            direction = -grad
            since_restart = 0
            alpha, new_loss, new_grad = _line_step(evaluate, theta, direction, grad, loss, None)
        if alpha is None:
            epoch -= 1
            stop_reason = "line_search_failed"
            break
        if not np.isfinite(new_loss):
            raise TrainingError(f"non-finite training loss at epoch {epoch}")

        theta = theta + alpha * direction
        prev_loss, loss = loss, new_loss
        since_restart += 1
        beta = float(new_grad @ (new_grad - grad)) / max(float(grad @ grad), 1e-300)
        grad = new_grad
        if since_restart >= restart_every or beta <= 0.0:
            direction = -grad
            since_restart = 0
        else:
            direction = -grad + beta * direction
            if float(direction @ grad) >= 0.0:
                direction = -grad
                since_restart = 0

        val = val_loss(theta)
        if not np.isfinite(val):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        train_hist.append(loss)
        val_hist.append(val)
        if val < val_hist[best_epoch]:
            best_theta, best_epoch = theta.copy(), epoch
        elif epoch - best_epoch >= cfg.patience:
            stop_reason = "early_stopping"
            break

    logger.info("training stopped at epoch %d (%s); best epoch %d, val mse %.3g",
                epoch, stop_reason, best_epoch, val_hist[best_epoch])
    net = unpack(best_theta, h, mean, std)
    return TrainResult(net, best_epoch, epoch, train_hist, val_hist, stop_reason)


def _line_step(evaluate, theta, direction, grad, loss, prev_loss):
    """Strong-Wolfe step along ``direction``, falling back to Armijo backtracking."""
    f = lambda t: evaluate(t)[0]  # noqa: E731
    fp = lambda t: evaluate(t)[1]  # noqa: E731
    alpha = None
    try:
        alpha, _, _, new_loss, _, _ = line_search(
            f, fp, theta, direction, gfk=grad, old_fval=loss, old_old_fval=prev_loss, c1=1e-4, c2=0.1, maxiter=20
        )
    except (FloatingPointError, ValueError, OverflowError):
        alpha = None
    if alpha is not None and np.isfinite(alpha) and alpha > 0:
        new_loss, new_grad = evaluate(theta + alpha * direction)
        if new_loss <= loss:
            return alpha, new_loss, new_grad

    slope = float(grad @ direction)
    if slope >= 0.0:
        return None, None, None
    alpha = 1.0
    for _ in range(40):
        new_loss, new_grad = evaluate(theta + alpha * direction)
        if np.isfinite(new_loss) and new_loss <= loss + 1e-4 * alpha * slope:
            return alpha, new_loss, new_grad
        alpha *= 0.5
    return None, None, None


def train(data: TrainingSet, config: TrainConfig | None = None) -> Network:
    return fit(data, config).network


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------


def model_to_dict(net: Network, config: dict[str, Any] | None = None) -> dict[str, Any]:
    doc = {
        "format_version": FORMAT_VERSION,
        "layer_sizes": list(net.layer_sizes),
        "activation": {"hidden": "tanh", "output": "identity"},
        "feature_order": net.feature_order,
        "standardization": {"means": net.mean.tolist(), "deviations": net.std.tolist()},
        "weights": [net.w1.tolist(), net.w2.tolist()],
        "biases": [net.b1.tolist(), net.b2.tolist()],
    }
    if config is not None:
        doc["config"] = config
    return doc


def save_model(net: Network, config: dict[str, Any] | None = None) -> str:
    return json.dumps(model_to_dict(net, config), sort_keys=True) + "\n"


def load_model(text: str, expected_order: str = FEATURE_ORDER) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model file must hold an object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {doc.get('format_version')!r}")
    if doc.get("feature_order") != expected_order:
        raise FeatureOrderMismatch(
            f"model was trained on feature order {doc.get('feature_order')!r}, extractor produces {expected_order!r}"
        )
    if doc.get("activation") != {"hidden": "tanh", "output": "identity"}:
        raise ModelFormatError(f"unsupported activations {doc.get('activation')!r}")
    try:
        sizes = [int(s) for s in doc["layer_sizes"]]
        w1, w2 = (np.array(w, dtype=float) for w in doc["weights"])
        b1, b2 = (np.array(b, dtype=float) for b in doc["biases"])
        st = doc["standardization"]
        mean, std = np.array(st["means"], dtype=float), np.array(st["deviations"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model file is missing or has malformed fields: {exc}") from exc
    if len(sizes) != 3 or sizes[0] != N_FEATURES or sizes[2] != 1:
        raise ModelFormatError(f"unsupported layer sizes {sizes}")
    try:
        net = Network(w1, b1, w2, b2, mean, std, doc["feature_order"])
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc
    if net.hidden != sizes[1]:
        raise ModelFormatError("layer_sizes disagree with weight shapes")
    return net
