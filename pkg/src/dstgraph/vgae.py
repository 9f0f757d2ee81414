"""From-scratch variational graph auto-encoder on dense numpy arrays.

Two-layer GCN encoder (shared ReLU layer, linear mean and log-variance
heads), reparameterization trick, inner-product decoder.  The training
objective is the negative ELBO: weighted full-matrix reconstruction BCE
plus a KL term against a standard-normal prior.  Backpropagation is
hand-derived and verified against central finite differences, so all
arithmetic stays in double precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import EdgeSplit, NodeId, StateGraph, identity_features

PROB_EPS = 1e-12
_LOG_LO = float(np.log(PROB_EPS))
_LOG_HI = float(np.log1p(-PROB_EPS))


class TrainingDiverged(RuntimeError):
    """Raised when the loss goes non-finite; carries the partial history."""

    def __init__(self, epoch: int, history: list["EpochRecord"]):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch
        self.history = history


@dataclass(frozen=True)
class VgaeParams:
    """Encoder weights: shared layer plus mean and log-variance heads."""

    w_shared: np.ndarray
    w_mu: np.ndarray
    w_logvar: np.ndarray

    def __post_init__(self):
        ws, wm, wl = self.w_shared, self.w_mu, self.w_logvar
        if ws.ndim != 2 or wm.ndim != 2 or wl.ndim != 2:
            raise ValueError("weights must be 2-d matrices")
        if ws.shape[1] != wm.shape[0] or wm.shape != wl.shape:
            raise ValueError(
                f"inconsistent shapes: shared {ws.shape}, mu {wm.shape}, logvar {wl.shape}"
            )
        for name, w in (("w_shared", ws), ("w_mu", wm), ("w_logvar", wl)):
            if not np.all(np.isfinite(w)):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def hidden_dim(self) -> int:
        return self.w_shared.shape[1]

    @property
    def latent_dim(self) -> int:
        return self.w_mu.shape[1]

    @property
    def n_features(self) -> int:
        return self.w_shared.shape[0]


@dataclass(frozen=True)
class TrainConfig:
    hidden_dim: int = 32
    latent_dim: int = 16
    learning_rate: float = 0.01
    epochs: int = 200
    kl_weight: float = 1.0
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        if self.hidden_dim <= 0 or self.latent_dim <= 0:
            raise ValueError("hidden_dim and latent_dim must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.kl_weight <= 0:
            raise ValueError("kl_weight must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("adam betas must lie in [0, 1)")
        if self.adam_epsilon <= 0:
            raise ValueError("adam_epsilon must be positive")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    bce: float
    kl: float
    total: float
    val_auc: float | None = None


TrainHistory = list[EpochRecord]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softplus(x: np.ndarray) -> np.ndarray:
    # max(x, 0) + log1p(exp(-|x|)): overflow-free for any finite x
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def normalize_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric GCN propagation matrix D^(-1/2) (A + I) D^(-1/2).

    D is the degree matrix of A + I, so isolated nodes get degree 1 and
    the result is always finite.
    """
    a = np.asarray(adjacency, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {a.shape}")
    if not np.array_equal(a, a.T):
        raise ValueError("adjacency must be symmetric")
    if np.any(np.diag(a) != 0):
        raise ValueError("adjacency must have a zero diagonal")
    a_hat = a + np.eye(a.shape[0])
    inv_sqrt_deg = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * inv_sqrt_deg[:, None] * inv_sqrt_deg[None, :]


def encode(
    features: np.ndarray, norm_adj: np.ndarray, params: VgaeParams
) -> tuple[np.ndarray, np.ndarray]:
    """Two GCN layers: h = relu(Â X W_s); mu = Â h W_mu; logvar = Â h W_lv."""
    x = np.asarray(features, dtype=np.float64)
    a = np.asarray(norm_adj, dtype=np.float64)
    if a.shape[0] != a.shape[1] or a.shape[1] != x.shape[0]:
        raise ValueError(f"norm_adj {a.shape} incompatible with features {x.shape}")
    if x.shape[1] != params.n_features:
        raise ValueError(
            f"features have {x.shape[1]} columns, params expect {params.n_features}"
        )
    h = np.maximum(a @ x @ params.w_shared, 0.0)
    mu = a @ h @ params.w_mu
    logvar = a @ h @ params.w_logvar
    return mu, logvar


def reparameterize(
    mu: np.ndarray, logvar: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Sample Z = mu + exp(logvar / 2) * eps with eps ~ N(0, I)."""
    if mu.shape != logvar.shape:
        raise ValueError(f"shape mismatch: mu {mu.shape}, logvar {logvar.shape}")
    eps = rng.standard_normal(mu.shape)
    return mu + np.exp(logvar / 2.0) * eps


def decode_edge(z: np.ndarray, i, j) -> float:
    """Edge probability sigma(z_i . z_j), clipped into the open unit interval."""
    ii = i.index if isinstance(i, NodeId) else int(i)
    jj = j.index if isinstance(j, NodeId) else int(j)
    n = z.shape[0]
    if not (0 <= ii < n and 0 <= jj < n):
        raise IndexError(f"node index out of range: ({ii}, {jj}) for {n} nodes")
    s = float(z[ii] @ z[jj])
    p = float(_sigmoid(np.array([s]))[0])
    return float(np.clip(p, PROB_EPS, 1.0 - PROB_EPS))


def decode_all(z: np.ndarray) -> np.ndarray:
    """All pairwise edge probabilities sigma(Z Z^T), clipped like decode_edge."""
    return np.clip(_sigmoid(z @ z.T), PROB_EPS, 1.0 - PROB_EPS)


def reconstruction_loss(adjacency: np.ndarray, z: np.ndarray, pos_weight: float) -> float:
    """Weighted BCE between A and sigma(Z Z^T), averaged over all ordered pairs.

    Positive terms are scaled by pos_weight to counter edge sparsity.
    Probabilities are clamped to [1e-12, 1 - 1e-12] before the log, which
    keeps the loss finite for arbitrary finite Z.
    """
    if pos_weight <= 0:
        raise ValueError("pos_weight must be positive")
    a = np.asarray(adjacency, dtype=np.float64)
    s = z @ z.T
    # log sigma(s) = -softplus(-s); log(1 - sigma(s)) = -softplus(s)
    logp = np.clip(-_softplus(-s), _LOG_LO, _LOG_HI)
    log1mp = np.clip(-_softplus(s), _LOG_LO, _LOG_HI)
    n_sq = a.shape[0] * a.shape[1]
    return float(-(pos_weight * a * logp + (1.0 - a) * log1mp).sum() / n_sq)


def kl_divergence(mu: np.ndarray, logvar: np.ndarray) -> float:
    """KL(q(Z) || N(0, I)) averaged over nodes; zero iff mu = logvar = 0."""
    if mu.shape != logvar.shape:
        raise ValueError(f"shape mismatch: mu {mu.shape}, logvar {logvar.shape}")
    n = mu.shape[0]
    return float(-0.5 / n * (1.0 + logvar - mu**2 - np.exp(logvar)).sum())


def glorot_init(n_features: int, config: TrainConfig, rng: np.random.Generator) -> VgaeParams:
    """Glorot-uniform weights, drawn in a fixed order for determinism."""

    def draw(fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    w_shared = draw(n_features, config.hidden_dim)
    w_mu = draw(config.hidden_dim, config.latent_dim)
    w_logvar = draw(config.hidden_dim, config.latent_dim)
    return VgaeParams(w_shared=w_shared, w_mu=w_mu, w_logvar=w_logvar)


def train_adjacency(graph: StateGraph, split: EdgeSplit) -> np.ndarray:
    """Symmetric 0/1 adjacency holding only the training edges."""
    n = graph.n_nodes
    a = np.zeros((n, n), dtype=np.float64)
    for i, j in split.train:
        a[i, j] = 1.0
        a[j, i] = 1.0
    return a


def loss_and_grads(
    params: VgaeParams,
    features: np.ndarray,
    norm_adj: np.ndarray,
    adjacency: np.ndarray,
    pos_weight: float,
    kl_weight: float,
    noise: np.ndarray,
) -> tuple[float, float, dict[str, np.ndarray]]:
    """Forward pass plus hand-derived gradients of BCE + kl_weight * KL.

    ``noise`` is the frozen standard-normal draw used by the
    reparameterization, so the function is pure and checkable against
    finite differences.  Returns (bce, kl, grads by weight name).
    """
    x = np.asarray(features, dtype=np.float64)
    a_hat = np.asarray(norm_adj, dtype=np.float64)
    a = np.asarray(adjacency, dtype=np.float64)
    n = a.shape[0]

    ax = a_hat @ x
    m = ax @ params.w_shared
    h = np.maximum(m, 0.0)
    ah = a_hat @ h
    mu = ah @ params.w_mu
    logvar = ah @ params.w_logvar
    std = np.exp(logvar / 2.0)
    z = mu + std * noise

    s = z @ z.T
    sig = _sigmoid(s)
    logp_raw = -_softplus(-s)
    log1mp_raw = -_softplus(s)
    logp = np.clip(logp_raw, _LOG_LO, _LOG_HI)
    log1mp = np.clip(log1mp_raw, _LOG_LO, _LOG_HI)
    n_sq = n * n
    bce = float(-(pos_weight * a * logp + (1.0 - a) * log1mp).sum() / n_sq)
    kl = float(-0.5 / n * (1.0 + logvar - mu**2 - np.exp(logvar)).sum())

    # dBCE/dS: clamped terms contribute zero gradient
    m1 = (logp_raw > _LOG_LO) & (logp_raw < _LOG_HI)
    m2 = (log1mp_raw > _LOG_LO) & (log1mp_raw < _LOG_HI)
    g_s = (-pos_weight * a * (1.0 - sig) * m1 + (1.0 - a) * sig * m2) / n_sq

    # S = Z Z^T with S_ij = z_i . z_j, so dL/dZ = (G + G^T) Z
    g_z = (g_s + g_s.T) @ z

    g_mu = g_z + kl_weight * mu / n
    g_logvar = g_z * noise * 0.5 * std + kl_weight * 0.5 / n * (np.exp(logvar) - 1.0)

    g_w_mu = ah.T @ g_mu
    g_w_logvar = ah.T @ g_logvar
    g_h = a_hat @ (g_mu @ params.w_mu.T + g_logvar @ params.w_logvar.T)
    g_m = g_h * (m > 0.0)
    g_w_shared = ax.T @ g_m

    grads = {"w_shared": g_w_shared, "w_mu": g_w_mu, "w_logvar": g_w_logvar}
    return bce, kl, grads


def _forward_losses(
    params: VgaeParams,
    features: np.ndarray,
    norm_adj: np.ndarray,
    adjacency: np.ndarray,
    pos_weight: float,
    noise: np.ndarray,
) -> tuple[float, float]:
    mu, logvar = encode(features, norm_adj, params)
    z = mu + np.exp(logvar / 2.0) * noise
    return reconstruction_loss(adjacency, z, pos_weight), kl_divergence(mu, logvar)


def train(
    graph: StateGraph, split: EdgeSplit, config: TrainConfig
) -> tuple[VgaeParams, TrainHistory]:
    """Adam-optimize the negative ELBO on the training-edge adjacency.

    Per-epoch losses (and validation AUC, when the split has validation
    edges) are recorded at the pre-update parameters, so record 1 shows
    the initial loss.  Fully deterministic given config.seed: one rng
    drives Glorot init (shared, mu, logvar order) then one noise draw per
    epoch.  Raises TrainingDiverged with the partial history if the loss
    goes non-finite.
    """
    if not split.train:
        raise ValueError("training edge set is empty")
    rng = np.random.default_rng(config.seed)
    x = identity_features(graph)
    params = glorot_init(x.shape[1], config, rng)

    a = train_adjacency(graph, split)
    a_hat = normalize_adjacency(a)
    edge_sum = a.sum()
    pos_weight = (a.size - edge_sum) / edge_sum
    # validation monitoring mirrors evaluate_split: encode the full graph
    a_hat_full = (
        normalize_adjacency(graph.adjacency().astype(np.float64)) if split.val else None
    )

    weights = {
        "w_shared": params.w_shared.copy(),
        "w_mu": params.w_mu.copy(),
        "w_logvar": params.w_logvar.copy(),
    }
    adam_m = {k: np.zeros_like(v) for k, v in weights.items()}
    adam_v = {k: np.zeros_like(v) for k, v in weights.items()}
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon

    history: TrainHistory = []
    for epoch in range(1, config.epochs + 1):
        params = VgaeParams(**weights)
        noise = rng.standard_normal((graph.n_nodes, config.latent_dim))
        bce, kl, grads = loss_and_grads(
            params, x, a_hat, a, pos_weight, config.kl_weight, noise
        )
        total = bce + config.kl_weight * kl

        val_auc = None
        if split.val:
            from .linkpred import auc

            mu, _ = encode(x, a_hat_full, params)
            pairs = list(split.val) + list(split.neg_val)
            scores = [decode_edge(mu, i, j) for i, j in pairs]
            labels = [True] * len(split.val) + [False] * len(split.neg_val)
            val_auc = auc(scores, labels)

        record = EpochRecord(epoch=epoch, bce=bce, kl=kl, total=total, val_auc=val_auc)
        history.append(record)
        if not np.isfinite(total):
            raise TrainingDiverged(epoch, history)

        for name in weights:
            g = grads[name]
            adam_m[name] = b1 * adam_m[name] + (1.0 - b1) * g
            adam_v[name] = b2 * adam_v[name] + (1.0 - b2) * g * g
            m_hat = adam_m[name] / (1.0 - b1**epoch)
            v_hat = adam_v[name] / (1.0 - b2**epoch)
            weights[name] = weights[name] - config.learning_rate * m_hat / (
                np.sqrt(v_hat) + eps
            )
        if any(not np.all(np.isfinite(w)) for w in weights.values()):
            raise TrainingDiverged(epoch, history)

    return VgaeParams(**weights), history


def gradient_check(
    params: VgaeParams,
    graph: StateGraph,
    split: EdgeSplit,
    config: TrainConfig,
    epsilon: float = 1e-5,
    n_samples: int = 64,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    The reparameterization noise is frozen to one seeded draw and a random
    subset of at least min(n_samples, total) weight entries is probed.
    Relative error uses a 1e-4 floor in the denominator so exactly-zero
    gradients compare cleanly.
    """
    if not (1e-7 <= epsilon <= 1e-3):
        raise ValueError(f"epsilon must lie in [1e-7, 1e-3], got {epsilon}")
    rng = np.random.default_rng(config.seed)
    x = identity_features(graph)
    a = train_adjacency(graph, split)
    a_hat = normalize_adjacency(a)
    edge_sum = a.sum()
    pos_weight = (a.size - edge_sum) / edge_sum
    noise = rng.standard_normal((graph.n_nodes, params.latent_dim))

    _, _, grads = loss_and_grads(
        params, x, a_hat, a, pos_weight, config.kl_weight, noise
    )

    mats = {
        "w_shared": params.w_shared.copy(),
        "w_mu": params.w_mu.copy(),
        "w_logvar": params.w_logvar.copy(),
    }
    flat_index = [
        (name, i, j)
        for name, w in mats.items()
        for i in range(w.shape[0])
        for j in range(w.shape[1])
    ]
    k = min(n_samples, len(flat_index))
    picks = rng.choice(len(flat_index), size=k, replace=False)

    def total_loss() -> float:
        p = VgaeParams(**{k2: v.copy() for k2, v in mats.items()})
        bce, kl = _forward_losses(p, x, a_hat, a, pos_weight, noise)
        return bce + config.kl_weight * kl

    max_rel = 0.0
    for pick in picks:
        name, i, j = flat_index[pick]
        orig = mats[name][i, j]
        mats[name][i, j] = orig + epsilon
        up = total_loss()
        mats[name][i, j] = orig - epsilon
        down = total_loss()
        mats[name][i, j] = orig
        fd = (up - down) / (2.0 * epsilon)
        an = grads[name][i, j]
        rel = abs(fd - an) / max(abs(fd), abs(an), 1e-4)
        max_rel = max(max_rel, rel)
    return max_rel


CHECKPOINT_FORMAT = "vgae-checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(path: str | Path, params: VgaeParams, config: TrainConfig) -> None:
    """Write a versioned JSON checkpoint: dims, config, weights row-major."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "n_features": params.n_features,
        "hidden_dim": params.hidden_dim,
        "latent_dim": params.latent_dim,
        "config": {
            "hidden_dim": config.hidden_dim,
            "latent_dim": config.latent_dim,
            "learning_rate": config.learning_rate,
            "epochs": config.epochs,
            "kl_weight": config.kl_weight,
            "seed": config.seed,
            "adam_beta1": config.adam_beta1,
            "adam_beta2": config.adam_beta2,
            "adam_epsilon": config.adam_epsilon,
        },
        "w_shared": params.w_shared.tolist(),
        "w_mu": params.w_mu.tolist(),
        "w_logvar": params.w_logvar.tolist(),
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[VgaeParams, TrainConfig]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if raw.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"not a VGAE checkpoint: {path}")
    if raw.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {raw.get('version')}")
    params = VgaeParams(
        w_shared=np.asarray(raw["w_shared"], dtype=np.float64),
        w_mu=np.asarray(raw["w_mu"], dtype=np.float64),
        w_logvar=np.asarray(raw["w_logvar"], dtype=np.float64),
    )
    config = TrainConfig(**raw["config"])
    return params, config
