"""Social-pooling encoder-decoder policies.

The history-only model (CSP) encodes the target's track with an embedding +
LSTM, pools encoded neighbor tracks into a target-centered grid processed by
a small conv + max-pool + dense stack, and decodes per-maneuver bivariate
Gaussian trajectory parameters with an LSTM whose input is the context
vector. Mode weights come from a six-way maneuver softmax.

The future-conditional variant (FC-CSP) adds an architecturally identical
pooling block over neighbors' predicted future trajectories. Its outputs
enter the decoder and maneuver head through separate additive weight blocks,
so zeroing every future-branch parameter reproduces the history-only model
bit for bit when the remaining weights are shared.

Everything runs batch-first; the single-scene entry points build a batch of
one.
"""

from __future__ import annotations

import numpy as np

from .. import nn
from ..nn import ParameterStore, Tensor
from ..scene import MixturePrediction, SceneHistory, TrajectoryGaussian
from .config import CspConfig
from .features import FutureSpec, SampleSpec, future_means_from_predictions, prepare_futures, prepare_sample

CONV_KERNEL = 3

HISTORY_PARAM_NAMES = [
    "embed.w", "embed.b", "encoder.w_ih", "encoder.w_hh", "encoder.b",
    "dyn.w", "dyn.b", "conv.w", "conv.b", "soc.w", "soc.b",
    "dec.w_ih", "dec.w_hh", "dec.b", "head.w", "head.b", "man.w", "man.b",
]
FUTURE_PARAM_NAMES = [
    "fembed.w", "fembed.b", "fencoder.w_ih", "fencoder.w_hh", "fencoder.b",
    "fconv.w", "fconv.b", "fsoc.w", "fsoc.b", "fdec.w", "fman.w",
]


def social_flat_dim(config: CspConfig) -> int:
    conv_h = config.grid_rows - CONV_KERNEL + 1
    conv_w = config.grid_cols - CONV_KERNEL + 1
    ph, pw = config.pool_window
    return config.conv_filters * (conv_h // ph) * (conv_w // pw)


def _init_history_params(store: ParameterStore, config: CspConfig, rng: np.random.Generator):
    nn.init_fc(store, "embed", 2, config.embed_size, rng)
    nn.init_lstm(store, "encoder", config.embed_size, config.encoder_hidden, rng)
    nn.init_fc(store, "dyn", config.encoder_hidden, config.dynamics_size, rng)
    fan = config.encoder_hidden * CONV_KERNEL * CONV_KERNEL
    store.add("conv.w", nn.uniform_init(rng, (config.conv_filters, config.encoder_hidden,
                                              CONV_KERNEL, CONV_KERNEL), fan))
    store.add("conv.b", np.zeros(config.conv_filters))
    nn.init_fc(store, "soc", social_flat_dim(config), config.social_context, rng)
    ctx = config.dynamics_size + config.social_context
    nn.init_lstm(store, "dec", ctx + config.num_modes, config.decoder_hidden, rng)
    nn.init_fc(store, "head", config.decoder_hidden, 5, rng)
    nn.init_fc(store, "man", ctx, config.num_modes, rng)


def init_csp_params(config: CspConfig, seed: int) -> ParameterStore:
    store = ParameterStore()
    _init_history_params(store, config, np.random.default_rng(seed))
    return store


def init_fccsp_params(config: CspConfig, seed: int) -> ParameterStore:
    store = ParameterStore()
    rng = np.random.default_rng(seed)
    _init_history_params(store, config, rng)
    nn.init_fc(store, "fembed", 2, config.embed_size, rng)
    nn.init_lstm(store, "fencoder", config.embed_size, config.encoder_hidden, rng)
    fan = config.encoder_hidden * CONV_KERNEL * CONV_KERNEL
    store.add("fconv.w", nn.uniform_init(rng, (config.conv_filters, config.encoder_hidden,
                                               CONV_KERNEL, CONV_KERNEL), fan))
    store.add("fconv.b", np.zeros(config.conv_filters))
    nn.init_fc(store, "fsoc", social_flat_dim(config), config.social_context, rng)
    store.add("fdec.w", nn.uniform_init(rng, (config.social_context, 4 * config.decoder_hidden),
                                        config.social_context))
    store.add("fman.w", nn.uniform_init(rng, (config.social_context, config.num_modes),
                                        config.social_context))
    return store


def zero_future_branch(store: ParameterStore) -> None:
    """Zero every future-branch parameter in place (bit-exact fallback to
    the history-only model when history weights are shared)."""
    for name in FUTURE_PARAM_NAMES:
        store[name].data[...] = 0.0


def _pack_histories(samples: list[SampleSpec]):
    seqs = []
    target_rows = []
    nb_rows, nb_batch, nb_r, nb_c = [], [], [], []
    for b, s in enumerate(samples):
        target_rows.append(len(seqs))
        seqs.append(s.hist)
        for nb in s.neighbors:
            nb_rows.append(len(seqs))
            nb_batch.append(b)
            nb_r.append(nb.cell[0])
            nb_c.append(nb.cell[1])
            seqs.append(nb.hist)
    steps = max(len(q) for q in seqs)
    batch = np.zeros((len(seqs), steps, 2))
    mask = np.zeros((len(seqs), steps))
    for i, q in enumerate(seqs):
        batch[i, steps - len(q):] = q
        mask[i, steps - len(q):] = 1.0
    if mask.all():
        mask = None
    return batch, mask, np.array(target_rows), np.array(nb_rows, dtype=np.intp), \
        np.array(nb_batch, dtype=np.intp), np.array(nb_r, dtype=np.intp), np.array(nb_c, dtype=np.intp)


def _social_branch(grid: Tensor, store: ParameterStore, config: CspConfig,
                   conv: str, dense: str) -> Tensor:
    x = nn.leaky_relu(nn.conv2d(grid, store[f"{conv}.w"], store[f"{conv}.b"]), config.leaky_alpha)
    x = nn.max_pool2d(x, config.pool_window)
    x = nn.reshape(x, (x.shape[0], -1))
    return nn.leaky_relu(nn.fully_connected(x, store[f"{dense}.w"], store[f"{dense}.b"]),
                         config.leaky_alpha)


def _history_context(samples: list[SampleSpec], store: ParameterStore, config: CspConfig) -> Tensor:
    """Concatenated dynamics and social-context vectors, (B, D + S)."""
    batch, mask, t_rows, nb_rows, nb_batch, nb_r, nb_c = _pack_histories(samples)
    enc = nn.lstm_encode(batch, mask, store, "encoder", embed_name="embed",
                         alpha=config.leaky_alpha)
    target_enc = nn.gather_rows(enc, t_rows)
    dyn = nn.leaky_relu(nn.fully_connected(target_enc, store["dyn.w"], store["dyn.b"]),
                        config.leaky_alpha)
    grid = nn.grid_scatter(nn.gather_rows(enc, nb_rows), nb_batch, nb_r, nb_c,
                           (len(samples), config.encoder_hidden, config.grid_rows, config.grid_cols))
    soc = _social_branch(grid, store, config, "conv", "soc")
    return nn.concat([dyn, soc], axis=1)


def _future_context(samples: list[SampleSpec], futures: list[FutureSpec],
                    store: ParameterStore, config: CspConfig) -> Tensor:
    rows, batch_idx, rr, cc = [], [], [], []
    seqs = []
    for b, fut in enumerate(futures):
        for cell, seq in zip(fut.cells, fut.futures):
            rows.append(len(seqs))
            batch_idx.append(b)
            rr.append(cell[0])
            cc.append(cell[1])
            seqs.append(seq)
    if seqs:
        arr = np.stack(seqs)
        enc = nn.lstm_encode(arr, None, store, "fencoder", embed_name="fembed",
                             alpha=config.leaky_alpha)
    else:
        enc = Tensor(np.zeros((0, config.encoder_hidden)))
    grid = nn.grid_scatter(enc, np.array(batch_idx, dtype=np.intp),
                           np.array(rr, dtype=np.intp), np.array(cc, dtype=np.intp),
                           (len(samples), config.encoder_hidden, config.grid_rows, config.grid_cols))
    return _social_branch(grid, store, config, "fconv", "fsoc")


def _maneuver_logits(ctx: Tensor, fut_ctx: Tensor | None, store: ParameterStore) -> Tensor:
    logits = nn.fully_connected(ctx, store["man.w"], store["man.b"])
    if fut_ctx is not None:
        logits = logits + nn.matmul(fut_ctx, store["fman.w"])
    return logits


def _decode(ctx: Tensor, fut_ctx: Tensor | None, maneuver_onehot: np.ndarray,
            cv_rel: np.ndarray, store: ParameterStore, config: CspConfig):
    """Unroll the decoder; returns (mu, sigma, rho) tensors of shape
    (B, horizon, 2/2/1). Means are the constant-velocity baseline plus
    cumulative per-step corrections, in meters relative to the target
    anchor; the residual form keeps early training well conditioned."""
    dec_in = nn.concat([ctx, Tensor(maneuver_onehot)], axis=1)
    extra = nn.matmul(fut_ctx, store["fdec.w"]) if fut_ctx is not None else None
    bsz = dec_in.shape[0]
    h = Tensor(np.zeros((bsz, config.decoder_hidden)))
    c = Tensor(np.zeros((bsz, config.decoder_hidden)))
    outs = []
    for _ in range(config.horizon_steps):
        h, c = nn.lstm_cell(dec_in, h, c, store, "dec", extra_gates=extra)
        step = nn.fully_connected(h, store["head.w"], store["head.b"])
        outs.append(nn.reshape(step, (bsz, 1, 5)))
    raw = nn.concat(outs, axis=1)
    deltas = nn.narrow(raw, 2, 0, 2) * config.delta_scale
    mu = Tensor(cv_rel) + nn.cumsum(deltas, axis=1)
    sigma = nn.exp(nn.narrow(raw, 2, 2, 2)) * config.sigma_scale
    rho = nn.tanh(nn.narrow(raw, 2, 4, 1))
    return mu, sigma, rho


def training_outputs(samples: list[SampleSpec], labels: np.ndarray,
                     futures_rel: np.ndarray, store: ParameterStore, config: CspConfig,
                     future_specs: list[FutureSpec] | None = None):
    """Losses for one batch: (trajectory NLL, maneuver cross-entropy).

    The decoder runs only the true-maneuver mode of each sample;
    ``futures_rel`` is the (B, horizon, 2) ground truth relative to each
    target's anchor. Passing ``future_specs`` switches on the
    future-conditional branch (the store must then hold its parameters).
    """
    ctx = _history_context(samples, store, config)
    fut_ctx = _future_context(samples, future_specs, store, config) if future_specs is not None else None
    logits = _maneuver_logits(ctx, fut_ctx, store)
    onehot = nn.one_hot(labels, config.num_modes)
    cv_rel = np.stack([s.cv_rel for s in samples])
    mu, sigma, rho = _decode(ctx, fut_ctx, onehot, cv_rel, store, config)
    nll = nn.bivariate_gaussian_nll(futures_rel, mu, sigma, rho)
    ce = nn.softmax_cross_entropy(logits, labels)
    return nll, ce


def _mixtures_from_params(samples, mu, sigma, rho, weights, config) -> list[MixturePrediction]:
    out = []
    n_modes = config.num_modes
    for b, sample in enumerate(samples):
        modes = []
        for m in range(n_modes):
            means = mu[b * n_modes + m] + sample.anchor[None, :]
            sx = sigma[b * n_modes + m, :, 0]
            sy = sigma[b * n_modes + m, :, 1]
            r = rho[b * n_modes + m, :, 0]
            covs = np.empty((config.horizon_steps, 2, 2))
            covs[:, 0, 0] = sx * sx
            covs[:, 1, 1] = sy * sy
            covs[:, 0, 1] = covs[:, 1, 0] = r * sx * sy
            modes.append((float(weights[b, m]), TrajectoryGaussian(sample.target_id, means, covs)))
        out.append(MixturePrediction(tuple(modes)))
    return out


def predict_batch(samples: list[SampleSpec], store: ParameterStore, config: CspConfig,
                  future_specs: list[FutureSpec] | None = None) -> list[MixturePrediction]:
    """Full six-mode inference for a batch of prepared samples."""
    with nn.no_grad():
        ctx = _history_context(samples, store, config)
        fut_ctx = _future_context(samples, future_specs, store, config) if future_specs is not None else None
        logits = _maneuver_logits(ctx, fut_ctx, store)
        weights = nn.softmax(logits.data, axis=1)
        n = config.num_modes
        ctx_rep = nn.repeat_interleave(ctx, n, axis=0)
        fut_rep = nn.repeat_interleave(fut_ctx, n, axis=0) if fut_ctx is not None else None
        onehots = np.tile(np.eye(n), (len(samples), 1))
        cv_rel = np.repeat(np.stack([s.cv_rel for s in samples]), n, axis=0)
        mu, sigma, rho = _decode(ctx_rep, fut_rep, onehots, cv_rel, store, config)
    return _mixtures_from_params(samples, mu.data, sigma.data, rho.data, weights, config)


def top_mode_means_batch(samples: list[SampleSpec], store: ParameterStore,
                         config: CspConfig) -> list[np.ndarray]:
    """Fast inference of only the highest-weight mode's absolute means."""
    if not samples:
        return []
    with nn.no_grad():
        ctx = _history_context(samples, store, config)
        logits = _maneuver_logits(ctx, None, store)
        top = np.argmax(logits.data, axis=1)
        onehot = nn.one_hot(top, config.num_modes)
        cv_rel = np.stack([s.cv_rel for s in samples])
        mu, _, _ = _decode(ctx, None, onehot, cv_rel, store, config)
    return [mu.data[b] + s.anchor[None, :] for b, s in enumerate(samples)]


def csp_forward(scene: SceneHistory, target_id: int, store: ParameterStore,
                config: CspConfig) -> MixturePrediction:
    """History-only mixture prediction for one target."""
    sample = prepare_sample(scene, target_id, config)
    return predict_batch([sample], store, config)[0]


def fccsp_forward(scene: SceneHistory, target_id: int,
                  neighbor_futures: dict[int, TrajectoryGaussian] | dict[int, np.ndarray],
                  store: ParameterStore, config: CspConfig) -> MixturePrediction:
    """Future-conditional mixture prediction for one target.

    ``neighbor_futures`` maps agent ids to predicted trajectories (Gaussian
    predictions or raw mean arrays); an empty map is valid and yields a zero
    future grid.
    """
    sample = prepare_sample(scene, target_id, config)
    means = {
        i: (f.means if isinstance(f, TrajectoryGaussian) else np.asarray(f))
        for i, f in neighbor_futures.items()
    }
    fut = prepare_futures(sample, means, config)
    return predict_batch([sample], store, config, future_specs=[fut])[0]


class CspPolicy:
    """History-only policy: top mode of the six-mode mixture."""

    requires_futures = False

    def __init__(self, store: ParameterStore, config: CspConfig):
        self.store = store
        self.config = config

    def predict(self, scene, target_id, neighbor_futures=None):
        from ..scene import select_top_mode

        return select_top_mode(csp_forward(scene, target_id, self.store, self.config))


class FccspPolicy:
    """Future-conditional policy: top mode given neighbors' predictions."""

    requires_futures = True

    def __init__(self, store: ParameterStore, config: CspConfig):
        self.store = store
        self.config = config

    def predict(self, scene, target_id, neighbor_futures):
        from ..scene import select_top_mode

        futures = neighbor_futures or {}
        return select_top_mode(fccsp_forward(scene, target_id, futures, self.store, self.config))
