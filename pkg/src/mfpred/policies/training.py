"""Joint training of the history-only and future-conditional policies.

Each batch first runs the history-only model in inference mode to produce
top-mode futures for every in-grid neighbor, then optimizes both models
together: the future-conditional model consumes those (detached) neighbor
futures, and the total loss sums both models' trajectory NLL and maneuver
cross-entropy terms. In multi-fidelity mode neighbors in the peripheral
band around the target receive constant-velocity futures instead, matching
the ego-centric evaluation setting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data.segments import Segment
from ..nn import AdamState, adam_step
from .config import CspConfig, TrainConfig
from .csp import init_csp_params, init_fccsp_params, top_mode_means_batch, training_outputs
from .cv import cv_predict
from .features import SampleSpec, maneuver_label, prepare_futures, prepare_sample


@dataclass(frozen=True)
class PreparedSegment:
    sample: SampleSpec
    label: int
    future_rel: np.ndarray                     # (horizon, 2) meters, target anchor frame
    neighbor_samples: dict[int, SampleSpec]    # each in-grid neighbor as its own target
    cv_future_means: dict[int, np.ndarray]     # precomputed CV futures per neighbor
    peripheral_ids: frozenset[int]             # neighbors in the target's peripheral band


def prepare_segment(segment: Segment, model: CspConfig, train: TrainConfig) -> PreparedSegment:
    scene = segment.history
    target = segment.target_id
    sample = prepare_sample(scene, target, model)
    future_abs = segment.futures[target]
    if future_abs.shape[0] != model.horizon_steps:
        raise ValueError(
            f"segment future spans {future_abs.shape[0]} steps, config expects "
            f"{model.horizon_steps}: dataset/config rate mismatch"
        )
    track = scene.track(target)
    label = maneuver_label(track, future_abs, model.sample_rate, model.cell_width,
                           train.lane_offset_threshold, train.braking_ratio)
    neighbor_samples = {}
    cv_means = {}
    peripheral = set()
    core_radius = (1.0 - train.periphery_fraction) * train.sensor_range
    for nb in sample.neighbors:
        nb_track = scene.track(nb.agent_id)
        cv_means[nb.agent_id] = cv_predict(nb_track, model.horizon_steps,
                                           model.sample_rate, train.cv_sigma0).means
        if float(np.linalg.norm(nb.anchor - sample.anchor)) > core_radius:
            peripheral.add(nb.agent_id)
        if len(nb_track) >= model.history_steps:
            neighbor_samples[nb.agent_id] = prepare_sample(scene, nb.agent_id, model)
    return PreparedSegment(sample, label, future_abs - sample.anchor[None, :],
                           neighbor_samples, cv_means, frozenset(peripheral))


def neighbor_future_means(batch: list[PreparedSegment], csp_store, model: CspConfig,
                          multi_fidelity: bool) -> list[dict[int, np.ndarray]]:
    """Top-mode futures for every in-grid neighbor of every batch segment.

    Neighbors run through the history-only model in one inference batch;
    neighbors without enough history, and peripheral neighbors when
    ``multi_fidelity`` is set, fall back to their constant-velocity future.
    """
    inf_samples = []
    owners = []
    for j, p in enumerate(batch):
        for nb_id in sorted(p.neighbor_samples):
            if multi_fidelity and nb_id in p.peripheral_ids:
                continue
            inf_samples.append(p.neighbor_samples[nb_id])
            owners.append((j, nb_id))
    predicted = top_mode_means_batch(inf_samples, csp_store, model)
    futures: list[dict[int, np.ndarray]] = [dict(p.cv_future_means) for p in batch]
    for (j, nb_id), means in zip(owners, predicted):
        futures[j][nb_id] = means
    return futures


def train_policies(dataset: list[Segment], model: CspConfig, train: TrainConfig,
                   seed: int = 0, progress=None):
    """Jointly train both policies from scratch on a segment dataset.

    Returns (csp_params, fccsp_params, loss_curve) where the curve holds one
    mean total loss per epoch. Deterministic for a fixed seed.
    """
    if not dataset:
        raise ValueError("empty dataset")
    prepared = [prepare_segment(seg, model, train) for seg in dataset]
    csp_store = init_csp_params(model, seed)
    fccsp_store = init_fccsp_params(model, seed + 1)
    adam_csp = AdamState(learning_rate=train.learning_rate, beta1=train.beta1, beta2=train.beta2)
    adam_fccsp = AdamState(learning_rate=train.learning_rate, beta1=train.beta1, beta2=train.beta2)
    rng = np.random.default_rng(seed)

    curve = []
    for epoch in range(train.epochs):
        order = rng.permutation(len(prepared))
        losses = []
        for lo in range(0, len(order), train.batch_size):
            batch = [prepared[i] for i in order[lo : lo + train.batch_size]]
            samples = [p.sample for p in batch]
            labels = np.array([p.label for p in batch])
            futures_rel = np.stack([p.future_rel for p in batch])

            nb_futures = neighbor_future_means(batch, csp_store, model, train.multi_fidelity)
            fut_specs = [prepare_futures(p.sample, nf, model)
                         for p, nf in zip(batch, nb_futures)]

            csp_store.zero_grad()
            fccsp_store.zero_grad()
            nll_c, ce_c = training_outputs(samples, labels, futures_rel, csp_store, model)
            nll_f, ce_f = training_outputs(samples, labels, futures_rel, fccsp_store, model,
                                           future_specs=fut_specs)
            loss = (train.nll_weight_low * nll_c + train.ce_weight * ce_c
                    + train.nll_weight_high * nll_f + train.ce_weight * ce_f)
            loss.backward()
            adam_step(csp_store, adam_csp, grad_clip=train.grad_clip)
            adam_step(fccsp_store, adam_fccsp, grad_clip=train.grad_clip)
            losses.append(loss.item())
        curve.append(float(np.mean(losses)))
        adam_csp.learning_rate *= train.lr_decay
        adam_fccsp.learning_rate *= train.lr_decay
        if progress is not None:
            progress(epoch, curve[-1])
    return csp_store, fccsp_store, curve
