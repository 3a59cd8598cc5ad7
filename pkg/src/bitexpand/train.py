"""Training loop: seeded pipeline, l1 loss, Adam, two-phase lr schedule.

One optimizer step per sample (batch size 1); the chan variant stacks the
three color channels along the batch axis so a step still covers the whole
image. Checkpoints are written every epoch together with an optimizer
state sidecar, which lets a later run resume with the identical loss
trajectory.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .checkpoint import (CheckpointError, load_checkpoint, read_container,
                         save_checkpoint, write_container)
from .model import BitNetModel, backward, build, forward
from .optim import AdamState, adam_step
from .ops import l1_loss
from .pipeline import AugmentConfig, dataset_iter, epoch_seed

log = logging.getLogger(__name__)

STATE_MAGIC = b"BITNETST"


@dataclass
class TrainSettings:
    epochs: int = 100
    base_lr: float = 1e-4
    lr_drop_factor: float = 0.1
    seed: int = 10_000
    target_bits: int | None = None
    train_fraction: float = 0.8


def lr_at_epoch(epoch: int, settings: TrainSettings) -> float:
    """Base lr for the first 75% of epochs, a tenth of it afterwards."""
    boundary = int(0.75 * settings.epochs)
    return settings.base_lr if epoch < boundary else (
        settings.base_lr * settings.lr_drop_factor)


def _chan_batch(pair):
    """Restack an RGB pair as a 3-sample single-channel batch."""
    inp, tgt = pair.input, pair.target
    colors = inp[0, :3]
    parts = [colors[:, None]]  # (3, 1, h, w)
    if inp.shape[1] == 4:
        parts.append(np.repeat(inp[:, 3:4], 3, axis=0))
    return np.concatenate(parts, axis=1), tgt[0, :, None]


def _prepare(pair, model: BitNetModel):
    cfg = model.config
    if cfg.variant == "chan":
        if pair.input.shape[1] not in (3, 4):
            raise ValueError("chan training expects RGB corpus images")
        return _chan_batch(pair)
    if not cfg.use_bit_info:
        return pair.input[:, : cfg.image_channels], pair.target
    return pair.input, pair.target


def _grad_list(model: BitNetModel, grads: dict) -> list[np.ndarray]:
    out = []
    for name in model.layers:
        gw, gb = grads[name]
        out.append(gw)
        out.append(gb)
    return out


def save_train_state(path, state: AdamState, model: BitNetModel,
                     epochs_done: int, steps_done: int) -> None:
    header = {
        "format_version": "1",
        "epochs_done": str(epochs_done),
        "steps_done": str(steps_done),
        "t": str(state.t),
    }
    arrays = []
    for name, m, v in zip(model.parameter_names(), state.m, state.v):
        arrays.append((f"{name}.m", m))
        arrays.append((f"{name}.v", v))
    write_container(path, STATE_MAGIC, header, arrays)


def load_train_state(path, model: BitNetModel):
    """Returns (AdamState, epochs_done, steps_done) for this model's shapes."""
    header, manifest, payload = read_container(path, STATE_MAGIC)
    by_name = {e[0]: e for e in manifest}
    params = model.parameters()
    names = model.parameter_names()
    m, v = [], []
    for name, p in zip(names, params):
        for suffix, dest in (("m", m), ("v", v)):
            entry = by_name.get(f"{name}.{suffix}")
            if entry is None or entry[1] != p.shape:
                raise CheckpointError(f"{path}: state entry {name}.{suffix} "
                                      "missing or mis-shaped")
            raw = np.frombuffer(payload[entry[2] : entry[2] + entry[3]], dtype="<f4")
            dest.append(raw.reshape(entry[1]).astype(np.float32))
    state = AdamState(m=m, v=v, t=int(header.get("t", "0")))
    return state, int(header.get("epochs_done", "0")), int(header.get("steps_done", "0"))


def train_step(model: BitNetModel, pair, state: AdamState, lr: float) -> float:
    """One forward/backward/update; returns the sample loss."""
    x, target = _prepare(pair, model)
    cache: dict = {}
    pred = forward(model, x, cache)
    loss, grad_pred = l1_loss(pred, target)
    grads = backward(model, cache, grad_pred)
    adam_step(model.parameters(), _grad_list(model, grads), state, lr)
    return loss


def train(model: BitNetModel, corpus_dir, out_dir, settings: TrainSettings,
          augment: AugmentConfig, resume_state=None, log_every: int = 0):
    """Run the full schedule; returns (checkpoint_path, steps_run).

    Writes ckpt_epoch_NNN.bitnet + .state each epoch, the final weights to
    checkpoint.bitnet, and appends `step,epoch,loss,lr` lines to loss_log.csv.
    resume_state, when given, is (AdamState, epochs_done, steps_done) from
    load_train_state; training continues at the next epoch.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    loss_log = out / "loss_log.csv"
    if resume_state is not None:
        state, start_epoch, step = resume_state
    else:
        state, start_epoch, step = AdamState.init(model.parameters()), 0, 0
        loss_log.write_text("")
    for epoch in range(start_epoch, settings.epochs):
        lr = lr_at_epoch(epoch, settings)
        cfg = replace(augment, seed=epoch_seed(settings.seed, epoch))
        lines = []
        for pair in dataset_iter(corpus_dir, ("train", settings.train_fraction),
                                 cfg, settings.target_bits):
            loss = train_step(model, pair, state, lr)
            step += 1
            lines.append(f"{step},{epoch},{loss:.8f},{lr:g}")
            if log_every and step % log_every == 0:
                log.info("step %d epoch %d loss %.5f lr %g", step, epoch, loss, lr)
        if lines:
            with loss_log.open("a") as fh:
                fh.write("\n".join(lines) + "\n")
        ckpt = out / f"ckpt_epoch_{epoch:03d}.bitnet"
        save_checkpoint(model, ckpt)
        save_train_state(ckpt.with_suffix(".state"), state, model, epoch + 1, step)
    final = out / "checkpoint.bitnet"
    save_checkpoint(model, final)
    return final, step


def resume_from(checkpoint_path):
    """Load model + optimizer state for continuing an interrupted run."""
    model = load_checkpoint(checkpoint_path)
    state_path = Path(checkpoint_path).with_suffix(".state")
    if not state_path.exists():
        raise CheckpointError(f"no optimizer state next to {checkpoint_path}; "
                              "cannot resume with an identical trajectory")
    resume = load_train_state(state_path, model)
    return model, resume
