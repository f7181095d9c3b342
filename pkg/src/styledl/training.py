"""Training loop, schedule, binary checkpointing, and evaluation.

Determinism contract: given the same config (seed included) and manifest,
two runs produce identical epoch logs and byte-identical checkpoint
files. Everything random flows from two generators seeded off the config
seed, one for parameter init (inside the model) and one for data order
and flip decisions.
"""
from __future__ import annotations

import dataclasses
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import (Manifest, cooccurrence_adjacency, flip_horizontal, load_images,
                     load_manifest)
from .errors import ConfigurationError, ContractViolation, FormatError, TrainingError
from .losses import pred_loss, total_loss
from .metrics import MetricReport, evaluate_metrics
from .model import ABLATION_PRESETS, EmotionDistributionNet
from .tensor import SGD, Tensor

CHECKPOINT_MAGIC = b"SEDL1"


@dataclass
class TrainConfig:
    R: int = 2
    lam: float = 0.8
    mu: float = 0.6
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-4
    batch_size: int = 8
    epochs: int = 90
    lr_decay: float = 10.0
    seed: int = 0
    ablation: str = "full"
    input_size: int = 64
    flip: bool = True
    gram_normalize: bool = False

    def __post_init__(self):
        if self.ablation not in ABLATION_PRESETS:
            raise ConfigurationError(f"unknown ablation '{self.ablation}'")
        if self.R < 1 or self.batch_size < 1 or self.epochs < 1:
            raise ConfigurationError("R, batch_size and epochs must be positive")
        if self.lr <= 0 or self.lr_decay < 1:
            raise ConfigurationError("lr must be positive and lr_decay >= 1")

    @staticmethod
    def overfit(**overrides) -> "TrainConfig":
        """Preset for memorizing a tiny corpus: long run, gentle flat lr, no flip.

        The full-schedule lr of 0.01 under momentum 0.9 overshoots on
        sub-hundred-sample corpora, so the preset runs at 0.001 without decay.
        """
        defaults = dict(epochs=300, lr=0.001, lr_decay=1.0, flip=False)
        defaults.update(overrides)
        return TrainConfig(**defaults)


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def load_train_config(path: str | Path) -> TrainConfig:
    """Parse a flat key=value file whose keys are TrainConfig field names."""
    fields = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in fields:
            raise ConfigurationError(f"config line {lineno}: unknown key '{key}'")
        kind = fields[key]
        if kind in ("int", int):
            values[key] = int(value)
        elif kind in ("float", float):
            values[key] = float(value)
        elif kind in ("bool", bool):
            if value.lower() not in _BOOL_WORDS:
                raise FormatError(f"config line {lineno}: bad boolean {value!r}")
            values[key] = _BOOL_WORDS[value.lower()]
        else:
            values[key] = value
    return TrainConfig(**values)


def save_train_config(cfg: TrainConfig, path: str | Path) -> None:
    lines = [f"{f.name}={getattr(cfg, f.name)}" for f in dataclasses.fields(TrainConfig)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def lr_at(cfg: TrainConfig, epoch: int) -> float:
    """The schedule keeps lr flat for 10 epochs, then divides by lr_decay
    every 20 epochs (1-indexed epochs)."""
    if epoch < 1:
        raise ContractViolation(f"epochs are 1-indexed, got {epoch}")
    steps = max(0, math.ceil((epoch - 10) / 20))
    return cfg.lr * cfg.lr_decay ** (-steps)


def build_model(cfg: TrainConfig, n_labels: int) -> EmotionDistributionNet:
    return EmotionDistributionNet(
        n_labels=n_labels, orders=cfg.R, lam=cfg.lam, mu=cfg.mu,
        input_size=cfg.input_size, ablation=cfg.ablation,
        gram_normalize=cfg.gram_normalize, seed=cfg.seed)


# ------------------------------------------------------------- checkpoint
@dataclass
class Checkpoint:
    config: TrainConfig
    n_labels: int
    label_names: list[str]
    epoch: int
    params: dict[str, np.ndarray]
    velocity: dict[str, np.ndarray]
    adjacency: np.ndarray

    def save(self, path: str | Path) -> None:
        entries: list[tuple[str, np.ndarray]] = []
        for field in dataclasses.fields(TrainConfig):
            value = getattr(self.config, field.name)
            if field.name == "ablation":
                value = sorted(ABLATION_PRESETS).index(value)
            entries.append((f"config/{field.name}", np.array(float(value))))
        entries.append(("meta/epoch", np.array(float(self.epoch))))
        entries.append(("meta/n_labels", np.array(float(self.n_labels))))
        names_bytes = ",".join(self.label_names).encode("utf-8")
        entries.append(("meta/label_names", np.frombuffer(names_bytes, dtype=np.uint8).astype(np.float64)))
        entries.append(("adjacency/static", self.adjacency))
        for key, arr in self.params.items():
            entries.append((f"param/{key}", arr))
        for key, arr in self.velocity.items():
            entries.append((f"momentum/{key}", arr))
        with open(path, "wb") as f:
            f.write(CHECKPOINT_MAGIC)
            for key, arr in entries:
                data = np.ascontiguousarray(arr, dtype=np.float64)
                kb = key.encode("utf-8")
                f.write(struct.pack("<I", len(kb)))
                f.write(kb)
                f.write(struct.pack("<I", data.ndim))
                f.write(struct.pack(f"<{data.ndim}I", *data.shape))
                f.write(data.astype("<f8").tobytes())

    @staticmethod
    def load(path: str | Path) -> "Checkpoint":
        buf = Path(path).read_bytes()
        if buf[:5] != CHECKPOINT_MAGIC:
            raise FormatError(f"{path}: bad checkpoint magic {buf[:5]!r}")
        pos = 5
        entries: dict[str, np.ndarray] = {}
        while pos < len(buf):
            (klen,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            key = buf[pos:pos + klen].decode("utf-8")
            pos += klen
            (ndim,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            shape = struct.unpack_from(f"<{ndim}I", buf, pos)
            pos += 4 * ndim
            count = int(np.prod(shape)) if ndim else 1
            arr = np.frombuffer(buf, dtype="<f8", count=count, offset=pos).reshape(shape)
            pos += 8 * count
            entries[key] = arr.copy()
        def scalar(key: str) -> float:
            return float(entries[key].reshape(-1)[0])

        cfg_values: dict = {}
        for field in dataclasses.fields(TrainConfig):
            raw = scalar(f"config/{field.name}")
            if field.name == "ablation":
                cfg_values[field.name] = sorted(ABLATION_PRESETS)[int(raw)]
            elif field.type in ("int", int):
                cfg_values[field.name] = int(raw)
            elif field.type in ("bool", bool):
                cfg_values[field.name] = bool(raw)
            else:
                cfg_values[field.name] = raw
        names_arr = entries["meta/label_names"].astype(np.uint8)
        label_names = names_arr.tobytes().decode("utf-8").split(",")
        return Checkpoint(
            config=TrainConfig(**cfg_values),
            n_labels=int(scalar("meta/n_labels")),
            label_names=label_names,
            epoch=int(scalar("meta/epoch")),
            params={k[len("param/"):]: v for k, v in entries.items() if k.startswith("param/")},
            velocity={k[len("momentum/"):]: v for k, v in entries.items() if k.startswith("momentum/")},
            adjacency=entries["adjacency/static"],
        )

    def build_model(self) -> EmotionDistributionNet:
        model = build_model(self.config, self.n_labels)
        model.set_static_adjacency(self.adjacency)
        target = model.parameters()
        if set(target) != set(self.params):
            raise FormatError("checkpoint parameter keys do not match the rebuilt model")
        for key, arr in self.params.items():
            if target[key].data.shape != arr.shape:
                raise FormatError(f"checkpoint shape mismatch at {key}")
            target[key].data = arr.copy()
        return model


def _snapshot(cfg: TrainConfig, manifest: Manifest, model: EmotionDistributionNet,
              opt: SGD, epoch: int) -> Checkpoint:
    return Checkpoint(
        config=cfg, n_labels=manifest.n_labels, label_names=list(manifest.label_names),
        epoch=epoch,
        params={k: t.data.copy() for k, t in model.parameters().items()},
        velocity={k: v.copy() for k, v in opt.velocity.items()},
        adjacency=model.static_adjacency.copy(),
    )


# ---------------------------------------------------------------- training
@dataclass
class EpochLog:
    epoch: int
    lr: float
    pred_loss: float
    adv_loss: float

    def line(self) -> str:
        return (f"epoch {self.epoch:4d}  lr {self.lr:.6f}  "
                f"pred {self.pred_loss:.6f}  adv {self.adv_loss:.6f}")


def train(cfg: TrainConfig, manifest: Manifest, root: str | Path,
          out_path: str | Path | None = None) -> tuple[Checkpoint, list[EpochLog]]:
    """Train from scratch on every record of the manifest.

    `root` is the directory image paths are relative to. Returns the
    final checkpoint and the per-epoch log; optionally writes the
    checkpoint to out_path.
    """
    if not manifest.records:
        raise ContractViolation("training manifest is empty")
    images = load_images(manifest, root, cfg.input_size)
    targets = manifest.distributions()
    model = build_model(cfg, manifest.n_labels)
    if model.gcn:
        model.set_static_adjacency(cooccurrence_adjacency(manifest))
    params = model.parameters()
    opt = SGD(params, lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay)
    data_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    n = len(manifest.records)
    use_adversary = model.adv_head3 is not None
    logs: list[EpochLog] = []
    last_good = _snapshot(cfg, manifest, model, opt, epoch=0)
    for epoch in range(1, cfg.epochs + 1):
        opt.lr = lr_at(cfg, epoch)
        order = data_rng.permutation(n)
        pred_sum = 0.0
        adv_sum = 0.0
        batches = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            batch = images[idx]
            if cfg.flip:
                flip_mask = data_rng.random(len(idx)) < 0.5
                if flip_mask.any():
                    batch = batch.copy()
                    batch[flip_mask] = batch[flip_mask][..., ::-1]
            try:
                out = model.forward(Tensor(batch))
                l_pred = pred_loss(out.y_e, out.y_emotion, targets[idx])
                if use_adversary:
                    l_adv = model.adversary(out)
                    loss = total_loss(l_pred, l_adv)
                else:
                    l_adv = Tensor(0.0)
                    loss = l_pred
                opt.zero_grad()
                loss.backward()
                opt.step()
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch}: {exc}", checkpoint=last_good) from exc
            pred_sum += l_pred.item()
            adv_sum += l_adv.item()
            batches += 1
        logs.append(EpochLog(epoch=epoch, lr=opt.lr,
                             pred_loss=pred_sum / batches, adv_loss=adv_sum / batches))
        last_good = _snapshot(cfg, manifest, model, opt, epoch=epoch)
    if out_path is not None:
        last_good.save(out_path)
    return last_good, logs


# -------------------------------------------------------------- evaluation
def predict_batch(model: EmotionDistributionNet, images: np.ndarray,
                  batch_size: int = 16) -> np.ndarray:
    """Final mixed distribution for every image, [N, C]."""
    outputs = []
    for start in range(0, len(images), batch_size):
        out = model.forward(Tensor(images[start:start + batch_size]))
        outputs.append(out.y.data)
    return np.concatenate(outputs) if outputs else np.zeros((0, model.n_labels))


def evaluate(checkpoint: Checkpoint, manifest: Manifest, root: str | Path,
             normalize: bool = True) -> MetricReport:
    """Metric report of the checkpointed model over a manifest."""
    if manifest.n_labels != checkpoint.n_labels:
        raise ConfigurationError(
            f"manifest has {manifest.n_labels} labels, checkpoint {checkpoint.n_labels}")
    model = checkpoint.build_model()
    images = load_images(manifest, root, checkpoint.config.input_size)
    preds = predict_batch(model, images)
    return evaluate_metrics(manifest.distributions(), preds, normalize=normalize)


def mean_final_kl(model: EmotionDistributionNet, images: np.ndarray,
                  targets: np.ndarray) -> float:
    """Mean KL(target || final y) over a dataset, the overfit yardstick."""
    preds = predict_batch(model, images)
    report = evaluate_metrics(targets, preds)
    return report.mean["kl"]


def evaluate_path(checkpoint_path: str | Path, manifest_path: str | Path,
                  normalize: bool = True) -> MetricReport:
    ckpt = Checkpoint.load(checkpoint_path)
    manifest = load_manifest(manifest_path)
    return evaluate(ckpt, manifest, Path(manifest_path).parent, normalize=normalize)
