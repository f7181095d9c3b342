"""Dataset manifests, PPM image IO, synthetic corpus generation, label
co-occurrence adjacency, and deterministic splits.

The manifest is a UTF-8 text file: first line `#labels: a,b,c`, then one
`path,p1,...,pC` row per image. Images are binary PPM (P6, maxval 255),
chosen because they round-trip bit-exactly with no decoder dependency.
"""
from __future__ import annotations

import colorsys
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ContractViolation, FormatError, ValidationError

EMOTION_NAMES_8 = ("amusement", "anger", "awe", "contentment",
                   "disgust", "excitement", "fear", "sadness")
SUM_TOLERANCE = (0.99, 1.01)


@dataclass
class DatasetRecord:
    image_path: str
    distribution: np.ndarray


@dataclass
class Manifest:
    label_names: list[str]
    records: list[DatasetRecord]

    @property
    def n_labels(self) -> int:
        return len(self.label_names)

    def __len__(self) -> int:
        return len(self.records)

    def distributions(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, self.n_labels))
        return np.stack([r.distribution for r in self.records])


def _parse_distribution(parts: list[str], n_labels: int, lineno: int) -> np.ndarray:
    if len(parts) != n_labels:
        raise FormatError(f"line {lineno}: expected {n_labels} probabilities, got {len(parts)}")
    try:
        values = np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"line {lineno}: {exc}") from None
    if np.any(values < 0):
        raise ValidationError(f"line {lineno}: negative probability")
    total = values.sum()
    if not SUM_TOLERANCE[0] <= total <= SUM_TOLERANCE[1]:
        raise ValidationError(f"line {lineno}: distribution sums to {total:.6f}, "
                              f"outside [{SUM_TOLERANCE[0]}, {SUM_TOLERANCE[1]}]")
    return values / total


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    header_idx = None
    for i, line in enumerate(lines):
        if line.strip():
            header_idx = i
            break
    if header_idx is None or not lines[header_idx].startswith("#labels:"):
        raise FormatError(f"{path}: first line must be '#labels: a,b,c'")
    label_names = [s.strip() for s in lines[header_idx][len("#labels:"):].split(",") if s.strip()]
    if not label_names:
        raise FormatError(f"{path}: empty label list")
    records = []
    for lineno, line in enumerate(lines[header_idx + 1:], start=header_idx + 2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) < 2:
            raise FormatError(f"line {lineno}: expected 'path,p1,...,pC'")
        dist = _parse_distribution(parts[1:], len(label_names), lineno)
        records.append(DatasetRecord(image_path=parts[0], distribution=dist))
    return Manifest(label_names=label_names, records=records)


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    path = Path(path)
    lines = ["#labels: " + ",".join(manifest.label_names)]
    for rec in manifest.records:
        probs = ",".join(f"{p:.17g}" for p in rec.distribution)
        lines.append(f"{rec.image_path},{probs}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ----------------------------------------------------------------- PPM IO
def _next_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        ch = buf[pos:pos + 1]
        if ch == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise FormatError("unexpected end of PPM header")
    return buf[start:pos], pos


def load_ppm(path: str | Path, size: int | None = None) -> np.ndarray:
    """Read a binary P6 image into floats [3,H,W] in [0,1], optionally
    nearest-resized to size x size."""
    buf = Path(path).read_bytes()
    magic, pos = _next_token(buf, 0)
    if magic != b"P6":
        raise FormatError(f"{path}: not a binary PPM (magic {magic!r})")
    fields = []
    for _ in range(3):
        token, pos = _next_token(buf, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise FormatError(f"{path}: bad header token {token!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{path}: maxval {maxval}, only 255 supported")
    pos += 1  # single whitespace byte after maxval
    needed = width * height * 3
    payload = buf[pos:pos + needed]
    if len(payload) < needed:
        raise FormatError(f"{path}: truncated payload ({len(payload)} of {needed} bytes)")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    img = pixels.astype(np.float64).transpose(2, 0, 1) / 255.0
    if size is not None:
        img = resize_nearest(img, size, size)
    return img


def save_ppm(path: str | Path, img: np.ndarray) -> None:
    """Write floats [3,H,W] in [0,1] as binary P6."""
    if img.ndim != 3 or img.shape[0] != 3:
        raise ContractViolation(f"save_ppm expects [3,H,W], got {img.shape}")
    h, w = img.shape[1:]
    bytes_hw3 = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8).transpose(1, 2, 0)
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(bytes_hw3.tobytes())


def resize_nearest(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = img.shape[-2:]
    rows = (np.arange(out_h) * h) // out_h
    cols = (np.arange(out_w) * w) // out_w
    return img[..., rows[:, None], cols[None, :]]


def flip_horizontal(img: np.ndarray) -> np.ndarray:
    return img[..., ::-1].copy()


# ------------------------------------------------------- synthetic corpus
def _label_palette(n_labels: int) -> np.ndarray:
    colors = [colorsys.hsv_to_rgb(i / n_labels, 0.9, 1.0) for i in range(n_labels)]
    return np.array(colors, dtype=np.float64)


def synth_generate(seed: int, n_samples: int, n_labels: int, input_size: int,
                   out_dir: str | Path) -> Manifest:
    """Write a corpus whose color and stripe frequency encode the target
    distribution: each label contributes its own hue and spatial frequency
    weighted by its probability mass. Byte-identical for a given seed."""
    if n_samples < 1 or n_labels < 2:
        raise ConfigurationError(f"need n_samples >= 1 and n_labels >= 2, "
                                 f"got {n_samples}/{n_labels}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    if n_labels == len(EMOTION_NAMES_8):
        names = list(EMOTION_NAMES_8)
    else:
        names = [f"emotion{i}" for i in range(n_labels)]
    palette = _label_palette(n_labels)
    yy, xx = np.mgrid[0:input_size, 0:input_size].astype(np.float64) / input_size
    records = []
    for idx in range(n_samples):
        dist = rng.dirichlet(np.full(n_labels, 0.5))
        phases = rng.uniform(0.0, 2.0 * math.pi, size=n_labels)
        img = np.zeros((3, input_size, input_size))
        for c in range(n_labels):
            angle = math.pi * c / n_labels
            coord = xx * math.cos(angle) + yy * math.sin(angle)
            stripes = 0.55 + 0.45 * np.sin(2.0 * math.pi * (c + 1) * coord + phases[c])
            img += dist[c] * palette[c][:, None, None] * stripes
        name = f"sample_{idx:04d}.ppm"
        save_ppm(out_dir / name, np.clip(img, 0.0, 1.0))
        records.append(DatasetRecord(image_path=name, distribution=dist))
    manifest = Manifest(label_names=names, records=records)
    save_manifest(manifest, out_dir / "manifest.txt")
    return manifest


def load_images(manifest: Manifest, root: str | Path, size: int) -> np.ndarray:
    """Stack every record's image into [N,3,size,size]."""
    root = Path(root)
    if not manifest.records:
        return np.zeros((0, 3, size, size))
    return np.stack([load_ppm(root / r.image_path, size=size) for r in manifest.records])


# ------------------------------------------------- adjacency and splits
def cooccurrence_adjacency(manifest: Manifest, tau: float = 0.1,
                           binarize_t: float = 0.3) -> np.ndarray:
    """Row-stochastic static adjacency from thresholded label presence.

    Label i counts as present when p_i >= tau. Conditional co-presence
    rates are binarized at binarize_t, the diagonal is switched on, and
    rows are normalized to sum to 1.
    """
    c = manifest.n_labels
    if not manifest.records:
        warnings.warn("empty manifest: static adjacency falls back to identity")
        return np.eye(c)
    present = manifest.distributions() >= tau
    counts = present.sum(axis=0).astype(np.float64)
    co = (present.T @ present).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(counts[:, None] > 0, co / counts[:, None], 0.0)
    adj = (cond >= binarize_t).astype(np.float64)
    np.fill_diagonal(adj, 1.0)
    return adj / adj.sum(axis=1, keepdims=True)


def split_dataset(manifest: Manifest, ratio: float, seed: int) -> tuple[Manifest, Manifest]:
    """Deterministic shuffled split into (train, test)."""
    if not 0.0 < ratio < 1.0:
        raise ConfigurationError(f"split ratio {ratio} outside (0,1)")
    order = np.random.default_rng(seed).permutation(len(manifest.records))
    cut = int(len(order) * ratio)
    train = [manifest.records[i] for i in order[:cut]]
    test = [manifest.records[i] for i in order[cut:]]
    return (Manifest(manifest.label_names, train),
            Manifest(manifest.label_names, test))
