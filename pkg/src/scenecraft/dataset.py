# -*- coding: utf-8 -*-
"""Clip datasets, PNG frame files and the batch prefetch thread."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import json
import os
import queue
import random
from threading import Event, Thread

import numpy as np
import torch
from PIL import Image
from torch.nn import functional as F

from ._internal import acheck

DIRECTIONS = ("left", "right", "up", "down")
_STEP = {"left": (0, -1), "right": (0, 1), "up": (-1, 0), "down": (1, 0)}
_COLORS = {
    "red": (0.9, -0.8, -0.8),
    "green": (-0.8, 0.9, -0.8),
    "blue": (-0.8, -0.8, 0.9),
}
_BACKGROUND = {"bright": 0.6, "dark": -0.6}
META_FILE = "meta.json"


class ClipItem:
    """One training clip with frames in [-1, 1] as [F, C, H, W]."""

    __slots__ = "caption", "domain_id", "fps", "frames", "name"

    def __init__(self, frames: torch.Tensor, caption: str, domain_id=0, fps=8.0, name=""):
        acheck(str, caption=caption, name=name)
        acheck(int, domain_id=domain_id)
        if frames.dim() != 4:
            raise ValueError("frames must be [frames, channels, height, width]")
        if domain_id < 0:
            raise ValueError("domain_id must be >= 0")
        if fps <= 0:
            raise ValueError("fps must be > 0")
        self.caption = caption
        self.domain_id = domain_id
        self.fps = float(fps)
        self.frames = frames
        self.name = name


class ClipDataset:
    """Ordered collection of clips with equal frame shape."""

    __slots__ = "_items"

    def __init__(self, items=()):
        self._items = []
        for item in items:
            self.append(item)

    def __getitem__(self, index) -> ClipItem:
        return self._items[index]

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def append(self, item: ClipItem) -> None:
        acheck(ClipItem, item=item)
        if self._items and item.frames.shape != self._items[0].frames.shape:
            raise ValueError(
                "clip '{0}' has shape {1}, dataset has {2}".format(
                    item.name, tuple(item.frames.shape), tuple(self._items[0].frames.shape)
                )
            )
        self._items.append(item)

    def domains(self) -> list:
        return sorted({item.domain_id for item in self._items})


def moving_square_clip(
    frames: int, height: int, width: int, channels: int, direction: str, color: str, style: str, rng
) -> np.ndarray:
    """
    Draw a square moving one pixel per frame, wrapping at the border.

    :param rng: numpy Generator for the start position
    :return: <class 'numpy.ndarray'> float32 [frames, channels, height, width]
    """
    size = max(2, min(height, width) // 3)
    span_y = height - size + 1
    span_x = width - size + 1
    y0 = int(rng.integers(0, span_y))
    x0 = int(rng.integers(0, span_x))
    dy, dx = _STEP[direction]

    if channels == 3:
        value = np.array(_COLORS[color], dtype=np.float32)
    else:
        value = np.full(channels, 0.9 if style == "dark" else -0.9, dtype=np.float32)

    clip = np.full((frames, channels, height, width), _BACKGROUND[style], dtype=np.float32)
    for k in range(frames):
        y = (y0 + k * dy) % span_y
        x = (x0 + k * dx) % span_x
        clip[k, :, y : y + size, x : x + size] = value[:, None, None]
    return clip


def make_moving_squares(
    n_clips: int, frames=8, height=8, width=16, channels=3, n_domains=2, seed=0, fps=8.0
) -> ClipDataset:
    """
    Synthetic dataset of moving squares.

    Even domains draw on a bright background, odd domains on a dark one.
    With frames == 1 the items are stills.

    :param n_clips: Number of clips, spread round-robin over the domains
    :return: ClipDataset
    """
    acheck(int, n_clips=n_clips, frames=frames, n_domains=n_domains, seed=seed)
    if n_clips < 1:
        raise ValueError("n_clips must be >= 1")
    if n_domains < 1:
        raise ValueError("n_domains must be >= 1")

    rng = np.random.default_rng(seed)
    dataset = ClipDataset()
    for i in range(n_clips):
        domain_id = i % n_domains
        style = "bright" if domain_id % 2 == 0 else "dark"
        direction = DIRECTIONS[int(rng.integers(0, len(DIRECTIONS)))]
        color = sorted(_COLORS)[int(rng.integers(0, len(_COLORS)))]
        if channels != 3:
            color = "white" if style == "dark" else "black"
        clip = moving_square_clip(frames, height, width, channels, direction, color, style, rng)
        caption = "a {0} square moving {1} on a {2} background".format(color, direction, style)
        if frames == 1:
            caption = "a {0} square on a {1} background".format(color, style)
        dataset.append(
            ClipItem(torch.from_numpy(clip), caption, domain_id, fps, "clip_{0:04}".format(i))
        )
    return dataset


def frames_to_uint8(frames: torch.Tensor) -> np.ndarray:
    """Map frames [F, C, H, W] in [-1, 1] to uint8 [F, H, W, C]."""
    x = ((frames.detach().cpu().float().clamp(-1.0, 1.0) + 1.0) * 127.5).round()
    return x.to(torch.uint8).permute(0, 2, 3, 1).numpy()


def save_frames(frames: torch.Tensor, directory: str) -> list:
    """
    Write frames as frame_0000.png, frame_0001.png, ...

    :param frames: [F, C, H, W] with C 1 or 3
    :param directory: Target directory, created if missing
    :return: <class 'list'> written file paths
    """
    if frames.dim() != 4 or frames.shape[1] not in (1, 3):
        raise ValueError("frames must be [frames, 1 or 3 channels, height, width]")
    os.makedirs(directory, exist_ok=True)
    rc = []
    for j, arr in enumerate(frames_to_uint8(frames)):
        path = os.path.join(directory, "frame_{0:04}.png".format(j))
        if arr.shape[2] == 1:
            Image.fromarray(arr[:, :, 0]).save(path)
        else:
            Image.fromarray(arr).save(path)
        rc.append(path)
    return rc


def load_frames(directory: str, height=None, width=None, channels=3) -> torch.Tensor:
    """
    Read numbered PNG frames of a directory.

    Frames of another size are resized to height x width.

    :return: <class 'torch.Tensor'> float32 [F, C, H, W] in [-1, 1]
    """
    names = sorted(
        n for n in os.listdir(directory) if n.startswith("frame_") and n.endswith(".png")
    )
    if not names:
        raise FileNotFoundError("no frame_*.png files in '{0}'".format(directory))

    mode = "L" if channels == 1 else "RGB"
    rc = []
    for name in names:
        with Image.open(os.path.join(directory, name)) as img:
            img = img.convert(mode)
            if height is not None and width is not None and img.size != (width, height):
                img = img.resize((width, height), Image.Resampling.BILINEAR)
            arr = np.asarray(img, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        rc.append(torch.from_numpy(arr).permute(2, 0, 1) / 127.5 - 1.0)
    return torch.stack(rc)


def write_dataset(dataset: ClipDataset, root: str) -> list:
    """
    Write every clip to root/<name>/ with frames and a sidecar meta.json.

    :return: <class 'list'> clip directories
    """
    acheck(ClipDataset, dataset=dataset)
    rc = []
    for i, item in enumerate(dataset):
        directory = os.path.join(root, item.name or "clip_{0:04}".format(i))
        save_frames(item.frames, directory)
        with open(os.path.join(directory, META_FILE), "w") as fh:
            json.dump(
                {"caption": item.caption, "domain": item.domain_id, "fps": item.fps},
                fh,
                indent=2,
                sort_keys=True,
            )
        rc.append(directory)
    return rc


def load_dataset(root: str, height=None, width=None, channels=3) -> ClipDataset:
    """
    Read a dataset directory written by write_dataset.

    :param root: Directory with one sub directory per clip
    :return: ClipDataset ordered by clip directory name
    """
    if not os.path.isdir(root):
        raise FileNotFoundError("dataset directory '{0}' does not exist".format(root))

    dataset = ClipDataset()
    for name in sorted(os.listdir(root)):
        directory = os.path.join(root, name)
        meta_path = os.path.join(directory, META_FILE)
        if not os.path.isfile(meta_path):
            continue
        with open(meta_path) as fh:
            meta = json.load(fh)
        try:
            caption = str(meta["caption"])
            domain_id = int(meta.get("domain", 0))
            fps = float(meta.get("fps", 8.0))
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError("bad sidecar file '{0}' | {1}".format(meta_path, e))
        frames = load_frames(directory, height, width, channels)
        dataset.append(ClipItem(frames, caption, domain_id, fps, name))
    return dataset


def augment_clip(frames: torch.Tensor, generator: torch.Generator, min_crop=0.8) -> torch.Tensor:
    """
    Random crop resized back to the input size and random horizontal flip.

    All frames of the clip get the same crop and flip.

    :param frames: [F, C, H, W]
    :param generator: torch.Generator
    :param min_crop: Smallest crop side as fraction of the frame side
    :return: <class 'torch.Tensor'> [F, C, H, W]
    """
    _, _, h, w = frames.shape
    scale = min_crop + (1.0 - min_crop) * float(torch.rand(1, generator=generator))
    ch = max(1, int(round(h * scale)))
    cw = max(1, int(round(w * scale)))
    top = int(torch.randint(0, h - ch + 1, (1,), generator=generator))
    left = int(torch.randint(0, w - cw + 1, (1,), generator=generator))
    x = frames[:, :, top : top + ch, left : left + cw]
    if (ch, cw) != (h, w):
        x = F.interpolate(x, size=(h, w), mode="bilinear", align_corners=False)
    if float(torch.rand(1, generator=generator)) < 0.5:
        x = torch.flip(x, dims=(-1,))
    return x


class Batch:
    """Frames [B, F, C, H, W] of one domain with their captions."""

    __slots__ = "captions", "domain_id", "frames"

    def __init__(self, frames, captions, domain_id):
        self.captions = captions
        self.domain_id = domain_id
        self.frames = frames


class BatchIterator:
    """
    Endless single domain batches, round-robin across the domains.

    Every domain is shuffled with its own seeded order, the batch sequence is
    fully determined by the seed.
    """

    __slots__ = "augment", "batch", "dataset", "seed"

    def __init__(self, dataset: ClipDataset, batch: int, seed=0, augment=False):
        acheck(ClipDataset, dataset=dataset)
        acheck(int, batch=batch, seed=seed)
        if len(dataset) == 0:
            raise ValueError("dataset is empty")
        if batch < 1:
            raise ValueError("batch must be >= 1")
        self.augment = augment
        self.batch = batch
        self.dataset = dataset
        self.seed = seed

    def __iter__(self):
        domains = self.dataset.domains()
        members = {d: [i for i, c in enumerate(self.dataset) if c.domain_id == d] for d in domains}
        rngs = {d: random.Random("{0}:{1}".format(self.seed, d)) for d in domains}
        pending = {d: [] for d in domains}
        gen = torch.Generator().manual_seed(self.seed)

        while True:
            for d in domains:
                indexes = []
                while len(indexes) < self.batch:
                    if not pending[d]:
                        order = list(members[d])
                        rngs[d].shuffle(order)
                        pending[d] = order
                    indexes.append(pending[d].pop(0))

                frames = []
                for i in indexes:
                    clip = self.dataset[i].frames
                    if self.augment:
                        clip = augment_clip(clip, gen)
                    frames.append(clip)
                yield Batch(
                    torch.stack(frames), [self.dataset[i].caption for i in indexes], d
                )


class BatchPrefetcher(Thread):
    """
    Thread which fills a bounded queue from a batch iterator.

    The single producer keeps the order of the source iterator.
    """

    _END = object()

    def __init__(self, batches, depth=2):
        """
        Init BatchPrefetcher class.

        :param batches: Iterable of Batch objects
        :param depth: Queue size
        """
        super().__init__()
        self._batches = batches
        self._queue = queue.Queue(maxsize=max(1, depth))
        self._work = Event()
        self._work.set()
        self.daemon = True

    def __iter__(self):
        return self

    def __next__(self) -> Batch:
        item = self._queue.get()
        if item is self._END:
            raise StopIteration()
        if isinstance(item, Exception):
            raise item
        return item

    def _put(self, item) -> bool:
        while self._work.is_set():
            try:
                self._queue.put(item, timeout=0.05)
                return True
            except queue.Full:
                continue
        return False

    def run(self):
        try:
            for batch in self._batches:
                if not self._put(batch):
                    return
        except Exception as e:
            self._put(e)
            return
        self._put(self._END)

    def stop(self) -> None:
        """Stop the producer and wait for it."""
        self._work.clear()
        if self.is_alive():
            self.join(timeout=5.0)
