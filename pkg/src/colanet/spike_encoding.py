"""Rate coding of images and class labels into deterministic spike trains.

Every image owns a fixed window on the global timeline: ``presentation_ms``
of pixel activity followed by ``silence_ms`` with no pixel spikes. A pixel
with brightness ``b`` emits ``floor(max_spikes * b / 255)`` spikes inside
the presentation sub-window, spread evenly by a floor-crossing rule so the
encoding is a pure function of the data. The class-label node of an image
spikes at every timestep of the whole window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

import numpy as np

from colanet.data_io import Dataset, N_CLASSES, PIXELS_PER_IMAGE


@dataclass(frozen=True)
class EncodingParams:
    presentation_ms: int = 10
    silence_ms: int = 10
    max_spikes: int = 10
    pixel_nodes: int = PIXELS_PER_IMAGE
    class_nodes: int = N_CLASSES

    def __post_init__(self):
        if self.presentation_ms <= 0:
            raise ValueError("presentation_ms must be positive")
        if self.silence_ms < 0:
            raise ValueError("silence_ms must be nonnegative")
        if not 0 < self.max_spikes <= self.presentation_ms:
            raise ValueError("max_spikes must be in [1, presentation_ms]")

    @property
    def period(self) -> int:
        return self.presentation_ms + self.silence_ms


class SpikeEvent(NamedTuple):
    """A spike at an integer millisecond on one input node."""

    time: int
    node: int


def pixel_spike_count(b: int, params: EncodingParams = EncodingParams()) -> int:
    """Spike count for brightness ``b``: floor(max_spikes * b / 255)."""
    if not 0 <= b <= 255:
        raise ValueError(f"brightness {b} outside [0, 255]")
    return (params.max_spikes * b) // 255


def _offset_table(params: EncodingParams) -> np.ndarray:
    """(max_spikes+1, presentation_ms) bool: row n marks the offsets at which
    a pixel with spike count n fires. Offset t fires iff the running total
    floor((t+1)*n/P) advances past floor(t*n/P)."""
    P = params.presentation_ms
    table = np.zeros((params.max_spikes + 1, P), dtype=bool)
    for n in range(params.max_spikes + 1):
        for t in range(P):
            table[n, t] = ((t + 1) * n) // P > (t * n) // P
    return table


def encode_image(pixels: np.ndarray, image_index: int, params: EncodingParams = EncodingParams()) -> list[SpikeEvent]:
    """Spike list for one image, times absolute on the global timeline."""
    if image_index < 0:
        raise ValueError("image_index must be nonnegative")
    counts = (params.max_spikes * pixels.astype(np.int64)) // 255
    table = _offset_table(params)
    fires = table[counts]  # (pixels, presentation_ms)
    start = params.period * image_index
    events = [
        SpikeEvent(start + int(t), int(p))
        for p, t in zip(*np.nonzero(fires))
    ]
    events.sort()
    return events


def encode_label(label: int, image_index: int, params: EncodingParams = EncodingParams()) -> list[SpikeEvent]:
    """One spike per timestep of the image window on the label's class node."""
    if not 0 <= label < params.class_nodes:
        raise ValueError(f"label {label} outside [0, {params.class_nodes - 1}]")
    start = params.period * image_index
    return [SpikeEvent(start + t, label) for t in range(params.period)]


class SpikeStream:
    """Lazy per-window spike supply over a dataset's presentation timeline.

    Pixel batches are computed one image window at a time so a full 70k-image
    run never materializes its 1.4M-timestep stream. ``label_cutoff_ms``
    silences the class-label nodes from that time on (the supervision signal
    stops at the train/test boundary).
    """

    def __init__(self, dataset: Dataset, params: EncodingParams = EncodingParams(),
                 label_cutoff_ms: Optional[int] = None):
        self.dataset = dataset
        self.params = params
        self.label_cutoff_ms = label_cutoff_ms
        self._table = _offset_table(params)

    @property
    def duration(self) -> int:
        return self.params.period * len(self.dataset)

    def pixel_offsets(self, image_index: int) -> list[np.ndarray]:
        """Per presentation-offset arrays of pixel nodes firing in that ms."""
        counts = (self.params.max_spikes * self.dataset.images[image_index].astype(np.int64)) // 255
        fires = self._table[counts]  # (784, presentation_ms)
        return [np.nonzero(fires[:, t])[0] for t in range(self.params.presentation_ms)]

    def batches(self, t_start: int = 0, t_end: Optional[int] = None) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
        """Yield (t, pixel_nodes, class_nodes) for every ms in [t_start, t_end).

        Steps beyond the dataset's timeline yield empty batches, so a run may
        be driven past the encoded data (everything stays silent).
        """
        if t_end is None:
            t_end = self.duration
        period = self.params.period
        presentation = self.params.presentation_ms
        empty = np.empty(0, dtype=np.int64)
        labels = self.dataset.labels
        cutoff = self.label_cutoff_ms

        t = t_start
        while t < t_end:
            k = t // period
            if k >= len(self.dataset):
                yield t, empty, empty
                t += 1
                continue
            offsets = self.pixel_offsets(k)
            label_node = np.array([labels[k]], dtype=np.int64)
            window_end = min((k + 1) * period, t_end)
            while t < window_end:
                phase = t - k * period
                pixel_batch = offsets[phase] if phase < presentation else empty
                label_active = cutoff is None or t < cutoff
                yield t, pixel_batch, (label_node if label_active else empty)
                t += 1

    def events(self, t_start: int = 0, t_end: Optional[int] = None) -> Iterator[SpikeEvent]:
        """Flat time-ordered event view (pixel and label spikes interleaved).

        Node numbering is pixel nodes 0..pixel_nodes-1, then class node c as
        pixel_nodes + c, so the merged stream is unambiguous.
        """
        base = self.params.pixel_nodes
        for t, pixel_batch, class_batch in self.batches(t_start, t_end):
            for p in pixel_batch:
                yield SpikeEvent(t, int(p))
            for c in class_batch:
                yield SpikeEvent(t, base + int(c))


def build_stream(dataset: Dataset, params: EncodingParams = EncodingParams(),
                 label_cutoff_ms: Optional[int] = None) -> SpikeStream:
    """Assemble the lazy stream for a dataset; duration = period * len(dataset)."""
    return SpikeStream(dataset, params, label_cutoff_ms)
