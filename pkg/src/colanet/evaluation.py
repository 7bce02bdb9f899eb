"""Readout, metrics, prediction files, and the learned-weight picture.

The readout tallies output-section spikes per image window and names the
class with the most spikes (lowest index on ties, no prediction if the
window was silent). Accuracy counts a missing prediction as an error.
Per-class precision/recall/F use the plain confusion-matrix definitions
with the 0-convention for empty denominators.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from colanet.data_io import Dataset, IMAGE_SIDE, N_CLASSES
from colanet.errors import DataFormatError
from colanet.spike_encoding import EncodingParams, build_stream
from colanet.snn_core import Network, run


def classify_window(counts) -> Optional[int]:
    """Predicted class for one window of per-class spike counts."""
    counts = np.asarray(counts)
    if counts.sum() == 0:
        return None
    return int(counts.argmax())  # argmax takes the lowest index on ties


@dataclass(frozen=True)
class Prediction:
    image_index: int
    predicted: Optional[int]
    actual: int


@dataclass
class Metrics:
    accuracy: float
    per_class: list[tuple[float, float, float]]  # (precision, recall, f)
    n_test: int


class OutputTally:
    """Per-window spike counts of the output section."""

    def __init__(self, n_images: int, period: int, n_classes: int = N_CLASSES,
                 section: str = "OUT"):
        self.counts = np.zeros((n_images, n_classes), dtype=np.int32)
        self.period = period
        self.section = section

    def on_fire(self, t: int, fired: dict[str, np.ndarray]) -> None:
        idx = fired.get(self.section)
        if idx is not None and len(idx):
            window = t // self.period
            if window < self.counts.shape[0]:
                self.counts[window, idx] += 1

    def predictions(self, labels: np.ndarray) -> list[Prediction]:
        return [
            Prediction(k, classify_window(self.counts[k]), int(labels[k]))
            for k in range(self.counts.shape[0])
        ]


def evaluate(predictions: list[Prediction], n_classes: int = N_CLASSES) -> Metrics:
    """Accuracy plus per-class precision/recall/F over a prediction list."""
    if not predictions:
        raise DataFormatError("cannot evaluate an empty prediction set")
    real = np.zeros(n_classes, dtype=np.int64)
    predicted = np.zeros(n_classes, dtype=np.int64)
    correct = np.zeros(n_classes, dtype=np.int64)
    n_right = 0
    for p in predictions:
        real[p.actual] += 1
        if p.predicted is not None:
            predicted[p.predicted] += 1
            if p.predicted == p.actual:
                correct[p.predicted] += 1
                n_right += 1
    per_class = []
    for c in range(n_classes):
        precision = correct[c] / predicted[c] if predicted[c] > 0 else 0.0
        recall = correct[c] / real[c] if real[c] > 0 else 0.0
        f = 2.0 / (1.0 / precision + 1.0 / recall) if precision * recall > 0 else 0.0
        per_class.append((float(precision), float(recall), float(f)))
    return Metrics(n_right / len(predictions), per_class, len(predictions))


# -- prediction files -------------------------------------------------------


def write_predictions_csv(path, predictions: list[Prediction]) -> None:
    with open(path, "w", encoding="ascii", newline="") as f:
        f.write("image_index,predicted,actual\n")
        for p in predictions:
            predicted = "-" if p.predicted is None else str(p.predicted)
            f.write(f"{p.image_index},{predicted},{p.actual}\n")


def read_predictions_csv(path) -> list[Prediction]:
    out = []
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().strip()
        if header != "image_index,predicted,actual":
            raise DataFormatError(f"{path}: unexpected prediction header {header!r}")
        for line in f:
            line = line.strip()
            if not line:
                continue
            index, predicted, actual = line.split(",")
            out.append(Prediction(
                int(index), None if predicted == "-" else int(predicted), int(actual)
            ))
    return out


# -- learned-weight picture --------------------------------------------------


def weight_grid_image(weights: np.ndarray, class_dim: int = N_CLASSES,
                      side: int = IMAGE_SIDE) -> np.ndarray:
    """RGB tile grid of per-neuron input weights.

    Row j of ``weights`` belongs to microcolumn j // class_dim (grid row)
    and class j % class_dim (grid column). Positive weights fill the red
    channel, negative the blue, both scaled by the global max magnitude.
    """
    n_neurons, n_pixels = weights.shape
    if n_pixels != side * side:
        raise DataFormatError(f"weight rows have {n_pixels} pixels, expected {side * side}")
    if n_neurons % class_dim != 0:
        raise DataFormatError(f"{n_neurons} neurons do not tile into {class_dim} classes")
    m = n_neurons // class_dim
    image = np.zeros((m * side, class_dim * side, 3), dtype=np.uint8)
    peak = np.abs(weights).max()
    if peak == 0:
        return image
    for j in range(n_neurons):
        tile = weights[j].reshape(side, side)
        r0, c0 = (j // class_dim) * side, (j % class_dim) * side
        scaled = np.clip(np.round(np.abs(tile) / peak * 255), 0, 255).astype(np.uint8)
        image[r0:r0 + side, c0:c0 + side, 0] = np.where(tile > 0, scaled, 0)
        image[r0:r0 + side, c0:c0 + side, 2] = np.where(tile < 0, scaled, 0)
    return image


def write_ppm(path, image: np.ndarray) -> None:
    """Binary PPM (P6, maxval 255)."""
    height, width, _ = image.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        f.write(image.tobytes())


def read_ppm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P6" or len(parts) < 4:
        raise DataFormatError(f"{path}: not a P6 PPM file")
    width, height = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8)[: width * height * 3].reshape(height, width, 3)


def write_weight_grid_csv(path, weights: np.ndarray, class_dim: int = N_CLASSES,
                          side: int = IMAGE_SIDE) -> None:
    """CSV `microcolumn,class,pixel_row,pixel_col,weight` (lossless floats)."""
    with open(path, "w", encoding="ascii") as f:
        f.write("microcolumn,class,pixel_row,pixel_col,weight\n")
        for j in range(weights.shape[0]):
            micro, cls = j // class_dim, j % class_dim
            tile = weights[j]
            for p in range(weights.shape[1]):
                f.write(f"{micro},{cls},{p // side},{p % side},{tile[p]!r}\n")


def read_weight_grid_csv(path, class_dim: int = N_CLASSES, side: int = IMAGE_SIDE) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().strip()
        if header != "microcolumn,class,pixel_row,pixel_col,weight":
            raise DataFormatError(f"{path}: unexpected weight-grid header {header!r}")
        reader = csv.reader(f)
        for micro, cls, pr, pc, w in reader:
            rows.append((int(micro), int(cls), int(pr), int(pc), float(w)))
    if not rows:
        return np.zeros((0, side * side))
    n_neurons = (max(r[0] for r in rows) + 1) * class_dim
    weights = np.zeros((n_neurons, side * side))
    for micro, cls, pr, pc, w in rows:
        weights[micro * class_dim + cls, pr * side + pc] = w
    return weights


def export_weight_grid(weights: np.ndarray, ppm_path, csv_path=None,
                       class_dim: int = N_CLASSES, side: int = IMAGE_SIDE) -> None:
    """Write the tile-grid picture (and optionally the raw-weight CSV)."""
    write_ppm(ppm_path, weight_grid_image(weights, class_dim, side))
    if csv_path is not None:
        write_weight_grid_csv(csv_path, weights, class_dim, side)


# -- end-to-end protocol ------------------------------------------------------


@dataclass
class ProtocolResult:
    network: Network
    predictions: list[Prediction]  # every window, training included
    test_predictions: list[Prediction]
    metrics: Metrics  # over the test windows
    tally: OutputTally


def run_protocol(doc, dataset: Dataset, seed: int,
                 params: Optional[EncodingParams] = None,
                 spike_log=None) -> ProtocolResult:
    """Train on the leading records, then test with supervision silenced.

    The dataset's positional split drives everything: label spikes stop and
    plasticity freezes at the train/test boundary, after which the network
    runs purely on pixel input and the readout scores the test windows.
    """
    from colanet.config import build_network  # local import: config builds on this module's peers

    if params is None:
        params = doc.encoding_params()
    network = build_network(doc, seed)
    period = params.period
    train_count = dataset.train_count
    cutoff = period * train_count
    duration = period * len(dataset)

    stream = build_stream(dataset, params, label_cutoff_ms=cutoff)
    tally = OutputTally(len(dataset), period)
    run(network, stream, 0, cutoff, plasticity_enabled=True,
        on_fire=tally.on_fire, spike_log=spike_log)
    run(network, stream, cutoff, duration, plasticity_enabled=False,
        on_fire=tally.on_fire, spike_log=spike_log)

    predictions = tally.predictions(dataset.labels)
    test_predictions = predictions[train_count:]
    metrics = evaluate(test_predictions) if test_predictions else Metrics(0.0, [], 0)
    return ProtocolResult(network, predictions, test_predictions, metrics, tally)
