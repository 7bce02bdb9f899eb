"""Columnar/layered spiking neural network (CoLaNET) for image classification.

The package covers the full pipeline: dataset handling in flat-binary and
IDX form (`data_io`), rate coding of images and class labels into spike
trains (`spike_encoding`), the discrete-time simulation engine with
winner-take-all and gating semantics (`snn_core`), the anti-Hebbian /
reward-compensated plasticity rule (`plasticity`), the network
configuration dialect (`config`), readout and metrics (`evaluation`),
genetic hyperparameter search (`ga`), and a command-line front end
(`cli`).
"""

from colanet.errors import ColanetError, ConfigError, DataFormatError, SimulationError

__all__ = [
    "ColanetError",
    "ConfigError",
    "DataFormatError",
    "SimulationError",
]

__version__ = "0.1.0"
