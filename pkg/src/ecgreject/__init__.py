"""ECG arrhythmia classification with Monte Carlo dropout uncertainty and rejection.

A residual 1-D convolutional network is trained from scratch on 12-lead
records, Monte Carlo dropout splits the predictive entropy of each record into
data and model uncertainty, and predictions whose uncertainty exceeds a
threshold are rejected for human review.

General conventions:

* Configuration objects are frozen dataclasses. Anything that looks like it
    mutates one actually returns a separate instance with the change.
* All randomness is derived from explicit integer seeds; the same seed gives
    bit-identical results.
* Uncertainties are in nats. Over `K` classes they lie in `[0, ln K]`.
"""

__docformat__ = 'google'

__version__ = '0.1.0'

from ecgreject.typing import (NormMode, DropoutMode, ModelMode, CropMode,
                              Alternative, UncertaintyKind, ShapeError,
                              ConfigError, ContainerError, NumericError,
                              derive_rng)

from ecgreject.network import (NetworkConfig, Network, build_network,
                               save_checkpoint, load_checkpoint)
from ecgreject.training import TrainConfig, SplitSpec, train, split_indices
from ecgreject.data import (EcgRecord, Dataset, SynthConfig, generate,
                            save_dataset, load_dataset)
from ecgreject.uncertainty import (McPrediction, UncertaintyEstimate,
                                   mc_sample, decompose)
from ecgreject.rejection import (Accepted, Rejected, decide, Grid, sweep,
                                 SweepPoint)
from ecgreject.metrics import ConfusionMatrix, confusion, macro_f1
from ecgreject.stats import welch_t, pearson, uncertainty_report

__all__ = [
    'NormMode', 'DropoutMode', 'ModelMode', 'CropMode', 'Alternative',
    'UncertaintyKind', 'ShapeError', 'ConfigError', 'ContainerError',
    'NumericError', 'derive_rng', 'NetworkConfig', 'Network', 'build_network',
    'save_checkpoint', 'load_checkpoint', 'TrainConfig', 'SplitSpec', 'train',
    'split_indices', 'EcgRecord', 'Dataset', 'SynthConfig', 'generate',
    'save_dataset', 'load_dataset', 'McPrediction', 'UncertaintyEstimate',
    'mc_sample', 'decompose', 'Accepted', 'Rejected', 'decide', 'Grid',
    'sweep', 'SweepPoint', 'ConfusionMatrix', 'confusion', 'macro_f1',
    'welch_t', 'pearson', 'uncertainty_report'
]
