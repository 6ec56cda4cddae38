"""Cross-entropy training with Adam and a plateau schedule."""

__docformat__ = 'google'

from ecgreject.training.config import TrainConfig, SplitSpec
from ecgreject.training.optim import (AdamState, PlateauScheduler, adam_step,
                                      reduce_on_plateau)
from ecgreject.training.split import SplitIndices, split_indices, split_dataset
from ecgreject.training.trainer import (HistoryRow, TrainResult, train,
                                        predict_labels, format_history_csv)

__all__ = [
    'TrainConfig', 'SplitSpec', 'AdamState', 'PlateauScheduler', 'adam_step',
    'reduce_on_plateau', 'SplitIndices', 'split_indices', 'split_dataset',
    'HistoryRow', 'TrainResult', 'train', 'predict_labels',
    'format_history_csv'
]
