__docformat__ = 'google'

from ecgreject.autodiff import ComputationTape, Tensor, cross_entropy_loss
from ecgreject.data import Dataset, condition_batch
from ecgreject.metrics import macro_f1
from ecgreject.network import Network, iter_batches
from ecgreject.training.config import TrainConfig
from ecgreject.training.optim import AdamState, PlateauScheduler, adam_step
from ecgreject.typing import CropMode, ModelMode, NumericError, derive_rng

import csv
from dataclasses import dataclass
import io
import logging
import math

import numpy

from typing import Iterable, Iterator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HistoryRow:
    step: int
    loss: float
    lr: float
    """Learning rate used for this step."""
    val_macro_f1: float | None
    """Set on evaluation steps."""


@dataclass(frozen=True)
class TrainResult:
    network: Network
    """The trained network, holding the weights of the best evaluation."""
    history: tuple[HistoryRow, ...]
    best_step: int
    best_val_macro_f1: float


def predict_labels(network: Network,
                   dataset: Dataset,
                   batch_size: int = 64) -> numpy.ndarray:
    """Deterministic predictions on center-cropped records."""
    length = network.config.input_length
    result = []
    for part in iter_batches(len(dataset), batch_size):
        batch = condition_batch(dataset[part], length)
        logits = network.forward(Tensor(batch), ModelMode.EvalDeterministic)
        if not logits.is_finite():
            raise NumericError('Network produced non-finite logits.')
        result.append(numpy.argmax(logits.values, axis=1))
    return numpy.concatenate(result) if result else numpy.zeros(
        0, dtype=numpy.int64)


def _batches(count: int, batch_size: int,
             rng: numpy.random.Generator) -> Iterator[numpy.ndarray]:
    """Shuffled batches forever, reshuffling each epoch."""
    batch_size = min(batch_size, count)
    while True:
        order = rng.permutation(count)
        for start in range(0, count - batch_size + 1, batch_size):
            yield order[start:start + batch_size]


def train(network: Network, train_set: Dataset, val_set: Dataset,
          config: TrainConfig) -> TrainResult:
    """Trains with cross-entropy and Adam, keeping the best validated weights.

    Validation Macro-F1 is computed every `eval_every` steps and after the
    last step. The learning rate follows `PlateauScheduler` over those
    evaluations. On return `network` holds the weights of the evaluation
    with the highest validation Macro-F1 (the earliest, on ties).

    The run depends only on the inputs and `config.seed`.

    Raises:
        NumericError: If the loss or a gradient becomes NaN or infinite,
            naming the step.
        ValueError: If either set is empty.
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError('Training needs non-empty training and validation sets.')
    k = network.config.num_classes
    length = network.config.input_length
    batch_rng = derive_rng(config.seed, 'batches')
    crop_rng = derive_rng(config.seed, 'crop')
    dropout_rng = derive_rng(config.seed, 'dropout')
    labels = train_set.labels()
    val_labels = val_set.labels()
    params = network.named_parameters
    no_decay = network.no_decay

    scheduler = PlateauScheduler(config.lr_init, config.plateau_factor,
                                 config.plateau_patience_steps)
    state = AdamState()
    history: list[HistoryRow] = []
    best_f1 = -math.inf
    best_step = 0
    best_state = network.state()

    batches = _batches(len(train_set), config.batch_size, batch_rng)
    for step in range(1, config.max_steps + 1):
        indices = next(batches)
        batch = condition_batch(train_set.subset(indices), length,
                                CropMode.TrainRandomCrop, crop_rng)
        network.zero_grad()
        with ComputationTape() as tape:
            logits = network.forward(Tensor(batch), ModelMode.Train,
                                     dropout_rng)
            loss = cross_entropy_loss(logits, labels[indices])
        loss_value = loss.item()
        if not math.isfinite(loss_value):
            raise NumericError(f'Training loss is {loss_value}', step=step)
        tape.backward(loss)
        for name, p in params.items():
            if p.grad is not None and not numpy.isfinite(p.grad).all():
                raise NumericError(f'Gradient of {name} is not finite',
                                   step=step)
        lr = scheduler.lr
        adam_step(params, None, state, config, lr=lr, no_decay=no_decay)

        val_f1 = None
        if step % config.eval_every == 0 or step == config.max_steps:
            val_f1 = macro_f1(val_labels, predict_labels(network, val_set), k)
            if val_f1 > best_f1:
                best_f1 = val_f1
                best_step = step
                best_state = network.state()
            new_lr = scheduler.update(step, val_f1)
            logger.info('step %d: loss %.4f, lr %.3g, val Macro-F1 %.4f',
                        step, loss_value, lr, val_f1)
            if new_lr != lr:
                logger.info('step %d: reducing learning rate to %.3g', step,
                            new_lr)
        history.append(HistoryRow(step, loss_value, lr, val_f1))

    network.load_state(best_state)
    logger.info('Best val Macro-F1 %.4f at step %d.', best_f1, best_step)
    return TrainResult(network, tuple(history), best_step, best_f1)


def format_history_csv(history: Iterable[HistoryRow]) -> str:
    with io.StringIO() as out:
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(['step', 'loss', 'lr', 'val_macro_f1'])
        for row in history:
            writer.writerow([
                row.step,
                repr(row.loss),
                repr(row.lr), '' if row.val_macro_f1 is None else repr(
                    row.val_macro_f1)
            ])
        return out.getvalue()
