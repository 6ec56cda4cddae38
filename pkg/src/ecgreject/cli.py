"""Command line interface.

Subcommands:

* `gen-data`: write a synthetic dataset.
* `train`: train a network on the training split of a dataset.
* `evaluate`: Monte Carlo dropout inference on the test split, with the
    uncertainty table, confusion matrix, statistics and figures.
* `sweep`: Macro-F1 of the accepted records over a grid of thresholds.
* `rerun`: repeat a command from the manifest it wrote.

Every command writes a manifest holding its arguments, configuration, seed
and the SHA-256 of its inputs and outputs. Exit codes: 0 on success, 2 on a
usage or configuration error, 3 on a numerical failure, 4 on an I/O or
container error.
"""

__docformat__ = 'google'

import ecgreject
from ecgreject.data import (Dataset, SynthConfig, condition_batch, file_hash,
                            format_listing, format_truth, generate,
                            listing_path, load_dataset, load_truth,
                            save_dataset, truth_path)
from ecgreject.metrics import class_names, confusion, macro_f1_of
from ecgreject.network import (NetworkConfig, build_network, load_checkpoint,
                               save_checkpoint)
from ecgreject.rejection import (parse_grid, split_confusion, sweep,
                                 threshold_for_accept_ratio)
from ecgreject.report import (confusion_heatmap, confusion_table,
                              case_study_table, csv, histogram, markdown,
                              scatter, sweep_chart, sweep_table, to_text,
                              uncertainty_report_table)
from ecgreject.stats import uncertainty_report
from ecgreject.training import (SplitSpec, TrainConfig, format_history_csv,
                                split_indices, train)
from ecgreject.typing import (ConfigError, ContainerError, NumericError,
                              UncertaintyKind)
from ecgreject.uncertainty import (UncertaintyRow, case_studies, decompose,
                                   encode_mc_probabilities,
                                   format_uncertainty_csv, mc_sample,
                                   parse_uncertainty_csv)

import argparse
import functools
import json
import logging
import os
import sys

from typing import Any, Callable, Mapping, Sequence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

MANIFEST_NAME = 'manifest.json'
UNCERTAINTY_CSV = 'uncertainty.csv'


def manifest_path(output: str) -> str:
    """Manifest location for a file output."""
    return output + '.manifest.json'


class _Run:
    """Collects what a command read and wrote, then writes its manifest."""

    def __init__(self, command: str, argv: Sequence[str]):
        self.command = command
        self.argv = list(argv)
        self.config: dict[str, Any] = {}
        self.seed: int | None = None
        self.inputs: dict[str, str] = {}
        self.artifacts: dict[str, str] = {}

    def read(self, path: str) -> None:
        self.inputs[path] = file_hash(path)

    def write_text(self, path: str, text: str) -> None:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        self.wrote(path)

    def write_bytes(self, path: str, data: bytes) -> None:
        with open(path, 'wb') as f:
            f.write(data)
        self.wrote(path)

    def wrote(self, path: str) -> None:
        self.artifacts[path] = file_hash(path)
        logger.info('Wrote %s', path)

    def manifest(self) -> dict[str, Any]:
        return {
            'command': self.command,
            'argv': self.argv,
            'config': self.config,
            'seed': self.seed,
            'inputs': self.inputs,
            'artifacts': self.artifacts,
            'version': ecgreject.__version__,
        }

    def finish(self, path: str) -> None:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            json.dump(self.manifest(), f, indent=2, sort_keys=True)
            f.write('\n')
        logger.info('Wrote %s', path)


def _overrides(args: argparse.Namespace,
               names: Mapping[str, str]) -> dict[str, Any]:
    """Config fields from the flags that were given, keyed by field name."""
    return {
        field: getattr(args, dest)
        for dest, field in names.items()
        if getattr(args, dest) is not None
    }


# gen-data

_SYNTH_FLAGS = {
    'records_per_class': 'records_per_class',
    'hard_fraction': 'hard_fraction',
    'flip_fraction': 'label_flip_fraction',
    'mixed_fraction': 'mixed_fraction',
    'duration': 'duration_range',
    'seed': 'seed',
}


def cmd_gen_data(args: argparse.Namespace, run: _Run) -> None:
    if args.config:
        run.read(args.config)
        config = SynthConfig.from_json(args.config)
    else:
        config = SynthConfig()
    config = config.replace(**_overrides(args, _SYNTH_FLAGS))
    run.config = config.to_dict()
    run.seed = config.seed

    result = generate(config)
    save_dataset(result.dataset, args.out)
    run.wrote(args.out)
    run.write_text(listing_path(args.out), format_listing(result.dataset))
    run.write_text(truth_path(args.out), format_truth(result.truth))
    run.finish(manifest_path(args.out))

    names = class_names(config.num_classes)
    counts = result.dataset.class_histogram(config.num_classes)
    print(f'{len(result.dataset)} records')
    for name, count in zip(names, counts):
        print(f'{name:>6} {count}')


# train

_TRAIN_FLAGS = {
    'batch_size': 'batch_size',
    'lr': 'lr_init',
    'plateau_factor': 'plateau_factor',
    'patience': 'plateau_patience_steps',
    'weight_decay': 'weight_decay',
    'max_steps': 'max_steps',
    'eval_every': 'eval_every',
    'seed': 'seed',
}


# Both names select the full-size network.
FULL_SCALES = ('paper', 'full')


def _network_config(scale: str) -> NetworkConfig:
    return NetworkConfig.full() if scale in FULL_SCALES else NetworkConfig.desk()


def _check_labels(dataset: Dataset, num_classes: int) -> None:
    labels = dataset.labels()
    if labels.size and int(labels.max()) >= num_classes:
        raise ConfigError(
            f'Dataset has label {int(labels.max())} but the network has only {num_classes} classes.',
            field='num_classes')


def cmd_train(args: argparse.Namespace, run: _Run) -> None:
    run.read(args.data)
    dataset = load_dataset(args.data)
    network_config = _network_config(args.net_scale)
    _check_labels(dataset, network_config.num_classes)
    base = TrainConfig.full() if args.net_scale in FULL_SCALES else TrainConfig()
    config = base.replace(**_overrides(args, _TRAIN_FLAGS))
    run.config = {
        'network': network_config.to_dict(),
        'train': config.to_dict(),
        'split': [args.split_train, args.split_val, args.split_test],
    }
    run.seed = config.seed

    spec = SplitSpec(args.split_train, args.split_val, args.split_test)
    split = split_indices(len(dataset), spec, config.seed)
    logger.info('Split %d records into %d train, %d val, %d test.',
                len(dataset), len(split.train), len(split.val),
                len(split.test))
    network = build_network(network_config, config.seed)
    result = train(network, dataset.subset(split.train),
                   dataset.subset(split.val), config)

    metadata = {
        'dataset_hash': run.inputs[args.data],
        'split': [spec.train, spec.val, spec.test],
        'split_seed': config.seed,
        'train': config.to_dict(),
        'best_step': result.best_step,
        'best_val_macro_f1': result.best_val_macro_f1,
    }
    save_checkpoint(result.network, args.out, metadata)
    run.wrote(args.out)
    run.write_text(args.out + '.history.csv',
                   format_history_csv(result.history))
    run.finish(manifest_path(args.out))
    print(f'best val Macro-F1 {result.best_val_macro_f1:.4f} '
          f'at step {result.best_step}')


# evaluate


def _test_split(dataset: Dataset, metadata: Mapping[str, Any]) -> Dataset:
    spec = SplitSpec(*metadata.get('split', (0.8, 0.1, 0.1)))
    return dataset.subset(
        split_indices(len(dataset), spec, int(metadata.get('split_seed',
                                                            0))).test)


def cmd_evaluate(args: argparse.Namespace, run: _Run) -> None:
    run.read(args.data)
    run.read(args.ckpt)
    checkpoint = load_checkpoint(args.ckpt)
    expected = checkpoint.metadata.get('dataset_hash')
    if expected is not None and expected != run.inputs[args.data]:
        raise ValueError(
            f'{args.data} is not the dataset {args.ckpt} was trained on.\n'
            'Tip: The test split is only meaningful on the training dataset.')
    network = checkpoint.restore()
    config = checkpoint.config
    k = config.num_classes
    dataset = load_dataset(args.data)
    _check_labels(dataset, k)
    test_set = _test_split(dataset, checkpoint.metadata)
    kind = UncertaintyKind(args.uncertainty)
    run.config = {
        'network': config.to_dict(),
        'n_mc': args.n_mc,
        'uncertainty': kind.value,
        'num_classes': k,
        'batch_size': args.batch_size,
    }
    run.seed = args.seed
    os.makedirs(args.out, exist_ok=True)
    out = functools.partial(os.path.join, args.out)

    batch = condition_batch(test_set, config.input_length)
    predictions = mc_sample(network,
                            batch,
                            args.n_mc,
                            args.seed,
                            batch_size=args.batch_size)
    estimates = [decompose(mc) for mc in predictions]
    true = test_set.labels()
    pred = [mc.predicted_class() for mc in predictions]
    rows = [
        UncertaintyRow(rid, int(t), p, e)
        for rid, t, p, e in zip(test_set.ids(), true, pred, estimates)
    ]
    run.write_text(out(UNCERTAINTY_CSV), format_uncertainty_csv(rows))
    if args.dump_probs:
        run.write_bytes(out('probs.ecgp'),
                        encode_mc_probabilities(test_set.ids(), predictions))

    names = class_names(k)
    cm = confusion(true, pred, k, names)
    run.write_text(out('confusion.csv'), csv(confusion_table(cm)))
    run.write_text(out('confusion_normalized.csv'),
                   csv(confusion_table(cm, normalized=True)))
    run.write_text(
        out('confusion.svg'),
        to_text(
            confusion_heatmap(cm,
                              f'No rejection, Macro-F1 {macro_f1_of(cm):.4f}')))

    report = uncertainty_report_table(uncertainty_report(estimates, true, pred,
                                                         k))
    run.write_text(out('stats.csv'), csv(report))
    run.write_text(out('stats.md'), markdown(report))

    data_u = [e.data for e in estimates]
    model_u = [e.model for e in estimates]
    run.write_text(
        out('uncertainty_hist.svg'),
        to_text(
            histogram({
                'model': model_u,
                'data': data_u
            }, 'Uncertainty distributions', 'uncertainty (nats)')))
    for kind_ in UncertaintyKind:
        values = [e.of(kind_) for e in estimates]
        run.write_text(
            out(f'hist_{kind_.value}_correct_wrong.svg'),
            to_text(
                histogram(
                    {
                        'correct': [
                            v for v, r in zip(values, rows) if r.correct
                        ],
                        'wrong': [
                            v for v, r in zip(values, rows) if not r.correct
                        ],
                    }, f'{kind_.value.capitalize()} uncertainty',
                    'uncertainty (nats)')))
    run.write_text(
        out('scatter.svg'),
        to_text(
            scatter(model_u, data_u, 'Data against model uncertainty',
                    'model uncertainty', 'data uncertainty')))

    cases = case_studies(estimates, true, pred, args.case_count, kind)
    run.write_text(
        out('case_studies.csv'),
        csv(
            case_study_table(rows, cases.most_uncertain,
                             cases.least_uncertain, names,
                             load_truth(args.data))))
    run.finish(out(MANIFEST_NAME))
    print(f'test records {len(test_set)}, Macro-F1 {macro_f1_of(cm):.4f}')


# sweep


def cmd_sweep(args: argparse.Namespace, run: _Run) -> None:
    source = os.path.join(args.eval_dir, UNCERTAINTY_CSV)
    run.read(source)
    with open(source, 'r', encoding='utf-8', newline='') as f:
        rows = parse_uncertainty_csv(f.read())
    k = args.num_classes
    if k is None:
        k = _evaluated_class_count(args.eval_dir)
    kind = UncertaintyKind(args.uncertainty)
    grid = parse_grid(args.grid)
    run.config = {
        'grid': list(grid),
        'uncertainty': kind.value,
        'num_classes': k,
        'threshold': args.threshold,
        'accept_ratio': args.accept_ratio,
    }
    os.makedirs(args.out, exist_ok=True)
    out = functools.partial(os.path.join, args.out)

    true = [r.true_label for r in rows]
    pred = [r.pred_label for r in rows]
    u = [r.estimate.of(kind) for r in rows]
    points = sweep(true, pred, u, grid, num_classes=k)
    names = class_names(k)
    run.write_text(out('sweep.csv'), csv(sweep_table(points, names)))
    run.write_text(
        out('sweep.svg'),
        to_text(
            sweep_chart(points,
                        f'Rejection on {kind.value} uncertainty')))

    if args.threshold is not None:
        threshold = args.threshold
    elif args.accept_ratio is not None:
        threshold = threshold_for_accept_ratio(u, args.accept_ratio)
    else:
        threshold = grid.thresholds()[0]
    pair = split_confusion(true, pred, u, threshold, num_classes=k)
    for name, cm in (('accepted', pair.accepted), ('rejected',
                                                   pair.rejected)):
        run.write_text(out(f'confusion_{name}.csv'), csv(confusion_table(cm)))
        run.write_text(
            out(f'confusion_{name}.svg'),
            to_text(
                confusion_heatmap(
                    cm, f'{name.capitalize()} at threshold {threshold:.3f}, '
                    f'{cm.total} records')))
    run.finish(out(MANIFEST_NAME))
    print(f'threshold {threshold:.3f}: accepted {pair.accepted.total}, '
          f'diagonal mass {pair.accepted.diagonal_mass():.4f} accepted vs '
          f'{pair.rejected.diagonal_mass():.4f} rejected')


def _evaluated_class_count(eval_dir: str) -> int:
    path = os.path.join(eval_dir, MANIFEST_NAME)
    if not os.path.exists(path):
        return 9
    with open(path, 'r', encoding='utf-8') as f:
        return int(json.load(f).get('config', {}).get('num_classes', 9))


# rerun


def cmd_rerun(args: argparse.Namespace, run: _Run) -> None:
    with open(args.manifest, 'r', encoding='utf-8') as f:
        try:
            manifest = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f'{args.manifest}: {e}') from e
    if manifest.get('command') in (None, 'rerun'):
        raise ValueError(f'{args.manifest} does not record a command.')
    for path, digest in manifest.get('inputs', {}).items():
        if file_hash(path) != digest:
            logger.warning('Input %s changed since the recorded run.', path)
    if manifest.get('version') != ecgreject.__version__:
        logger.warning('Manifest was written by version %s.',
                       manifest.get('version'))
    _dispatch(manifest['argv'])
    changed = [
        path for path, digest in manifest.get('artifacts', {}).items()
        if file_hash(path) != digest
    ]
    for path in changed:
        logger.warning('Output %s differs from the recorded run.', path)
    if changed and args.check:
        raise ValueError(
            f'{len(changed)} outputs differ from {args.manifest}.')


# Parser.


def _add_gen_data(subparsers) -> None:
    p = subparsers.add_parser('gen-data', help='Write a synthetic dataset.')
    p.add_argument('--config', help='JSON file of SynthConfig fields.')
    p.add_argument('--out', required=True, help='Dataset file to write.')
    p.add_argument('--seed', type=int)
    p.add_argument('--records-per-class', type=int)
    p.add_argument('--hard-fraction', type=float)
    p.add_argument('--flip-fraction', type=float)
    p.add_argument('--mixed-fraction', type=float)
    p.add_argument('--duration',
                   type=float,
                   nargs=2,
                   metavar=('MIN', 'MAX'),
                   help='Range of record durations in seconds.')
    p.set_defaults(handler=cmd_gen_data)


def _add_train(subparsers) -> None:
    p = subparsers.add_parser('train', help='Train a network.')
    p.add_argument('--data', required=True, help='Dataset file.')
    p.add_argument('--net-scale', choices=('desk', *FULL_SCALES),
                   default='desk')
    p.add_argument('--out', required=True, help='Checkpoint file to write.')
    p.add_argument('--seed', type=int, help='Seeds the split, init and training.')
    p.add_argument('--batch-size', type=int)
    p.add_argument('--lr', type=float)
    p.add_argument('--plateau-factor', type=float)
    p.add_argument('--patience', type=int, help='Plateau patience in steps.')
    p.add_argument('--weight-decay', type=float)
    p.add_argument('--max-steps', type=int)
    p.add_argument('--eval-every', type=int)
    p.add_argument('--split-train', type=float, default=0.8)
    p.add_argument('--split-val', type=float, default=0.1)
    p.add_argument('--split-test', type=float, default=0.1)
    p.set_defaults(handler=cmd_train)


def _add_evaluate(subparsers) -> None:
    p = subparsers.add_parser(
        'evaluate', help='Monte Carlo dropout evaluation of the test split.')
    p.add_argument('--data', required=True, help='Dataset file.')
    p.add_argument('--ckpt', required=True, help='Checkpoint file.')
    p.add_argument('--n-mc', type=int, default=50, help='Number of passes.')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', required=True, help='Output directory.')
    p.add_argument('--batch-size', type=int, default=32)
    p.add_argument('--dump-probs',
                   action='store_true',
                   help='Also write every sampled probability row.')
    p.add_argument('--uncertainty',
                   choices=[k.value for k in UncertaintyKind],
                   default=UncertaintyKind.Data.value,
                   help='Uncertainty that ranks the case studies.')
    p.add_argument('--case-count', type=int, default=30)
    p.set_defaults(handler=cmd_evaluate)


def _add_sweep(subparsers) -> None:
    p = subparsers.add_parser('sweep', help='Sweep rejection thresholds.')
    p.add_argument('--eval-dir', required=True)
    p.add_argument('--grid', default='0.4:1.5:0.05', help='start:stop:step')
    choice = p.add_mutually_exclusive_group()
    choice.add_argument('--threshold',
                        type=float,
                        help='Threshold of the accepted/rejected pair.')
    choice.add_argument(
        '--accept-ratio',
        type=float,
        help='Choose the threshold that accepts this fraction of records.')
    p.add_argument('--uncertainty',
                   choices=[k.value for k in UncertaintyKind],
                   default=UncertaintyKind.Total.value)
    p.add_argument('--num-classes', type=int)
    p.add_argument('--out', required=True, help='Output directory.')
    p.set_defaults(handler=cmd_sweep)


def _add_rerun(subparsers) -> None:
    p = subparsers.add_parser('rerun', help='Repeat a recorded command.')
    p.add_argument('manifest')
    p.add_argument('--check',
                   action='store_true',
                   help='Fail if any output differs from the recorded run.')
    p.set_defaults(handler=cmd_rerun)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='ecgreject',
        description='ECG classification with uncertainty-based rejection.')
    parser.add_argument('--version',
                        action='version',
                        version=f'%(prog)s {ecgreject.__version__}')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true')
    verbosity.add_argument('-q', '--quiet', action='store_true')
    subparsers = parser.add_subparsers(dest='command', required=True)
    _add_gen_data(subparsers)
    _add_train(subparsers)
    _add_evaluate(subparsers)
    _add_sweep(subparsers)
    _add_rerun(subparsers)
    return parser


def _command_argv(argv: Sequence[str]) -> list[str]:
    return [a for a in argv if a not in ('-v', '--verbose', '-q', '--quiet')]


def _dispatch(argv: Sequence[str]) -> None:
    args = build_parser().parse_args(argv)
    handler: Callable[[argparse.Namespace, _Run], None] = args.handler
    handler(args, _Run(args.command, _command_argv(argv)))


def main(argv: Sequence[str] | None = None) -> int:
    """Runs the command line and returns the exit code."""
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    if args.quiet:
        level = logging.WARNING
    elif args.verbose:
        level = logging.DEBUG
    else:
        level = logging.INFO
    logging.basicConfig(level=level,
                        format='%(levelname)s %(name)s: %(message)s')

    try:
        args.handler(args, _Run(args.command, _command_argv(argv)))
    except NumericError as e:
        logger.error('%s', e)
        return EXIT_NUMERIC
    except (OSError, ContainerError) as e:
        logger.error('%s', e)
        return EXIT_IO
    except ValueError as e:
        logger.error('%s', e)
        return EXIT_USAGE
    return EXIT_OK
