import ecgreject.cli as cli
from ecgreject.cli import (EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main,
                           manifest_path)
from ecgreject.data import file_hash, load_dataset
from ecgreject.network import NetworkConfig, load_checkpoint
from ecgreject.typing import NumericError, UncertaintyKind
from ecgreject.uncertainty import (UncertaintyEstimate, UncertaintyRow,
                                   format_uncertainty_csv)

import json
import os

import pytest


def read_json(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def test_usage_errors(capsys):
    assert main([]) == EXIT_USAGE
    assert main(['gen-data']) == EXIT_USAGE
    assert main(['evaluate', '--data', 'x']) == EXIT_USAGE
    assert main(['sweep', '--eval-dir', 'e', '--out', 'o', '--threshold',
                 '1', '--accept-ratio', '0.5']) == EXIT_USAGE
    assert main(['-v', '-q', 'rerun', 'm.json']) == EXIT_USAGE


def test_version(capsys):
    assert main(['--version']) == EXIT_OK
    assert '0.1.0' in capsys.readouterr().out


def test_gen_data_default_size(tmp_path, capsys):
    out = str(tmp_path / 'default.ecgd')
    assert main(['-q', 'gen-data', '--out', out]) == EXIT_OK
    assert len(load_dataset(out)) == 90
    printed = capsys.readouterr().out.splitlines()
    assert printed[0] == '90 records'
    assert printed[1].split()[0] == 'Normal'
    assert sum(int(line.split()[1]) for line in printed[1:]) == 90


def test_gen_data_is_deterministic(tmp_path):
    a = str(tmp_path / 'a.ecgd')
    b = str(tmp_path / 'b.ecgd')
    for out in (a, b):
        assert main([
            'gen-data', '--out', out, '--records-per-class', '2', '--seed',
            '4', '--duration', '6', '7'
        ]) == EXIT_OK
    assert file_hash(a) == file_hash(b)
    assert os.path.exists(a + '.records.csv')
    assert os.path.exists(a + '.truth.csv')
    manifest = read_json(manifest_path(a))
    assert manifest['command'] == 'gen-data'
    assert manifest['seed'] == 4
    assert manifest['config']['records_per_class'] == 2
    assert manifest['config']['duration_range'] == [6.0, 7.0]
    assert manifest['artifacts'][a] == file_hash(a)


def test_gen_data_config_file(tmp_path):
    config = tmp_path / 'synth.json'
    config.write_text(json.dumps({'records_per_class': 1, 'seed': 9}))
    out = str(tmp_path / 'c.ecgd')
    assert main(['gen-data', '--config', str(config), '--out', out]) == EXIT_OK
    assert len(load_dataset(out)) == 9
    manifest = read_json(manifest_path(out))
    assert manifest['inputs'] == {str(config): file_hash(config)}

    config.write_text(json.dumps({'records_per_class': -1}))
    assert main(['gen-data', '--config', str(config), '--out',
                 out]) == EXIT_USAGE


def test_io_errors(tmp_path):
    missing = str(tmp_path / 'missing.ecgd')
    assert main(['train', '--data', missing, '--out',
                 str(tmp_path / 'n.ecgm')]) == EXIT_IO
    corrupt = tmp_path / 'corrupt.ecgd'
    corrupt.write_bytes(b'ECGD\x01\x00\x00\x00\x05')
    assert main(['train', '--data', str(corrupt), '--out',
                 str(tmp_path / 'n.ecgm')]) == EXIT_IO


def test_numeric_error_exit_code(tmp_path, monkeypatch):

    def broken(config):
        raise NumericError('Loss is nan', step=3)

    monkeypatch.setattr(cli, 'generate', broken)
    assert main(['gen-data', '--out', str(tmp_path / 'x.ecgd')]) == EXIT_NUMERIC


def write_eval_dir(path, num_classes=2):
    os.makedirs(path)
    rows = []
    for i in range(20):
        true = i % num_classes
        correct = i % 4 != 0
        pred = true if correct else (true + 1) % num_classes
        data = 0.1 + 0.02 * i + (0.0 if correct else 0.5)
        rows.append(
            UncertaintyRow(f'r{i}', true, pred,
                           UncertaintyEstimate(data + 0.05, data, 0.05,
                                               0.05)))
    with open(os.path.join(path, 'uncertainty.csv'), 'w',
              encoding='utf-8') as f:
        f.write(format_uncertainty_csv(rows))
    with open(os.path.join(path, 'manifest.json'), 'w',
              encoding='utf-8') as f:
        json.dump({'config': {'num_classes': num_classes}}, f)


def test_sweep(tmp_path, capsys):
    eval_dir = str(tmp_path / 'eval')
    write_eval_dir(eval_dir)
    out = str(tmp_path / 'sweep')
    assert main(['sweep', '--eval-dir', eval_dir, '--out', out,
                 '--accept-ratio', '0.5']) == EXIT_OK
    for name in ('sweep.csv', 'sweep.svg', 'confusion_accepted.csv',
                 'confusion_accepted.svg', 'confusion_rejected.csv',
                 'confusion_rejected.svg', 'manifest.json'):
        assert os.path.exists(os.path.join(out, name)), name
    with open(os.path.join(out, 'sweep.csv'), encoding='utf-8') as f:
        lines = f.read().splitlines()
    assert len(lines) == 24
    assert lines[0].split(',')[-2:] == ['precision_class0', 'precision_class1']
    manifest = read_json(os.path.join(out, 'manifest.json'))
    assert manifest['config']['num_classes'] == 2
    assert manifest['config']['uncertainty'] == UncertaintyKind.Total.value
    printed = capsys.readouterr().out
    assert 'accepted 10' in printed
    assert 'diagonal mass 1.0000 accepted' in printed


def test_sweep_grid_error(tmp_path):
    eval_dir = str(tmp_path / 'eval')
    write_eval_dir(eval_dir)
    assert main(['sweep', '--eval-dir', eval_dir, '--out',
                 str(tmp_path / 's'), '--grid', '1:0:0.1']) == EXIT_USAGE


def test_rerun(tmp_path):
    out = str(tmp_path / 'd.ecgd')
    assert main(['gen-data', '--out', out, '--records-per-class',
                 '1']) == EXIT_OK
    manifest = manifest_path(out)
    assert main(['rerun', manifest, '--check']) == EXIT_OK

    recorded = read_json(manifest)
    recorded['artifacts'][out] = '0' * 64
    with open(manifest, 'w', encoding='utf-8') as f:
        json.dump(recorded, f)
    assert main(['rerun', manifest]) == EXIT_OK
    with open(manifest, 'w', encoding='utf-8') as f:
        json.dump(recorded, f)
    assert main(['rerun', manifest, '--check']) == EXIT_USAGE


def test_rerun_bad_manifest(tmp_path):
    path = tmp_path / 'm.json'
    path.write_text('{')
    assert main(['rerun', str(path)]) == EXIT_USAGE
    path.write_text('{}')
    assert main(['rerun', str(path)]) == EXIT_USAGE


def test_pipeline(tmp_path, capsys):
    data = str(tmp_path / 'data.ecgd')
    ckpt = str(tmp_path / 'net.ecgm')
    eval_dir = str(tmp_path / 'eval')
    sweep_dir = str(tmp_path / 'sweep')
    assert main(['gen-data', '--out', data, '--records-per-class', '4',
                 '--duration', '6', '6']) == EXIT_OK
    assert main([
        'train', '--data', data, '--out', ckpt, '--max-steps', '2',
        '--eval-every', '1', '--batch-size', '4'
    ]) == EXIT_OK
    assert os.path.exists(ckpt + '.history.csv')
    assert read_json(manifest_path(ckpt))['inputs'] == {data: file_hash(data)}

    assert main([
        'evaluate', '--data', data, '--ckpt', ckpt, '--out', eval_dir,
        '--n-mc', '3', '--dump-probs'
    ]) == EXIT_OK
    for name in ('uncertainty.csv', 'probs.ecgp', 'confusion.csv',
                 'confusion_normalized.csv', 'confusion.svg', 'stats.csv',
                 'stats.md', 'uncertainty_hist.svg',
                 'hist_total_correct_wrong.svg',
                 'hist_data_correct_wrong.svg',
                 'hist_model_correct_wrong.svg', 'scatter.svg',
                 'case_studies.csv', 'manifest.json'):
        assert os.path.exists(os.path.join(eval_dir, name)), name
    with open(os.path.join(eval_dir, 'uncertainty.csv'),
              encoding='utf-8') as f:
        # 36 records leave 3 for testing.
        assert len(f.read().splitlines()) == 4

    assert main(['rerun', os.path.join(eval_dir, 'manifest.json'),
                 '--check']) == EXIT_OK
    assert main(['sweep', '--eval-dir', eval_dir, '--out',
                 sweep_dir]) == EXIT_OK
    assert read_json(os.path.join(sweep_dir,
                                  'manifest.json'))['config']['num_classes'] == 9


def test_evaluate_rejects_other_dataset(tmp_path):
    data = str(tmp_path / 'data.ecgd')
    other = str(tmp_path / 'other.ecgd')
    ckpt = str(tmp_path / 'net.ecgm')
    assert main(['gen-data', '--out', data, '--records-per-class', '2',
                 '--duration', '6', '6']) == EXIT_OK
    assert main(['gen-data', '--out', other, '--records-per-class', '2',
                 '--duration', '6', '6', '--seed', '1']) == EXIT_OK
    assert main([
        'train', '--data', data, '--out', ckpt, '--max-steps', '1',
        '--batch-size', '2'
    ]) == EXIT_OK
    assert main([
        'evaluate', '--data', other, '--ckpt', ckpt, '--out',
        str(tmp_path / 'eval'), '--n-mc', '2'
    ]) == EXIT_USAGE


@pytest.mark.parametrize('scale', ['paper', 'full'])
def test_train_full_scale(tmp_path, monkeypatch, scale):
    # A small stand-in keeps the full-scale path fast.
    small = NetworkConfig.desk().replace(input_length=256)
    monkeypatch.setattr(NetworkConfig, 'full', classmethod(lambda cls: small))
    data = str(tmp_path / 'data.ecgd')
    ckpt = str(tmp_path / 'net.ecgm')
    assert main(['-q', 'gen-data', '--out', data, '--records-per-class', '2',
                 '--duration', '6', '6']) == EXIT_OK
    assert main([
        '-q', 'train', '--data', data, '--net-scale', scale, '--out', ckpt,
        '--max-steps', '1'
    ]) == EXIT_OK
    assert load_checkpoint(ckpt).config == small
    config = read_json(manifest_path(ckpt))['config']
    assert config['train']['batch_size'] == 256
    assert config['train']['plateau_patience_steps'] == 6000


def test_unknown_net_scale(tmp_path):
    assert main(['train', '--data', str(tmp_path / 'd.ecgd'), '--net-scale',
                 'huge', '--out', str(tmp_path / 'n.ecgm')]) == EXIT_USAGE
