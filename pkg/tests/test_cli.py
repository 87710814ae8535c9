import json
import logging

import numpy as np
import pytest

from config.layouts import get_layout
from main import run_cli
from data.sequence_io import read_sequence, write_sequence
from tests.test_skeleton import make_sequence


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_count_json(capsys):
    assert run_cli(['count', '--config', 'ntu25_default', '--json']) == 0
    doc = _json_out(capsys)
    assert 2.0e6 <= doc['params']['total'] <= 3.3e6
    assert 12e9 <= doc['macs']['total'] <= 18e9
    assert doc['not_larger_than_reference'] is True


def test_count_text(capsys):
    assert run_cli(['count', '--config', 'desk', '--scales', 'full,core']) == 0
    out = capsys.readouterr().out
    assert 'Not larger than baseline' in out


def test_missing_config_is_a_usage_error(capsys):
    assert run_cli(['count']) == 1
    assert '--config' in capsys.readouterr().err


def test_unknown_override_key():
    assert run_cli(['count', '--config', 'desk', '--set', 'model.chanels=[4]']) == 1
    assert run_cli(['count', '--config', 'nope.yaml']) == 1


def test_bad_flag_exits_one():
    assert run_cli(['count', '--config', 'desk', '--block', 'lstm']) == 1
    assert run_cli(['frobnicate']) == 1


def test_synth_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / 'a', tmp_path / 'b'
    assert run_cli(['synth', '--classes', '2', '--per-class', '2', '--frames', '12', '--seed', '4', '--out', str(a)]) == 0
    assert run_cli(['synth', '--classes', '2', '--per-class', '2', '--frames', '12', '--seed', '4', '--out', str(b)]) == 0
    files_a = sorted(p.relative_to(a) for p in a.rglob('*') if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob('*') if p.is_file())
    assert files_a == files_b and len(files_a) == 5
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()


def test_train_then_eval(tmp_path, capsys):
    data, out = tmp_path / 'data', tmp_path / 'run'
    run_cli(['synth', '--per-class', '3', '--test-per-class', '1', '--frames', '16', '--out', str(data)])
    common = ['--config', 'desk', '--dataset', str(data), '--set', 'train.epochs=1', '--set', 'model.input_frames=16']
    assert run_cli(['train', *common, '--out', str(out)]) == 0
    assert {p.name for p in out.iterdir()} >= {'model.npz', 'report.json', 'history.csv'}
    capsys.readouterr()

    assert run_cli(['eval', *common, '--checkpoint', str(out / 'model.npz'), '--json']) == 0
    doc = _json_out(capsys)
    assert doc['samples'] == 2 and doc['split'] == 'test'


def test_gradcheck_one_seed(capsys, caplog):
    caplog.set_level(logging.INFO)
    assert run_cli(['gradcheck', '--seeds', '1', '--json']) == 0
    doc = _json_out(capsys)
    assert doc['passed'] is True
    assert doc['max_relative_error'] < doc['tolerance']
    assert any('resolved gradcheck options' in m and '"seeds": 1' in m for m in caplog.messages)


def test_convert_pads_and_reports_failures(tmp_path, rng, capsys):
    good = write_sequence(make_sequence(rng, frames=5), tmp_path / 'good.json')
    bad = tmp_path / 'bad.json'
    bad.write_text('{"layout": "ntu25"')
    out = tmp_path / 'out'

    assert run_cli(['convert', str(good), '--pad', '12', '--out', str(out)]) == 0
    padded = read_sequence(out / 'good.json')
    assert padded.frames == 12 and padded.true_frames == 5
    np.testing.assert_array_equal(padded.data[:, 7], padded.data[:, 2])
    capsys.readouterr()

    assert run_cli(['convert', str(good), str(bad), '--json']) == 1
    doc = _json_out(capsys)
    assert [f['status'] for f in doc['files']] == ['ok', 'error'] and doc['failed'] == 1


def test_synth_and_convert_log_their_options(tmp_path, rng, caplog):
    caplog.set_level(logging.INFO)
    assert run_cli(['synth', '--per-class', '1', '--frames', '8', '--out', str(tmp_path / 'data')]) == 0
    synth = [m for m in caplog.messages if m.startswith('resolved synth options')]
    assert synth and '"seed": 0' in synth[0] and '"frames": 8' in synth[0]

    good = write_sequence(make_sequence(rng, frames=5), tmp_path / 'good.json')
    assert run_cli(['convert', str(good), '--normalize', '--align-view', '--normalize-scale']) == 0
    convert = [m for m in caplog.messages if m.startswith('resolved convert options')]
    assert convert and '"align_view": true' in convert[0] and '"normalize_scale": true' in convert[0]


def test_convert_aligns_and_rescales(tmp_path, rng, capsys):
    good = write_sequence(make_sequence(rng, frames=5), tmp_path / 'good.json')
    out = tmp_path / 'out'
    assert run_cli(['convert', str(good), '--normalize', '--align-view', '--normalize-scale', '--out', str(out)]) == 0
    seq = read_sequence(out / 'good.json')
    layout = get_layout('ntu25')
    first = seq.data[:, 0, :, 0]
    line = first[:, layout.joint_index('shoulder_left')] - first[:, layout.joint_index('shoulder_right')]
    assert line[0] > 0 and abs(line[2]) < 1e-9
    lengths = [np.linalg.norm(first[:, j] - first[:, p]) for j, p in enumerate(layout.parents) if p is not None]
    assert np.mean(lengths) == pytest.approx(1.0)
