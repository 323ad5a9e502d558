#!/usr/bin/env python3

import os
import sys
sys.path.append(os.path.abspath('./'))

import json

from opengke.adversary import capture_view
from opengke.cli import main
from opengke.groups import load_group
from opengke.netsim import Transcript
from opengke.protocols.wire import element_from_hex, element_to_hex
from opengke.utils import fingerprint


tiny = load_group('tiny')
F1 = 'scenarios/f1.json'


def run_f1(tmp_path, *extra):
    out = str(tmp_path / 't.jsonl')
    code = main(['run', '--group', 'tiny', '--scenario', F1, '--seed', '7',
                 '--out', out] + list(extra))
    return code, out


def error_of(capsys):
    err = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(err)


def test_run(tmp_path, capsys):
    code, out = run_f1(tmp_path)
    assert code == 0
    text = capsys.readouterr().out
    assert '3 epoch(s)' in text
    assert 'PASS' in text
    assert len(Transcript.load(out).broadcasts()) == 3


def test_run_output_is_stable(tmp_path, capsys):
    run_f1(tmp_path)
    first = capsys.readouterr().out
    run_f1(tmp_path)
    assert capsys.readouterr().out == first


def test_run_missing_scenario(tmp_path, capsys):
    code = main(['run', '--group', 'tiny', '--scenario',
                 str(tmp_path / 'nope.json')])
    assert code == 2
    err = error_of(capsys)
    assert err['error'] == 'ScenarioError'
    assert 'scenario not found' in err['message']


def test_run_bad_first_event(tmp_path, capsys):
    path = tmp_path / 's.json'
    path.write_text(json.dumps([{'kind': 'rekey', 'controller': 1}]))
    assert main(['run', '--scenario', str(path)]) == 2
    assert 'first event' in error_of(capsys)['message']


def test_run_protocol_error(tmp_path, capsys):
    path = tmp_path / 's.json'
    path.write_text(json.dumps([
        {'kind': 'ika', 'controller': 1, 'members': 3},
        {'kind': 'evict', 'controller': 1, 'leavers': [1]}]))
    assert main(['run', '--scenario', str(path)]) == 2
    assert error_of(capsys)['message'].startswith('event 1:')


def test_group_sources_conflict(capsys):
    code = main(['run', '--group', 'tiny', '--p', '23', '--q', '11',
                 '--g', '4', '--scenario', F1])
    assert code == 2
    assert error_of(capsys)['error'] == 'ParameterError'


def test_custom_group(tmp_path, capsys):
    code = main(['run', '--p', '23', '--q', '0xb', '--g', '4',
                 '--scenario', F1])
    assert code == 0
    assert 'PASS' in capsys.readouterr().out


def test_verify(tmp_path, capsys):
    code, out = run_f1(tmp_path)
    capsys.readouterr()
    assert main(['verify', out]) == 0
    assert capsys.readouterr().out.strip().endswith('PASS')


def test_verify_tampered(tmp_path, capsys):
    code, out = run_f1(tmp_path)
    t = Transcript.load(out)
    rec = t.broadcasts()[1]
    y = element_from_hex(rec['payload']['slots']['1'], tiny)
    rec['payload']['slots']['1'] = element_to_hex(y * tiny.generator)
    t.write(out)
    capsys.readouterr()

    assert main(['verify', out]) == 1
    text = capsys.readouterr().out
    failing = [l for l in text.splitlines() if 'FAIL' in l and 'slot' in l]
    assert len(failing) == 1
    assert failing[0].split()[0] == '2'
    assert 'member(s) 1' in failing[0]


def test_verify_wrong_group(tmp_path, capsys):
    code, out = run_f1(tmp_path)
    capsys.readouterr()
    assert main(['verify', out, '--group', 'medium']) == 1
    text = capsys.readouterr().out
    assert any('membership' in l and 'FAIL' in l for l in text.splitlines())


def test_verify_corrupt(tmp_path, capsys):
    path = tmp_path / 't.jsonl'
    path.write_text('{"seq": 0, "epoch": 0}\nnot json\n')
    assert main(['verify', str(path)]) == 2
    assert error_of(capsys)['error'] == 'TranscriptParseError'


def test_attack_single_key(capsys):
    code = main(['attack', '--single-key', '4', '--group', 'tiny',
                 '--seed', '1'])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert json.loads(lines[0])['matches_true_key'] is True
    assert lines[-1] == 'RECOVERED: yes'


def test_attack_single_key_inapplicable(capsys):
    assert main(['attack', '--single-key', '13', '--group', 'tiny']) == 3
    assert error_of(capsys)['error'] == 'AttackInapplicableError'


def test_attack_transcript(tmp_path, capsys):
    code, out = run_f1(tmp_path)
    capsys.readouterr()
    assert main(['attack', out]) == 0
    lines = capsys.readouterr().out.splitlines()
    report = json.loads(lines[0])
    assert report['variant'] == 'P1'
    assert report['n'] == 3
    assert report['matches_true_key'] is False
    assert lines[-1] == 'RECOVERED: no'


def test_groups(capsys):
    assert main(['groups']) == 0
    text = capsys.readouterr().out
    for name in ('tiny', 'medium', 'modp768', 'modp1024', 'modp2048'):
        assert name in text


def test_config_file(tmp_path, capsys, monkeypatch):
    ini = tmp_path / 'opengke.ini'
    ini.write_text('[opengke]\ngroup = medium\nseed = 5\n')
    script = tmp_path / 's.json'
    script.write_text(json.dumps([{'kind': 'ika', 'controller': 1,
                                   'members': 3}]))
    out = str(tmp_path / 't.jsonl')

    assert main(['--config', str(ini), 'run', '--scenario', str(script),
                 '--out', out]) == 0
    meta = Transcript.load(out).meta
    assert meta['payload']['group'] == 'medium'
    assert meta['oracle']['seed'] == 5

    conf = tmp_path / 'opengke.json'
    conf.write_text(json.dumps({'group': {'p': '23', 'q': '11', 'g': '4'},
                                'seed': 3}))
    monkeypatch.setenv('OPENGKE_CONFIG', str(conf))
    assert main(['run', '--scenario', str(script), '--out', out]) == 0
    meta = Transcript.load(out).meta
    assert meta['payload']['group'] == 'custom'
    assert meta['oracle']['seed'] == 3

    # flags win over the file
    assert main(['run', '--group', 'tiny', '--seed', '9',
                 '--scenario', str(script), '--out', out]) == 0
    assert Transcript.load(out).meta['oracle']['seed'] == 9


def test_config_conflict(tmp_path, capsys):
    ini = tmp_path / 'opengke.ini'
    ini.write_text('[opengke]\ngroup = tiny\n[group]\np = 23\nq = 11\n'
                   'g = 4\n')
    assert main(['--config', str(ini), 'groups']) == 2


def rewrite(path, mutate):
    t = Transcript.load(path)
    mutate(t)
    t.write(path)


def test_verify_wrong_field_types(tmp_path, capsys):
    mutations = [
        lambda t: t.records[1].update(payload='garbage'),
        lambda t: t.broadcasts()[0].update(epoch='one'),
        lambda t: t.broadcasts()[0]['oracle'].update(
            pairs_before=['5', '7']),
    ]
    for mutate in mutations:
        code, out = run_f1(tmp_path)
        rewrite(out, mutate)
        capsys.readouterr()
        assert main(['verify', out]) == 2
        assert error_of(capsys)['error'] == 'TranscriptParseError'
        assert main(['attack', out]) == 2
        assert error_of(capsys)['error'] == 'TranscriptParseError'


def test_attack_passive_view(tmp_path, capsys):
    code, out = run_f1(tmp_path)
    view = capture_view(Transcript.load(out))
    path = tmp_path / 'view.jsonl'
    path.write_text(view.to_jsonl())
    capsys.readouterr()

    assert main(['attack', str(path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    report = json.loads(lines[0])
    assert report['recovered'] == fingerprint(tiny.element(13))
    assert report['matches_true_key'] is None
    assert lines[-1] == 'RECOVERED: unknown'


def test_custom_group_transcript(tmp_path, capsys):
    # falling back to the tiny group would fail both commands
    out = str(tmp_path / 't.jsonl')
    assert main(['run', '--p', '2039', '--q', '1019', '--g', '4',
                 '--scenario', F1, '--out', out]) == 0
    capsys.readouterr()
    assert main(['verify', out]) == 0
    assert capsys.readouterr().out.strip().endswith('PASS')
    assert main(['attack', out]) in (0, 1)
    assert json.loads(capsys.readouterr().out.splitlines()[0])['n'] == 3


def test_config_bad_verbosity(tmp_path, capsys):
    ini = tmp_path / 'opengke.ini'
    ini.write_text('[opengke]\nverbosity = loud\n')
    assert main(['--config', str(ini), 'groups']) == 2
    assert error_of(capsys)['error'] == 'ParameterError'
