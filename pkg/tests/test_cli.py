"""
Tests for the command-line entry point
"""

import json

import pytest

from ehcap.config_manager import ConfigManager
from ehcap.experiments import ExperimentRunner
from ehcap.reporting import read_csv
from main import build_parser, main, overrides_from

GREEDY_ARGS = ['--experiment', 'greedy-compare', '--gamma', '1', '--ymax', '1', '--restarts', '2', '--quiet']


def test_repeated_runs_are_byte_identical(tmp_path):
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    assert main(GREEDY_ARGS + ['--out', str(first)]) == 0
    assert main(GREEDY_ARGS + ['--out', str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()

    comment, rows = read_csv(str(first))
    assert comment.startswith("# ehcap 0.1.0 seeds=0 config=")
    assert len(rows) == 1
    assert rows[0]['status'] == 'ok'


def test_json_to_stdout(capsys):
    assert main(GREEDY_ARGS + ['--format', 'json']) == 0
    document = json.loads(capsys.readouterr().out)
    assert document['seeds'] == [0]
    assert float(document['rows'][0]['gamma']) == 1.0


def test_save_config_round_trip(tmp_path):
    saved = tmp_path / "saved.cfg"
    out = tmp_path / "rates.csv"
    assert main(GREEDY_ARGS + ['--save-config', str(saved), '--out', str(out)]) == 0

    manager = ConfigManager(str(saved))
    manager.load_config()
    assert manager['experiment'] == 'greedy-compare'
    assert manager['restarts'] == 2
    comment, _ = read_csv(str(out))
    assert comment.endswith(f"config={manager.config_hash()}")


@pytest.mark.parametrize("argv", [
    ['--sigma2', '0'],
    ['--gammas', '4,2'],
    ['--seed', 'x'],
])
def test_bad_configuration_exits_4(argv):
    assert main(argv + ['--quiet']) == 4


def test_missing_config_file_exits_4(tmp_path):
    assert main(['--config', str(tmp_path / "absent.cfg"), '--quiet']) == 4


def test_unset_flags_fall_through():
    args = build_parser().parse_args(['--gamma', '2'])
    assert args.gamma == 2.0
    assert args.ymax is None
    assert args.tg_compare is None


def test_large_buffer_flags_keep_chain_small():
    manager = ConfigManager()
    manager.update(overrides_from(build_parser().parse_args(['--gamma', '400', '--ymax', '4'])))
    manager.validate()
    runner = ExperimentRunner(manager)
    grid = runner.grid_for(runner.harvest_for(4.0), manager['gamma'])
    assert grid.n_states <= 200


def test_doubling_restarts_keeps_capacity(tmp_path):
    args = ['--experiment', 'capacity-sweep', '--gamma', '2', '--ymax', '2', '--oracle-gamma', '2', '--quiet']
    values = []
    for restarts in (2, 4):
        out = tmp_path / f"restarts-{restarts}.csv"
        assert main(args + ['--restarts', str(restarts), '--out', str(out)]) == 0
        _, rows = read_csv(str(out))
        values.append([float(row['c_gamma_nats']) for row in rows])
    assert len(values[0]) == len(values[1]) == 2
    for few, many in zip(*values):
        assert abs(many - few) <= 1e-4
