import json

import numpy as np
import pytest

from qrel_cli import EXIT_INPUT, EXIT_OK, EXIT_VIOLATION, INFINITE, main
from qrel_tools import Campaign, dump_json, matrix_to_json


@pytest.fixture
def write_json(tmp_path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(dump_json(data), encoding='utf-8')
        return str(path)
    return write


@pytest.fixture
def commuting_files(toolkit, write_json, maximally_mixed_qubit, skewed_qubit):
    return (write_json('rho.json', toolkit.state_to_json(maximally_mixed_qubit)),
            write_json('sigma.json', toolkit.state_to_json(skewed_qubit)))


@pytest.fixture
def pair_files(toolkit, write_json, full_rank_pair):
    rho, sigma = full_rank_pair
    return (write_json('rho4.json', toolkit.state_to_json(rho)),
            write_json('sigma4.json', toolkit.state_to_json(sigma)))


def test_entropy_all_methods(commuting_files, capsys):
    assert main(['entropy', *commuting_files]) == EXIT_OK

    result = json.loads(capsys.readouterr().out)
    assert result['agree'] is True
    assert result['values']['support'] == pytest.approx(0.5 * np.log(4.0 / 3.0))


def test_entropy_support_violation(toolkit, write_json, maximally_mixed_qubit, ground_qubit, capsys):
    rho = write_json('rho.json', toolkit.state_to_json(maximally_mixed_qubit))
    sigma = write_json('sigma.json', toolkit.state_to_json(ground_qubit))

    assert main(['entropy', rho, sigma, '--method', 'support']) == EXIT_OK
    assert json.loads(capsys.readouterr().out)['values'] == {'support': INFINITE}


def test_dpi_with_depolarizer(toolkit, write_json, commuting_files, capsys):
    channel = write_json('channel.json', toolkit.channel_to_json(toolkit.full_depolarizer(2)))

    assert main(['dpi', *commuting_files, channel]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)['holds'] is True


def test_petz_chain_prints_summary(pair_files, capsys):
    assert main(['petz-chain', *pair_files, '--dims', '2', '2']) == EXIT_OK

    out = capsys.readouterr().out
    assert 'S(rho||sigma) = ' in out
    assert 'gap = ' in out
    assert 'FAIL' not in out


def test_uhlmann_chain_writes_certificate(pair_files, tmp_path):
    output = tmp_path / 'certificate.json'
    assert main(['uhlmann-chain', *pair_files, '--dims', '2', '2', '-o', str(output)]) == EXIT_OK
    assert json.loads(output.read_text(encoding='utf-8'))['holds'] is True


def test_chain_rejects_wrong_dims(pair_files):
    assert main(['chain', *pair_files, '--dims', '3', '2']) == EXIT_INPUT


def test_figures_inverse_at_one(capsys):
    assert main(['figures', '--x', '1.0']) == EXIT_OK

    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == 'x,lhs,rhs,violation'
    x, lhs, rhs, violation = lines[1].split(',')
    assert float(lhs) == pytest.approx(4.0 / 3.0)
    assert float(rhs) == pytest.approx(1.0 / 6.0)
    assert violation == 'true'


def test_figures_log_grid(capsys):
    assert main(['figures', '--which', 'jensen-log', '--grid', '0.5', '2.0', '4']) == EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 5


def test_figures_bad_alpha():
    assert main(['figures', '--alpha', '0']) == EXIT_INPUT


def test_campaign_subset(capsys):
    code = main(['campaign', '--checks', 'flawed_step', 'dpi', '--samples', '1', '--seed', '3', '--jobs', '2'])

    report = json.loads(capsys.readouterr().out)
    assert code == EXIT_OK
    assert report['total_failures'] == 0
    assert report['campaign']['seed'] == 3
    assert set(report['checks']) == {'flawed_step', 'dpi'}


def test_campaign_from_file(tmp_path, capsys):
    path = tmp_path / 'campaign.yaml'
    path.write_text("checks: [flawed_step]\ndims_grid: [[2, 2]]\nrank_modes: [full]\nsamples_per_cell: 1\n",
                    encoding='utf-8')

    assert main(['campaign', '--config', str(path), '--seed', '11']) == EXIT_OK
    assert json.loads(capsys.readouterr().out)['campaign']['seed'] == 11


def test_campaign_unknown_check():
    assert main(['campaign', '--checks', 'no_such_check', '--samples', '1']) == EXIT_INPUT


def test_recovery(toolkit, write_json, full_rank_pair, capsys):
    rho, sigma = full_rank_pair
    sigma_path = write_json('sigma.json', toolkit.state_to_json(sigma))
    rho_path = write_json('rho.json', toolkit.state_to_json(rho))
    channel = write_json('channel.json', toolkit.channel_to_json(toolkit.unitary_channel(toolkit.random_unitary(4, seed=8))))

    assert main(['recovery', sigma_path, channel, '--rho', rho_path]) == EXIT_OK
    assert len(json.loads(capsys.readouterr().out)['steps']) == 2


def test_replay_failing_witness(toolkit, write_json):
    campaign = Campaign(seed=2, dims_grid=[(2, 2)], rank_modes=['full'], samples_per_cell=3, checks=['dpi'],
                        tolerance_overrides={'dpi': -1.0})
    witness = toolkit.run_campaign(campaign).checks['dpi'].witnesses[0]
    path = write_json('witness.json', witness.model_dump())

    assert main(['replay', path]) == EXIT_VIOLATION


def test_replay_malformed_witness(write_json):
    assert main(['replay', write_json('witness.json', {'check': 'dpi'})]) == EXIT_INPUT


def test_random_state(tmp_path, toolkit):
    output = tmp_path / 'state.json'
    assert main(['random-state', '--dim', '3', '--rank', '2', '--seed', '5', '-o', str(output)]) == EXIT_OK

    state = toolkit.state_from_json(json.loads(output.read_text(encoding='utf-8')))
    assert state.rank == 2
    assert np.allclose(state.matrix, toolkit.random_density(3, rank=2, seed=5).matrix)


def test_bad_arguments():
    assert main(['entropy']) == EXIT_INPUT
    assert main(['no-such-command']) == EXIT_INPUT


def test_missing_file(tmp_path):
    assert main(['entropy', str(tmp_path / 'a.json'), str(tmp_path / 'b.json')]) == EXIT_INPUT


def test_invalid_state(write_json, commuting_files):
    bad = write_json('bad.json', matrix_to_json(np.diag([1.0, 1.0])))
    assert main(['entropy', bad, commuting_files[1]]) == EXIT_INPUT


def test_tolerance_config_must_be_mapping(tmp_path, commuting_files):
    path = tmp_path / 'tolerances.yaml'
    path.write_text("- 1e-9\n", encoding='utf-8')
    assert main(['--tolerance-config', str(path), 'entropy', *commuting_files]) == EXIT_INPUT


def test_tolerance_config_unknown_key(tmp_path, commuting_files):
    path = tmp_path / 'tolerances.json'
    path.write_text(json.dumps({'tolerances': {'no_such_tolerance': 1.0}}), encoding='utf-8')
    assert main(['--tolerance-config', str(path), 'entropy', *commuting_files]) == EXIT_INPUT
