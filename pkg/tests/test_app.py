import anyio
import numpy as np
import pytest

pytest.importorskip("mcp")


@pytest.fixture(scope='module')
def app():
    monkeypatch = pytest.MonkeyPatch()
    monkeypatch.setenv('QREL_LOG_FILE', '')
    import app as server
    yield server
    monkeypatch.undo()


@pytest.fixture
def states(app):
    toolkit = app.toolkit
    rho = toolkit.random_density(4, seed=101)
    sigma = toolkit.random_density(4, seed=202)
    return toolkit.state_to_json(rho), toolkit.state_to_json(sigma)


def test_entropy_tool(app):
    toolkit = app.toolkit
    result = app.qrel_entropy(app.QrelEntropyParams(
        rho=toolkit.state_to_json(np.eye(2) / 2),
        sigma=toolkit.state_to_json(np.diag([0.75, 0.25])),
        methods=['support', 'modular'],
    ))

    assert result['success'] is True
    assert result['agree'] is True
    assert result['values']['support'] == pytest.approx(0.5 * np.log(4.0 / 3.0))


def test_dpi_tool(app, states):
    channel = app.toolkit.channel_to_json(app.toolkit.random_channel(4, 2, 2, seed=9))
    result = app.qrel_dpi(app.QrelDpiParams(rho=states[0], sigma=states[1], channel=channel))

    assert result['holds'] is True
    assert result['failed_steps'] == []


@pytest.mark.parametrize("proof", ['petz', 'uhlmann'])
def test_chain_tool(app, states, proof):
    result = app.qrel_chain(app.QrelChainParams(rho=states[0], sigma=states[1], dims=(2, 2), proof=proof))
    assert result['holds'] is True


def test_chain_tool_rejects_unknown_proof(app, states):
    with pytest.raises(Exception, match='Unknown proof chain'):
        app.qrel_chain(app.QrelChainParams(rho=states[0], sigma=states[1], dims=(2, 2), proof='other'))


def test_chain_tool_reports_input_errors(app, states):
    with pytest.raises(Exception, match='Failed to run the petz chain'):
        app.qrel_chain(app.QrelChainParams(rho=states[0], sigma=states[1], dims=(3, 2)))


def test_figures_tool(app):
    result = app.qrel_figures(app.QrelFiguresParams(x_grid=[0.5, 1.0, 2.0]))
    assert (result['rows'], result['violations']) == (3, 3)
    assert result['csv'].startswith('x,lhs,rhs,violation')


def test_campaign_tool(app):
    params = app.QrelCampaignParams(seed=5, samples_per_cell=1, checks=['flawed_step'], jobs=2)
    result = anyio.run(app.qrel_campaign, params)

    assert result['ok'] is True
    assert result['report']['campaign']['seed'] == 5


def test_campaign_tool_and_replay(app):
    params = app.QrelCampaignParams(seed=5, samples_per_cell=2, checks=['dpi'],
                                    tolerance_overrides={'dpi': -1.0})
    result = anyio.run(app.qrel_campaign, params)
    witnesses = result['report']['checks']['dpi']['witnesses']

    assert result['ok'] is False
    replayed = app.qrel_replay_witness(app.QrelReplayParams(witness=witnesses[0]))
    assert replayed['holds'] is False


def test_replay_tool_rejects_bad_witness(app):
    with pytest.raises(Exception, match='Failed to replay witness'):
        app.qrel_replay_witness(app.QrelReplayParams(witness={'check': 'dpi'}))


def test_recovery_tool(app, states):
    channel = app.toolkit.channel_to_json(app.toolkit.identity_channel(4))
    result = app.qrel_recovery(app.QrelRecoveryParams(sigma=states[1], channel=channel, rho=states[0]))

    assert result['holds'] is True
    assert len(result['certificate']['steps']) == 2


def test_random_state_tool(app):
    state = app.qrel_random_state(app.QrelRandomStateParams(dim=3, rank=1, seed=4))['state']
    assert state['kind'] == 'density'
    assert state['rank'] == 1
