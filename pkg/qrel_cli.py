#!/usr/bin/env python3
"""
Qrel Command Line Interface

Command-line surface for the relative-entropy toolkit: entropy computation by
several methods, DPI and proof-chain certificates, the counterexample figure
data, randomized campaigns, Petz recovery checks and witness replay.

Exit codes: 0 = success / certified, 1 = a certificate failed, 2 = input error.
JSON and CSV go to stdout (or --output); logging goes to stderr.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, List, Optional

from config import Config, load_override_file
from qrel_tools import BipartiteDims, Campaign, Certificate, QrelError, QrelToolkit, dump_json
from qrel_tools.qrel_tools_entropy import ENTROPY_METHODS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2

METHODS = list(ENTROPY_METHODS)
INFINITE = 'infinite (support violation)'


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='qrel', description='Quantum relative entropy verification toolkit')
    parser.add_argument('--tolerance-config', help='YAML/JSON tolerance override file (env QREL_TOLERANCE_CONFIG)')
    parser.add_argument('--verbose', '-v', action='store_true', help='Log at DEBUG level')
    sub = parser.add_subparsers(dest='command', required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--output', '-o', help='Write the result to this file instead of stdout')

    entropy = sub.add_parser('entropy', parents=[common], help='Relative entropy S(rho||sigma)')
    entropy.add_argument('rho')
    entropy.add_argument('sigma')
    entropy.add_argument('--method', choices=METHODS + ['all'], default='all')

    dpi = sub.add_parser('dpi', parents=[common], help='Data-processing inequality through a Stinespring dilation')
    dpi.add_argument('rho')
    dpi.add_argument('sigma')
    dpi.add_argument('channel')

    for name, proof in (('chain', None), ('petz-chain', 'petz'), ('uhlmann-chain', 'uhlmann')):
        chain = sub.add_parser(name, parents=[common], help='Step-by-step monotonicity certificate')
        chain.add_argument('rho')
        chain.add_argument('sigma')
        chain.add_argument('--dims', nargs=2, type=int, required=True, metavar=('D_A', 'D_B'))
        if proof is None:
            chain.add_argument('--proof', choices=['petz', 'uhlmann'], default='petz')
        else:
            chain.set_defaults(proof=proof)

    figures = sub.add_parser('figures', parents=[common], help='CSV data of the contractive Jensen counterexamples')
    figures.add_argument('--which', choices=['jensen-inverse', 'jensen-log'], default='jensen-inverse')
    figures.add_argument('--alpha', type=float, default=0.5)
    figures.add_argument('--xi', type=float, default=0.5)
    figures.add_argument('--grid', nargs=3, type=float, metavar=('START', 'STOP', 'COUNT'))
    figures.add_argument('--x', nargs='*', type=float, help='Explicit x values')

    campaign = sub.add_parser('campaign', parents=[common], help='Seeded randomized campaign')
    campaign.add_argument('--config', dest='campaign_config', help='Campaign YAML/JSON file')
    campaign.add_argument('--seed', type=int)
    campaign.add_argument('--samples', type=int)
    campaign.add_argument('--jobs', type=int)
    campaign.add_argument('--checks', nargs='*')

    recovery = sub.add_parser('recovery', parents=[common], help='Petz recovery identity and the fidelity bound')
    recovery.add_argument('sigma')
    recovery.add_argument('channel')
    recovery.add_argument('--rho', help='State for the fidelity bound')
    recovery.add_argument('--seed', type=int, default=1)

    replay = sub.add_parser('replay', parents=[common], help='Replay a campaign witness')
    replay.add_argument('witness')

    random_state = sub.add_parser('random-state', parents=[common], help='Seeded random density operator as JSON')
    random_state.add_argument('--dim', type=int, required=True)
    random_state.add_argument('--rank', type=int)
    random_state.add_argument('--seed', type=int, default=1)

    return parser


def read_json(path: str) -> Any:
    return json.loads(Path(path).read_text(encoding='utf-8'))


def emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text if text.endswith('\n') else text + '\n', encoding='utf-8')
        logger.info(f"Wrote {output}")
    else:
        sys.stdout.write(text if text.endswith('\n') else text + '\n')


def certificate_lines(certificate: Certificate, depth: int = 0) -> List[str]:
    """One line per step: status, name, defect and tolerance"""
    status = 'ok  ' if certificate.holds else 'FAIL'
    line = (f"{'  ' * depth}{status} {certificate.check}: defect={certificate.defect:.3e} "
            f"margin={certificate.margin:.3e} tol={certificate.tolerance:.1e}")
    lines = [line]
    for step in certificate.steps:
        lines.extend(certificate_lines(step, depth + 1))
    return lines


def entropy_label(value: Any) -> Any:
    return INFINITE if value == '+inf' else value


def cmd_entropy(toolkit: QrelToolkit, args) -> int:
    rho = toolkit.state_from_json(read_json(args.rho))
    sigma = toolkit.state_from_json(read_json(args.sigma))
    methods = None if args.method == 'all' else [args.method]
    comparison = toolkit.compare_methods(rho, sigma, methods)

    for method, value in comparison.values.items():
        logger.info(f"{method}: {entropy_label(value)}")
    emit(dump_json({'values': {k: entropy_label(v) for k, v in comparison.values.items()},
                    'spread': comparison.spread, 'tolerance': comparison.tolerance,
                    'agree': comparison.agree}), args.output)
    return EXIT_OK if comparison.agree else EXIT_VIOLATION


def cmd_dpi(toolkit: QrelToolkit, args) -> int:
    certificate = toolkit.dpi_via_stinespring(toolkit.state_from_json(read_json(args.rho)),
                                              toolkit.state_from_json(read_json(args.sigma)),
                                              toolkit.channel_from_json(read_json(args.channel)))
    for line in certificate_lines(certificate):
        logger.info(line)
    emit(dump_json(certificate.model_dump()), args.output)
    return EXIT_OK if certificate.holds else EXIT_VIOLATION


def cmd_chain(toolkit: QrelToolkit, args) -> int:
    rho = toolkit.state_from_json(read_json(args.rho))
    sigma = toolkit.state_from_json(read_json(args.sigma))
    dims = BipartiteDims(d_a=args.dims[0], d_b=args.dims[1])
    if args.proof == 'petz':
        certificate = toolkit.corrected_monotonicity(rho, sigma, dims)
    else:
        certificate = toolkit.uhlmann_monotonicity(rho, sigma, dims)

    lines = certificate_lines(certificate)
    if certificate.details.get('regularized') and 'eps_schedule' in certificate.details:
        lines.append(f"eps schedule: {certificate.details['eps_schedule']}")
    lines.append(f"S(rho||sigma) = {entropy_label(certificate.details['full_entropy'])}")
    lines.append(f"S(Tr_b rho||Tr_b sigma) = {entropy_label(certificate.details['reduced_entropy'])}")
    lines.append(f"gap = {certificate.details['gap']}")
    if args.output:
        emit(dump_json(certificate.model_dump()), args.output)
    sys.stdout.write('\n'.join(lines) + '\n')
    return EXIT_OK if certificate.holds else EXIT_VIOLATION


def cmd_figures(toolkit: QrelToolkit, args) -> int:
    if args.x is not None:
        grid = args.x
    elif args.grid is not None:
        start, stop, count = args.grid
        grid = [start + (stop - start) * k / (int(count) - 1) for k in range(int(count))] if count > 1 else (
            [start] if count == 1 else [])
    else:
        grid = None
    variant = 'inverse' if args.which == 'jensen-inverse' else 'log'
    table = toolkit.flawed_step_counterexample(alpha=args.alpha, xi=args.xi, x_grid=grid, variant=variant)
    emit(table.to_csv(), args.output)
    return EXIT_OK


def cmd_campaign(toolkit: QrelToolkit, args) -> int:
    updates = {'seed': args.seed, 'samples_per_cell': args.samples, 'jobs': args.jobs, 'checks': args.checks}
    if args.campaign_config:
        campaign = Campaign.from_file(args.campaign_config, toolkit.config)
        campaign = campaign.model_copy(update={k: v for k, v in updates.items() if v is not None})
    else:
        campaign = Campaign.from_config(toolkit.config, **updates)
    report = toolkit.run_campaign(campaign)
    for name, check in report.checks.items():
        logger.info(f"{name}: {check.pass_count} passed, {check.fail_count} failed, worst defect {check.worst_defect:.3e}")
    emit(dump_json(report.to_json()), args.output)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_recovery(toolkit: QrelToolkit, args) -> int:
    sigma = toolkit.state_from_json(read_json(args.sigma))
    channel = toolkit.channel_from_json(read_json(args.channel))
    steps = [toolkit.check_petz_recovery(sigma, channel, seed=args.seed)]
    if args.rho:
        steps.append(toolkit.fawzi_renner_check(toolkit.state_from_json(read_json(args.rho)), sigma, channel))
    certificate = Certificate.chain('recovery', steps)
    for line in certificate_lines(certificate):
        logger.info(line)
    emit(dump_json(certificate.model_dump()), args.output)
    return EXIT_OK if certificate.holds else EXIT_VIOLATION


def cmd_replay(toolkit: QrelToolkit, args) -> int:
    certificate = toolkit.replay_witness(Path(args.witness).read_text(encoding='utf-8'))
    sys.stderr.write('\n'.join(certificate_lines(certificate)) + '\n')
    emit(dump_json(certificate.model_dump()), args.output)
    return EXIT_OK if certificate.holds else EXIT_VIOLATION


def cmd_random_state(toolkit: QrelToolkit, args) -> int:
    state = toolkit.random_density(args.dim, rank=args.rank, seed=args.seed)
    emit(dump_json(toolkit.state_to_json(state)), args.output)
    return EXIT_OK


COMMANDS = {
    'entropy': cmd_entropy,
    'dpi': cmd_dpi,
    'chain': cmd_chain,
    'petz-chain': cmd_chain,
    'uhlmann-chain': cmd_chain,
    'figures': cmd_figures,
    'campaign': cmd_campaign,
    'recovery': cmd_recovery,
    'replay': cmd_replay,
    'random-state': cmd_random_state,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK

    try:
        config = Config.from_env()
        if args.tolerance_config:
            config = config.with_overrides(load_override_file(args.tolerance_config))
    except (OSError, ValueError) as e:
        sys.stderr.write(f"Invalid tolerance configuration: {e}\n")
        return EXIT_INPUT

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, config.server.log_level.upper()),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr
    )

    toolkit = QrelToolkit(config)
    try:
        return COMMANDS[args.command](toolkit, args)
    except (QrelError, json.JSONDecodeError, OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_INPUT


if __name__ == '__main__':
    sys.exit(main())
