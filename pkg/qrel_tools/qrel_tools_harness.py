"""
Qrel Harness Tools

This module provides the seeded randomized campaign runner. Every registered
check is split into a sampler, which draws serializable inputs from a
counter-based substream, and an evaluator, which turns those inputs into a
Certificate. Failures keep their inputs as replayable witnesses.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Tuple

import anyio
import numpy as np
import yaml
from pydantic import BaseModel, Field, field_validator

from config import Config
from .qrel_base import (
    Certificate, QrelError, UnknownCheckError, WitnessSchemaError, matrix_from_json, matrix_to_json
)
from .qrel_tools_channels import BipartiteDims

# Configure logging
logger = logging.getLogger(__name__)

WITNESS_SCHEMA = 'qrel-witness/1'

Inputs = Dict[str, Any]
RANK_MODES = ('full', 'deficient', 'non_nested')


class RankDraw(NamedTuple):
    """Rank mode of a cell and the sample that selects its rank pair"""

    rank_mode: str
    sample_index: int


Sampler = Callable[[Any, np.random.Generator, BipartiteDims, RankDraw], Inputs]
Evaluator = Callable[[Any, Inputs], Certificate]


def json_safe(value: Any) -> Any:
    """Replace non-finite floats by '+inf', '-inf' or 'nan' and numpy scalars by Python ones"""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return '+inf' if value > 0 else '-inf'
        return value
    return value


def dump_json(data: Any) -> str:
    """Canonical JSON: sorted keys, non-finite floats as strings"""
    return json.dumps(json_safe(data), sort_keys=True, indent=2)


class Campaign(BaseModel):
    """Seeded grid of checks"""

    seed: int = 1
    dims_grid: List[Tuple[int, int]] = Field(default_factory=lambda: [(2, 2), (2, 3), (3, 2), (3, 3)])
    rank_modes: List[str] = Field(default_factory=lambda: ['full', 'deficient', 'non_nested'])
    samples_per_cell: int = 20
    checks: List[str] = Field(default_factory=list)
    tolerance_overrides: Dict[str, Any] = Field(default_factory=dict)
    jobs: int = 1
    max_witnesses: int = 5

    @classmethod
    def from_config(cls, config: Config, checks: Optional[List[str]] = None, **updates: Any) -> 'Campaign':
        harness = config.harness
        data = {
            'seed': harness.seed,
            'dims_grid': list(harness.dims_grid),
            'rank_modes': list(harness.rank_modes),
            'samples_per_cell': harness.samples_per_cell,
            'checks': list(CHECKS) if checks is None else checks,
            'jobs': harness.jobs,
            'max_witnesses': harness.max_witnesses,
        }
        data.update({k: v for k, v in updates.items() if v is not None})
        return cls(**data)

    @classmethod
    def from_file(cls, path: str, config: Optional[Config] = None) -> 'Campaign':
        """
        Load a campaign from YAML or JSON; missing fields come from the harness config

        Raises:
            OSError: If the file cannot be read
            QrelError: If the file is not a mapping
        """
        text = Path(path).read_text(encoding='utf-8')
        data = json.loads(text) if path.lower().endswith('.json') else yaml.safe_load(text)
        if not isinstance(data, dict):
            raise QrelError(f"Campaign file must contain a mapping: {path}")
        return cls.from_config(config or Config.from_env(), **data)


class Witness(BaseModel):
    """Serialized inputs of one evaluated sample"""

    schema_version: str = WITNESS_SCHEMA
    check: str
    cell_index: int
    sample_index: int
    dims: Tuple[int, int]
    rank_mode: str
    ranks: Optional[Tuple[int, int]] = None
    seed: int
    inputs: Inputs
    tolerance_overrides: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[str] = None
    defect: float = 0.0

    @field_validator('defect', mode='before')
    @classmethod
    def _decode_defect(cls, value: Any) -> Any:
        if isinstance(value, str):
            return {'+inf': math.inf, '-inf': -math.inf, 'nan': math.nan}.get(value, value)
        return value


class CheckReport(BaseModel):
    """Pass/fail counts and the worst defect of one check"""

    check: str
    pass_count: int = 0
    fail_count: int = 0
    worst_defect: float = 0.0
    rank_counts: Dict[str, int] = Field(default_factory=dict)
    witnesses: List[Witness] = Field(default_factory=list)

    def merge(self, other: 'CheckReport', max_witnesses: int) -> 'CheckReport':
        """Order-independent merge; witnesses are kept in (cell, sample) order"""
        witnesses = sorted(self.witnesses + other.witnesses, key=lambda w: (w.cell_index, w.sample_index))
        rank_counts = dict(self.rank_counts)
        for key, count in other.rank_counts.items():
            rank_counts[key] = rank_counts.get(key, 0) + count
        return CheckReport(
            check=self.check,
            pass_count=self.pass_count + other.pass_count,
            fail_count=self.fail_count + other.fail_count,
            worst_defect=max(self.worst_defect, other.worst_defect),
            rank_counts=dict(sorted(rank_counts.items())),
            witnesses=witnesses[:max_witnesses]
        )


class Report(BaseModel):
    campaign: Campaign
    checks: Dict[str, CheckReport] = Field(default_factory=dict)

    @property
    def total_failures(self) -> int:
        return sum(report.fail_count for report in self.checks.values())

    @property
    def ok(self) -> bool:
        return self.total_failures == 0

    def merge(self, other: 'Report') -> 'Report':
        merged = dict(self.checks)
        for name, report in other.checks.items():
            merged[name] = merged[name].merge(report, self.campaign.max_witnesses) if name in merged else report
        return Report(campaign=self.campaign, checks=merged)

    def to_json(self) -> Dict[str, Any]:
        data = self.model_dump()
        data['total_failures'] = self.total_failures
        return json_safe(data)


# Samplers and evaluators

def _matrix(data: Any) -> np.ndarray:
    return matrix_from_json(data)


def _dims(inputs: Inputs) -> BipartiteDims:
    d_a, d_b = inputs['dims']
    return BipartiteDims(d_a=d_a, d_b=d_b)


def rank_pairs(dim: int, rank_mode: str) -> List[Tuple[int, int]]:
    """
    (rank rho, rank sigma) combinations cycled through by the samples of one cell

    'full' is the single pair (d, d). 'deficient' takes every nested pair
    r_rho <= r_sigma except (d, d), which includes rank one and a deficient rho
    against a full-rank sigma. 'non_nested' takes every r_rho against every
    r_sigma < d with independently drawn supports, so supp(rho) leaves supp(sigma).
    """
    if rank_mode == 'full' or dim == 1:
        return [(dim, dim)]
    if rank_mode == 'deficient':
        return [(r_rho, r_sigma) for r_sigma in range(1, dim + 1) for r_rho in range(1, r_sigma + 1) if r_rho < dim]
    return [(r_rho, r_sigma) for r_rho in range(1, dim + 1) for r_sigma in range(1, dim)]


def _states(toolkit, rng: np.random.Generator, dim: int, draw: RankDraw,
            nested_only: bool = False) -> Tuple[np.ndarray, np.ndarray, Tuple[int, int]]:
    mode = 'deficient' if nested_only and draw.rank_mode == 'non_nested' else draw.rank_mode
    pairs = rank_pairs(dim, mode)
    rank_rho, rank_sigma = pairs[draw.sample_index % len(pairs)]
    if mode == 'non_nested':
        rho = toolkit.random_density(dim, rank=rank_rho, seed=rng)
        sigma = toolkit.random_density(dim, rank=rank_sigma, seed=rng)
    elif rank_rho == dim:
        rho, sigma = toolkit.random_density(dim, seed=rng), toolkit.random_density(dim, seed=rng)
    else:
        rho, sigma = toolkit.random_nested_pair(dim, rank_rho, rank_sigma, seed=rng)
    return rho.matrix, sigma.matrix, (rank_rho, rank_sigma)


def _pair_inputs(toolkit, rng, dims, draw) -> Inputs:
    rho, sigma, ranks = _states(toolkit, rng, dims.d_ab, draw)
    return {'rho': matrix_to_json(rho), 'sigma': matrix_to_json(sigma), 'ranks': list(ranks)}


def _full_pair_inputs(toolkit, rng, dims, draw) -> Inputs:
    return _pair_inputs(toolkit, rng, dims, draw._replace(rank_mode='full'))


def _form_dim(dims: BipartiteDims) -> int:
    return min(dims.d_ab, 4)


def _form_pair_inputs(toolkit, rng, dims, draw) -> Inputs:
    rho, sigma, ranks = _states(toolkit, rng, _form_dim(dims), draw, nested_only=True)
    return {'rho': matrix_to_json(rho), 'sigma': matrix_to_json(sigma), 'ranks': list(ranks)}


def _forms(toolkit, inputs: Inputs):
    return (toolkit.form_from_operator_pair(_matrix(inputs['rho']), 'left'),
            toolkit.form_from_operator_pair(_matrix(inputs['sigma']), 'right'))


def _sample_dpi(toolkit, rng, dims, draw) -> Inputs:
    inputs = _pair_inputs(toolkit, rng, dims, draw)
    channel = toolkit.random_channel(dims.d_ab, dims.d_ab, int(rng.integers(1, 4)), seed=rng)
    inputs['channel'] = toolkit.channel_to_json(channel)
    return inputs


def _eval_dpi(toolkit, inputs: Inputs) -> Certificate:
    return toolkit.dpi_via_stinespring(_matrix(inputs['rho']), _matrix(inputs['sigma']),
                                       toolkit.channel_from_json(inputs['channel']))


def _eval_isometry(toolkit, inputs: Inputs) -> Certificate:
    return toolkit.certify_v_rho(toolkit.build_v_rho(_matrix(inputs['rho']), _dims(inputs)))


def _sample_key_inequality(toolkit, rng, dims, draw) -> Inputs:
    inputs = _full_pair_inputs(toolkit, rng, dims, draw)
    inputs['probe_seed'] = int(rng.integers(2 ** 31))
    return inputs


def _eval_key_inequality(toolkit, inputs: Inputs) -> Certificate:
    return toolkit.check_key_inequality(_matrix(inputs['rho']), _matrix(inputs['sigma']), _dims(inputs),
                                        seed=inputs['probe_seed'])


def _eval_petz_chain(toolkit, inputs: Inputs) -> Certificate:
    return toolkit.corrected_monotonicity(_matrix(inputs['rho']), _matrix(inputs['sigma']), _dims(inputs))


def _eval_uhlmann_chain(toolkit, inputs: Inputs) -> Certificate:
    return toolkit.uhlmann_monotonicity(_matrix(inputs['rho']), _matrix(inputs['sigma']), _dims(inputs))


def _contraction(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Random PSD K with K <= I"""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    k = g @ g.conj().T
    return k / (np.linalg.norm(k, 2) * rng.uniform(1.0, 2.0))


def _sample_interpolation_monotonicity(toolkit, rng, dims, draw) -> Inputs:
    inputs = _form_pair_inputs(toolkit, rng, dims, draw)
    dim = _form_dim(dims)
    inputs['k_alpha'] = matrix_to_json(_contraction(rng, dim))
    inputs['k_beta'] = matrix_to_json(_contraction(rng, dim))
    return inputs


def _eval_interpolation_monotonicity(toolkit, inputs: Inputs) -> Certificate:
    """alpha' = (rho^1/2 K rho^1/2)_L <= rho_L and likewise on the right"""
    rho, sigma = _matrix(inputs['rho']), _matrix(inputs['sigma'])
    alpha, beta = _forms(toolkit, inputs)
    alpha_low = toolkit.positive_form(_left_gram(toolkit, rho, _matrix(inputs['k_alpha'])))
    beta_low = toolkit.positive_form(_right_gram(toolkit, sigma, _matrix(inputs['k_beta'])))
    return toolkit.check_interpolation_monotonicity(alpha_low, alpha, beta_low, beta)


def _squeezed(toolkit, state: np.ndarray, k: np.ndarray) -> np.ndarray:
    root = toolkit.psd_power(state, 0.5).matrix
    return root @ k @ root


def _left_gram(toolkit, state: np.ndarray, k: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(state.shape[0]), _squeezed(toolkit, state, k))


def _right_gram(toolkit, state: np.ndarray, k: np.ndarray) -> np.ndarray:
    return np.kron(_squeezed(toolkit, state, k).T, np.eye(state.shape[0]))


def _sample_pullback(toolkit, rng, dims, draw) -> Inputs:
    inputs = _form_pair_inputs(toolkit, rng, dims, draw)
    n_v = _form_dim(dims) ** 2
    n_u = dims.d_a ** 2
    psi = (rng.standard_normal((n_v, n_u)) + 1j * rng.standard_normal((n_v, n_u))) / math.sqrt(n_v)
    inputs['psi'] = matrix_to_json(psi)
    return inputs


def _eval_pullback(toolkit, inputs: Inputs) -> Certificate:
    alpha, beta = _forms(toolkit, inputs)
    return toolkit.check_pullback_inequality(_matrix(inputs['psi']), alpha, beta)


def _sample_representation(toolkit, rng, dims, draw) -> Inputs:
    inputs = _form_pair_inputs(toolkit, rng, dims, draw)
    inputs['t'] = float(rng.uniform(0.0, 1.0))
    inputs['rotation_seed'] = int(rng.integers(2 ** 31))
    return inputs


def _eval_representation(toolkit, inputs: Inputs) -> Certificate:
    alpha, beta = _forms(toolkit, inputs)
    discrepancy = toolkit.check_representation_independence(alpha, beta, inputs['t'], rep_count=3,
                                                            seed=inputs['rotation_seed'])
    direct = toolkit.interpolate_direct(_matrix(inputs['rho']), _matrix(inputs['sigma']), inputs['t'])
    quotient = toolkit.interpolate(alpha, beta, inputs['t'])
    tol = toolkit.tolerances.representation
    return Certificate.chain('representation_independence', [
        Certificate.equality('rotations', discrepancy, tol),
        Certificate.equality('direct_route', float(np.linalg.norm(direct.gram - quotient.gram)), tol),
    ], t=inputs['t'])


def _sample_geometric_mean(toolkit, rng, dims, draw) -> Inputs:
    inputs = _form_pair_inputs(toolkit, rng, dims, draw)
    inputs['probe_seed'] = int(rng.integers(2 ** 31))
    return inputs


def _eval_geometric_mean(toolkit, inputs: Inputs) -> Certificate:
    alpha, beta = _forms(toolkit, inputs)
    mean = toolkit.geometric_mean(alpha, beta)
    return Certificate.chain('geometric_mean', [
        toolkit.check_domination(mean, alpha, beta, probes=1000, seed=inputs['probe_seed']),
        toolkit.check_geometric_mean_maximality(alpha, beta, candidate_count=100, seed=inputs['probe_seed']),
    ])


def _sample_fawzi_renner(toolkit, rng, dims, draw) -> Inputs:
    inputs = {
        'rho': matrix_to_json(toolkit.random_density(dims.d_a, seed=rng).matrix),
        'sigma': matrix_to_json(toolkit.random_density(dims.d_a, seed=rng).matrix),
    }
    inputs['channel'] = toolkit.channel_to_json(
        toolkit.random_channel(dims.d_a, dims.d_a, int(rng.integers(2, 4)), seed=rng))
    return inputs


def _eval_fawzi_renner(toolkit, inputs: Inputs) -> Certificate:
    return toolkit.fawzi_renner_check(_matrix(inputs['rho']), _matrix(inputs['sigma']),
                                      toolkit.channel_from_json(inputs['channel']))


def _sample_petz_recovery(toolkit, rng, dims, draw) -> Inputs:
    channel = toolkit.random_channel(dims.d_ab, dims.d_a, dims.d_b + 1, seed=rng)
    return {
        'sigma': matrix_to_json(toolkit.random_density(dims.d_ab, seed=rng).matrix),
        'channel': toolkit.channel_to_json(channel),
        'probe_seed': int(rng.integers(2 ** 31)),
    }


def _eval_petz_recovery(toolkit, inputs: Inputs) -> Certificate:
    sigma = _matrix(inputs['sigma'])
    return Certificate.chain('petz_recovery', [
        toolkit.check_petz_recovery(sigma, toolkit.channel_from_json(inputs['channel']), seed=inputs['probe_seed']),
        toolkit.check_petz_factorization(sigma, _dims(inputs)),
    ])


def _eval_definition_equivalence(toolkit, inputs: Inputs) -> Certificate:
    rho, sigma = _matrix(inputs['rho']), _matrix(inputs['sigma'])
    support = toolkit.relative_entropy(rho, sigma)
    regularized = toolkit.relative_entropy_regularized(rho, sigma)
    if not support.is_finite:
        return Certificate.inequality('definition_equivalence', regularized.slope - regularized.threshold, 0.0,
                                      branch='infinite', divergence_coefficient=regularized.slope,
                                      threshold=regularized.threshold)
    return Certificate.equality('definition_equivalence', abs(regularized.limit - support.value),
                                toolkit.tolerances.regularized_agreement * (1.0 + abs(support.value)),
                                branch='finite', divergent=regularized.divergent)


def _eval_four_methods(toolkit, inputs: Inputs) -> Certificate:
    comparison = toolkit.compare_methods(_matrix(inputs['rho']), _matrix(inputs['sigma']))
    return Certificate.equality('four_method_agreement', comparison.spread, comparison.tolerance,
                                **comparison.values)


def _sample_flawed_step(toolkit, rng, dims, draw) -> Inputs:
    return {'variant': 'inverse' if rng.random() < 0.5 else 'log', 'alpha': 0.5, 'xi': 0.5}


def _eval_flawed_step(toolkit, inputs: Inputs) -> Certificate:
    """Holds when the counterexample reproduces on every grid point"""
    table = toolkit.flawed_step_counterexample(alpha=inputs['alpha'], xi=inputs['xi'], variant=inputs['variant'])
    margin = min(row.lhs - row.rhs for row in table.rows)
    return Certificate.inequality('flawed_step', margin, 0.0, variant=table.variant,
                                  violation_rate=table.violation_count / len(table.rows))


CHECKS: Dict[str, Tuple[Sampler, Evaluator]] = {
    'dpi': (_sample_dpi, _eval_dpi),
    'isometry': (_full_pair_inputs, _eval_isometry),
    'key_inequality': (_sample_key_inequality, _eval_key_inequality),
    'petz_chain': (_pair_inputs, _eval_petz_chain),
    'uhlmann_chain': (_pair_inputs, _eval_uhlmann_chain),
    'interpolation_monotonicity': (_sample_interpolation_monotonicity, _eval_interpolation_monotonicity),
    'pullback': (_sample_pullback, _eval_pullback),
    'representation_independence': (_sample_representation, _eval_representation),
    'geometric_mean': (_sample_geometric_mean, _eval_geometric_mean),
    'fawzi_renner': (_sample_fawzi_renner, _eval_fawzi_renner),
    'petz_recovery': (_sample_petz_recovery, _eval_petz_recovery),
    'definition_equivalence': (_pair_inputs, _eval_definition_equivalence),
    'four_method_agreement': (_full_pair_inputs, _eval_four_methods),
    'flawed_step': (_sample_flawed_step, _eval_flawed_step),
}


class HarnessMixin:
    """Mixin class for randomized campaigns and witness replay"""

    def _validate_campaign(self, campaign: Campaign) -> None:
        """
        Raises:
            UnknownCheckError: If a check name is not registered
            QrelError: If a grid is invalid
        """
        unknown = [name for name in campaign.checks if name not in CHECKS]
        if unknown:
            self._fail(UnknownCheckError, f"Unknown check(s): {', '.join(unknown)}; known: {', '.join(CHECKS)}")
        if campaign.samples_per_cell < 1 or campaign.jobs < 1:
            self._fail(QrelError, "samples_per_cell and jobs must be positive")
        for d_a, d_b in campaign.dims_grid:
            if d_a < 1 or d_b < 1:
                self._fail(QrelError, f"Invalid dimensions ({d_a}, {d_b}) in dims_grid")
        for mode in campaign.rank_modes:
            if mode not in RANK_MODES:
                self._fail(QrelError, f"Unknown rank mode {mode!r}; known: {', '.join(RANK_MODES)}")

    def _campaign_toolkit(self, campaign: Campaign):
        if not campaign.tolerance_overrides:
            return self
        return self.__class__(self.config.with_overrides(campaign.tolerance_overrides))

    def _cells(self, campaign: Campaign) -> List[Tuple[BipartiteDims, str]]:
        return [(BipartiteDims(d_a=d_a, d_b=d_b), mode) for d_a, d_b in campaign.dims_grid
                for mode in campaign.rank_modes]

    def _run_cell(self, campaign: Campaign, cell_index: int, dims: BipartiteDims, rank_mode: str) -> Report:
        """Run every selected check on one cell, each check on its own Philox substream"""
        toolkit = self._campaign_toolkit(campaign)
        check_names = list(CHECKS)
        reports = {}
        for name in campaign.checks:
            sampler, evaluator = CHECKS[name]
            rng = np.random.Generator(np.random.Philox(
                np.random.SeedSequence([campaign.seed, cell_index, check_names.index(name)])))
            report = CheckReport(check=name)
            for sample_index in range(campaign.samples_per_cell):
                inputs = {'dims': [dims.d_a, dims.d_b],
                          **sampler(toolkit, rng, dims, RankDraw(rank_mode, sample_index))}
                ranks = tuple(inputs['ranks']) if 'ranks' in inputs else None
                counts = {f"d{inputs['rho']['rows']}:{ranks[0]},{ranks[1]}": 1} if ranks else {}
                witness = Witness(check=name, cell_index=cell_index, sample_index=sample_index,
                                  dims=(dims.d_a, dims.d_b), rank_mode=rank_mode, ranks=ranks, seed=campaign.seed,
                                  inputs=inputs, tolerance_overrides=campaign.tolerance_overrides)
                try:
                    certificate = evaluator(toolkit, inputs)
                except QrelError as e:
                    logger.warning(f"{name} raised on cell {cell_index} sample {sample_index}: {e}")
                    failure = CheckReport(check=name, fail_count=1, worst_defect=math.inf, rank_counts=counts,
                                          witnesses=[witness.model_copy(update={'error': str(e), 'defect': math.inf})])
                    report = report.merge(failure, campaign.max_witnesses)
                    continue

                if certificate.holds:
                    outcome = CheckReport(check=name, pass_count=1, worst_defect=certificate.defect,
                                          rank_counts=counts)
                else:
                    outcome = CheckReport(check=name, fail_count=1, worst_defect=certificate.defect,
                                          rank_counts=counts,
                                          witnesses=[witness.model_copy(update={'defect': certificate.defect})])
                report = report.merge(outcome, campaign.max_witnesses)
            reports[name] = report
            logger.debug(f"Cell {cell_index} ({dims.d_a}x{dims.d_b}, {rank_mode}) {name}: "
                         f"{report.pass_count} passed, {report.fail_count} failed")
        return Report(campaign=campaign, checks=reports)

    async def run_campaign_async(self, campaign: Campaign) -> Report:
        """Run cells on worker threads, at most `campaign.jobs` at a time"""
        self._validate_campaign(campaign)
        cells = self._cells(campaign)
        logger.info(f"Running campaign seed={campaign.seed}: {len(cells)} cells x {len(campaign.checks)} checks "
                    f"x {campaign.samples_per_cell} samples, jobs={campaign.jobs}")

        limiter = anyio.CapacityLimiter(campaign.jobs)
        results: Dict[int, Report] = {}

        async def run_one(index: int, dims: BipartiteDims, rank_mode: str) -> None:
            results[index] = await anyio.to_thread.run_sync(
                self._run_cell, campaign, index, dims, rank_mode, limiter=limiter)

        async with anyio.create_task_group() as tg:
            for index, (dims, rank_mode) in enumerate(cells):
                tg.start_soon(run_one, index, dims, rank_mode)

        report = Report(campaign=campaign, checks={name: CheckReport(check=name) for name in campaign.checks})
        for index in sorted(results):
            report = report.merge(results[index])
        if report.ok:
            logger.info("Campaign finished with zero failures")
        else:
            logger.warning(f"Campaign finished with {report.total_failures} failure(s)")
        return report

    def run_campaign(self, campaign: Campaign) -> Report:
        """
        Run a campaign; identical campaigns give identical reports

        Raises:
            UnknownCheckError: If a check name is not registered
        """
        return anyio.run(self.run_campaign_async, campaign)

    def _decode_witness_inputs(self, toolkit, inputs: Inputs) -> None:
        """
        Raises:
            WitnessSchemaError: If an encoded matrix, channel or the dims do not decode
        """
        try:
            for key, value in inputs.items():
                if key == 'channel':
                    toolkit.channel_from_json(value)
                elif key == 'dims':
                    _dims(inputs)
                elif isinstance(value, dict):
                    matrix_from_json(value)
        except (QrelError, TypeError, ValueError) as e:
            self._fail(WitnessSchemaError, f"Witness input {key!r} does not decode: {e}")

    def replay_witness(self, witness: Any) -> Certificate:
        """
        Re-evaluate one witness with its recorded tolerance overrides

        Args:
            witness: Witness, mapping or JSON text

        Returns:
            The check's certificate, with every step

        Raises:
            WitnessSchemaError: If the witness does not parse, names an unknown check or holds
                inputs that do not decode
        """
        try:
            if isinstance(witness, str):
                witness = json.loads(witness)
            if not isinstance(witness, Witness):
                witness = Witness.model_validate(witness)
        except (ValueError, TypeError) as e:
            self._fail(WitnessSchemaError, f"Witness does not match the schema: {e}")
        if witness.schema_version != WITNESS_SCHEMA:
            self._fail(WitnessSchemaError, f"Unsupported witness schema {witness.schema_version!r}")
        if witness.check not in CHECKS:
            self._fail(WitnessSchemaError, f"Witness names unknown check {witness.check!r}")

        toolkit = self._campaign_toolkit(Campaign(tolerance_overrides=witness.tolerance_overrides))
        logger.info(f"Replaying {witness.check} witness from cell {witness.cell_index}, sample {witness.sample_index}")
        self._decode_witness_inputs(toolkit, witness.inputs)
        try:
            certificate = CHECKS[witness.check][1](toolkit, witness.inputs)
        except KeyError as e:
            self._fail(WitnessSchemaError, f"Witness inputs miss field {e}")
        for step in certificate.failed_steps():
            logger.info(f"  {step.check}: margin {step.margin:.3e}, tolerance {step.tolerance:.3e}")
        return certificate
