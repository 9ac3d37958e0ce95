#!/usr/bin/env python3
"""
Qrel MCP Server

FastMCP server implementation that exposes the relative-entropy toolkit
through MCP (Model Context Protocol) tools. MCP clients can compute the
relative entropy of two states by several methods, certify the
data-processing inequality and both monotonicity proof chains, generate the
contractive Jensen counterexample tables, run seeded randomized campaigns and
replay the witnesses those campaigns produce.

States and channels travel as the same JSON documents the CLI reads:
{"rows", "cols", "re", "im"} matrices, and {"kraus": [...]} channels.
"""

import logging
import sys
from typing import Any, Dict, List, Optional, Tuple

from mcp.server.fastmcp import FastMCP
from pydantic import BaseModel, Field

from config import Config
from qrel_tools import BipartiteDims, Campaign, Certificate, QrelError, QrelToolkit, json_safe

# Initialize configuration
config = Config.from_env()

# Configure logging
handlers: List[logging.Handler] = [logging.StreamHandler(sys.stdout)]
if config.server.log_file:
    handlers.append(logging.FileHandler(config.server.log_file))
logging.basicConfig(
    level=getattr(logging, config.server.log_level.upper()),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=handlers
)

logger = logging.getLogger(__name__)

# Initialize FastMCP server
mcp = FastMCP(config.server.name)

# Initialize the toolkit
toolkit = QrelToolkit(config)
logger.info("QrelToolkit initialized successfully")


# Pydantic models for MCP tool parameters

class QrelEntropyParams(BaseModel):
    """Parameters for the relative entropy of two states"""
    rho: Dict[str, Any] = Field(description="State JSON of rho")
    sigma: Dict[str, Any] = Field(description="State JSON of sigma")
    methods: Optional[List[str]] = Field(
        None, description="Subset of 'support', 'regularized', 'modular', 'form' (default: all four)")


class QrelDpiParams(BaseModel):
    """Parameters for the data-processing inequality through a Stinespring dilation"""
    rho: Dict[str, Any] = Field(description="State JSON of rho")
    sigma: Dict[str, Any] = Field(description="State JSON of sigma")
    channel: Dict[str, Any] = Field(description="Channel JSON with a 'kraus' list")


class QrelChainParams(BaseModel):
    """Parameters for a monotonicity certificate under partial trace"""
    rho: Dict[str, Any] = Field(description="State JSON of rho on the bipartite space")
    sigma: Dict[str, Any] = Field(description="State JSON of sigma on the bipartite space")
    dims: Tuple[int, int] = Field(description="Factor dimensions (d_a, d_b); the trace removes d_b")
    proof: str = Field("petz", description="Proof chain: 'petz' or 'uhlmann'")


class QrelFiguresParams(BaseModel):
    """Parameters for the contractive Jensen counterexample table"""
    variant: str = Field("inverse", description="'inverse' for f(x) = (x + xi)^-1, 'log' for f(x) = -log x")
    alpha: float = Field(0.5, description="Scalar contraction a in (0, 1]")
    xi: float = Field(0.5, description="Positive shift of the inverse variant")
    x_grid: Optional[List[float]] = Field(None, description="Positive x values (default grid when omitted)")


class QrelCampaignParams(BaseModel):
    """Parameters for a seeded randomized campaign"""
    seed: Optional[int] = Field(None, description="Campaign seed (default: QREL_SEED)")
    samples_per_cell: Optional[int] = Field(None, description="Samples per (dims, rank mode) cell")
    checks: Optional[List[str]] = Field(None, description="Check names (default: every registered check)")
    jobs: Optional[int] = Field(None, description="Number of cells evaluated concurrently")
    tolerance_overrides: Optional[Dict[str, Any]] = Field(None, description="Tolerance overrides for this campaign")


class QrelRecoveryParams(BaseModel):
    """Parameters for the Petz recovery checks"""
    sigma: Dict[str, Any] = Field(description="State JSON of sigma")
    channel: Dict[str, Any] = Field(description="Channel JSON with a 'kraus' list")
    rho: Optional[Dict[str, Any]] = Field(None, description="State JSON of rho for the fidelity bound")
    seed: int = Field(1, description="Seed for the random test operators")


class QrelReplayParams(BaseModel):
    """Parameters for replaying a campaign witness"""
    witness: Dict[str, Any] = Field(description="Witness JSON as written in a campaign report")


class QrelRandomStateParams(BaseModel):
    """Parameters for a seeded random density operator"""
    dim: int = Field(description="Hilbert space dimension")
    rank: Optional[int] = Field(None, description="Rank (default: full rank)")
    seed: int = Field(1, description="Seed")


def certificate_summary(certificate: Certificate) -> Dict[str, Any]:
    """Certificate as JSON plus the names of the failing steps"""
    return {
        "success": True,
        "holds": certificate.holds,
        "failed_steps": [step.check for step in certificate.failed_steps()],
        "certificate": json_safe(certificate.model_dump())
    }


@mcp.tool()
def qrel_entropy(params: QrelEntropyParams) -> Dict[str, Any]:
    """
    Compute S(rho||sigma) by up to four independent methods

    The support-based spectral formula, the regularized limit, the modular
    operator route and the Uhlmann entropy form are evaluated and compared.
    An infinite relative entropy is reported as "+inf".

    Args:
        params: QrelEntropyParams with the two states and the methods to use

    Returns:
        Dictionary containing the value per method, their spread and whether they agree

    Raises:
        Exception: If a state is invalid or a method is unknown
    """
    logger.info(f"Computing relative entropy by {params.methods or 'all methods'}")

    try:
        comparison = toolkit.compare_methods(toolkit.state_from_json(params.rho),
                                             toolkit.state_from_json(params.sigma),
                                             params.methods)
        return {
            "success": True,
            "values": json_safe(comparison.values),
            "spread": comparison.spread,
            "tolerance": comparison.tolerance,
            "agree": comparison.agree
        }

    except QrelError as e:
        error_msg = f"Failed to compute relative entropy: {str(e)}"
        logger.error(error_msg)
        raise Exception(error_msg)


@mcp.tool()
def qrel_dpi(params: QrelDpiParams) -> Dict[str, Any]:
    """
    Certify S(rho||sigma) >= S(T(rho)||T(sigma)) for a channel T

    Args:
        params: QrelDpiParams with the states and the channel

    Returns:
        Dictionary containing the certificate and its failing steps

    Raises:
        Exception: If the inputs are invalid
    """
    logger.info("Certifying the data-processing inequality")

    try:
        certificate = toolkit.dpi_via_stinespring(toolkit.state_from_json(params.rho),
                                                  toolkit.state_from_json(params.sigma),
                                                  toolkit.channel_from_json(params.channel))
        logger.info(f"DPI certificate holds: {certificate.holds}")
        return certificate_summary(certificate)

    except QrelError as e:
        error_msg = f"Failed to certify the data-processing inequality: {str(e)}"
        logger.error(error_msg)
        raise Exception(error_msg)


@mcp.tool()
def qrel_chain(params: QrelChainParams) -> Dict[str, Any]:
    """
    Run the Petz or Uhlmann monotonicity chain for the partial trace over B

    Args:
        params: QrelChainParams with the states, the factor dimensions and the proof

    Returns:
        Dictionary containing the chain certificate; every step carries its defect

    Raises:
        Exception: If the inputs are invalid or the proof is unknown
    """
    logger.info(f"Running the {params.proof} chain for dims {params.dims}")

    try:
        rho = toolkit.state_from_json(params.rho)
        sigma = toolkit.state_from_json(params.sigma)
        dims = BipartiteDims(d_a=params.dims[0], d_b=params.dims[1])
        if params.proof == 'petz':
            certificate = toolkit.corrected_monotonicity(rho, sigma, dims)
        elif params.proof == 'uhlmann':
            certificate = toolkit.uhlmann_monotonicity(rho, sigma, dims)
        else:
            raise Exception(f"Unknown proof chain '{params.proof}', expected 'petz' or 'uhlmann'")

        return certificate_summary(certificate)

    except QrelError as e:
        error_msg = f"Failed to run the {params.proof} chain: {str(e)}"
        logger.error(error_msg)
        raise Exception(error_msg)


@mcp.tool()
def qrel_figures(params: QrelFiguresParams) -> Dict[str, Any]:
    """
    Tabulate the contractive Jensen counterexample

    Every row compares f(a x a) with a f(x) a for the scalar contraction a;
    a violating row is a point where the contractive Jensen step fails.

    Args:
        params: QrelFiguresParams with the variant, weights and grid

    Returns:
        Dictionary containing the CSV text and the number of violating rows

    Raises:
        Exception: If a parameter is out of range
    """
    logger.info(f"Tabulating the {params.variant} counterexample (alpha={params.alpha}, xi={params.xi})")

    try:
        table = toolkit.flawed_step_counterexample(alpha=params.alpha, xi=params.xi,
                                                   x_grid=params.x_grid, variant=params.variant)
        return {
            "success": True,
            "rows": len(table.rows),
            "violations": table.violation_count,
            "csv": table.to_csv()
        }

    except QrelError as e:
        error_msg = f"Failed to tabulate the counterexample: {str(e)}"
        logger.error(error_msg)
        raise Exception(error_msg)


@mcp.tool()
async def qrel_campaign(params: QrelCampaignParams) -> Dict[str, Any]:
    """
    Run a seeded randomized campaign over the registered checks

    Identical parameters give identical reports. Failing samples are returned
    as witnesses that qrel_replay_witness re-evaluates.

    Args:
        params: QrelCampaignParams; omitted fields come from the harness config

    Returns:
        Dictionary containing the full report

    Raises:
        Exception: If a check name is unknown
    """
    try:
        campaign = Campaign.from_config(config, checks=params.checks, seed=params.seed,
                                        samples_per_cell=params.samples_per_cell, jobs=params.jobs,
                                        tolerance_overrides=params.tolerance_overrides)
        report = await toolkit.run_campaign_async(campaign)
        return {
            "success": True,
            "ok": report.ok,
            "report": report.to_json()
        }

    except QrelError as e:
        error_msg = f"Campaign failed: {str(e)}"
        logger.error(error_msg)
        raise Exception(error_msg)


@mcp.tool()
def qrel_recovery(params: QrelRecoveryParams) -> Dict[str, Any]:
    """
    Check that the Petz map recovers sigma, and the fidelity bound when rho is given

    Args:
        params: QrelRecoveryParams with sigma, the channel and optionally rho

    Returns:
        Dictionary containing the recovery certificate

    Raises:
        Exception: If the inputs are invalid
    """
    logger.info("Checking Petz recovery")

    try:
        sigma = toolkit.state_from_json(params.sigma)
        channel = toolkit.channel_from_json(params.channel)
        steps = [toolkit.check_petz_recovery(sigma, channel, seed=params.seed)]
        if params.rho is not None:
            steps.append(toolkit.fawzi_renner_check(toolkit.state_from_json(params.rho), sigma, channel))
        return certificate_summary(Certificate.chain('recovery', steps))

    except QrelError as e:
        error_msg = f"Failed to check Petz recovery: {str(e)}"
        logger.error(error_msg)
        raise Exception(error_msg)


@mcp.tool()
def qrel_replay_witness(params: QrelReplayParams) -> Dict[str, Any]:
    """
    Re-evaluate a witness from a campaign report

    Args:
        params: QrelReplayParams with the witness JSON

    Returns:
        Dictionary containing the replayed certificate

    Raises:
        Exception: If the witness does not match the schema
    """
    try:
        return certificate_summary(toolkit.replay_witness(params.witness))

    except QrelError as e:
        error_msg = f"Failed to replay witness: {str(e)}"
        logger.error(error_msg)
        raise Exception(error_msg)


@mcp.tool()
def qrel_random_state(params: QrelRandomStateParams) -> Dict[str, Any]:
    """Seeded random density operator as state JSON"""
    try:
        state = toolkit.random_density(params.dim, rank=params.rank, seed=params.seed)
        return {
            "success": True,
            "state": json_safe(toolkit.state_to_json(state))
        }

    except QrelError as e:
        error_msg = f"Failed to sample a state: {str(e)}"
        logger.error(error_msg)
        raise Exception(error_msg)


def main():
    """
    Main function to start the FastMCP server

    This function starts the MCP server, making the relative-entropy tools
    available to MCP clients. The server will run until interrupted.
    """
    logger.info(f"Starting {config.server.name} v{config.server.version}")
    logger.info(f"Debug mode: {config.server.debug}")
    logger.info(f"Log level: {config.server.log_level}")
    logger.info(f"Harness: seed={config.harness.seed}, samples per cell={config.harness.samples_per_cell}, "
                f"jobs={config.harness.jobs}")

    # Log available tools
    logger.info("Available MCP tools:")
    logger.info("  Entropy:")
    logger.info("    - qrel_entropy: Relative entropy by four methods")
    logger.info("    - qrel_dpi: Data-processing inequality certificate")
    logger.info("  Proof chains:")
    logger.info("    - qrel_chain: Petz or Uhlmann monotonicity chain")
    logger.info("    - qrel_figures: Contractive Jensen counterexample table")
    logger.info("    - qrel_recovery: Petz recovery and fidelity bound")
    logger.info("  Campaigns:")
    logger.info("    - qrel_campaign: Seeded randomized campaign")
    logger.info("    - qrel_replay_witness: Replay a failing sample")
    logger.info("    - qrel_random_state: Seeded random density operator")

    try:
        # Start the MCP server
        logger.info("Starting MCP server...")
        mcp.run()

    except KeyboardInterrupt:
        logger.info("Server shutdown requested by user")

    except Exception as e:
        logger.error(f"Server error: {str(e)}")
        sys.exit(1)

    finally:
        logger.info("MCP server stopped")


if __name__ == "__main__":
    main()
