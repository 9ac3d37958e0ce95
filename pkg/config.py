"""
Configuration module for qrel-mcp-server

This module provides tolerance, schedule, harness and server settings for the
relative-entropy verification toolkit. Every tolerance used by a certificate
lives here; toolkit modules reference them by name.
Supports environment variables and an optional YAML/JSON tolerance override file.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field

# Load environment variables from .env file if present
load_dotenv()


class ToleranceConfig(BaseModel):
    """Numerical tolerances for every certificate"""

    # Construction-time certification
    hermitian: float = Field(default=1e-10, description="Relative Hermiticity tolerance, scaled by 1+||A||_F")
    support: float = Field(default=1e-10, description="Relative support threshold, scaled by 1+lambda_max")
    cluster: float = Field(default=1e-8, description="Relative eigenvalue clustering threshold, scaled by 1+lambda_max")
    recomposition: float = Field(default=1e-10, description="Relative spectral recomposition tolerance")
    orthonormality: float = Field(default=1e-10, description="Eigenvector orthonormality tolerance")
    trace: float = Field(default=1e-10, description="Unit-trace tolerance for density operators")
    completeness: float = Field(default=1e-10, description="Kraus completeness tolerance")
    unitary: float = Field(default=1e-10, description="Unitarity tolerance")

    # Certificates
    inequality: float = Field(default=1e-9, description="Default Loewner-order tolerance")
    isometry: float = Field(default=1e-9, description="Isometry and bridge-identity tolerance")
    dilation: float = Field(default=1e-9, description="Stinespring round-trip tolerance")
    duality: float = Field(default=1e-10, description="Partial-trace duality tolerance")
    dpi: float = Field(default=1e-8, description="Data-processing inequality slack")
    klein: float = Field(default=1e-9, description="Klein inequality slack")
    klein_equality: float = Field(default=1e-7, description="Frobenius distance treated as rho == sigma")
    invariance: float = Field(default=1e-8, description="Unitary invariance and additivity tolerance")
    agreement: float = Field(default=1e-7, description="Cross-method entropy agreement")
    modular_agreement: float = Field(default=1e-8, description="Modular route versus support route")
    regularized_agreement: float = Field(default=1e-5, description="Relative agreement of the regularized limit")
    representation: float = Field(default=1e-8, description="Representation independence and interpolation identities")
    form: float = Field(default=1e-9, description="Form reproduction and PSD tolerance")
    recovery: float = Field(default=1e-9, description="Petz recovery identities")
    fawzi_renner: float = Field(default=1e-7, description="Fawzi-Renner bound slack")
    fidelity_symmetry: float = Field(default=1e-8, description="Fidelity symmetry cross-check")
    support_overlap: float = Field(default=1e-8, description="Spectral norm of (I-P_sigma)P_rho treated as zero")
    divergence_slope: float = Field(default=0.01, description="Slope against log(eps) or log(t) flagging divergence")


class ScheduleConfig(BaseModel):
    """Default regularization and interpolation schedules"""

    eps_schedule: List[float] = Field(
        default_factory=lambda: [10.0 ** (-2 - k) for k in range(7)],
        description="Decreasing epsilon schedule for regularized quantities"
    )
    t_schedule: List[float] = Field(
        default_factory=lambda: [2.0 ** (-k) for k in range(3, 21)],
        description="Decreasing t schedule for the entropy form difference quotient"
    )
    t_grid: List[float] = Field(
        default_factory=lambda: [k / 8 for k in range(9)],
        description="Dyadic grid for interpolation inequalities"
    )
    divergence_window: int = Field(default=4, description="Tail points used by the divergence slope fit")
    quadrature_nodes: int = Field(default=16, description="Gauss-Legendre nodes per panel")
    quadrature_range: Tuple[float, float] = Field(default=(-40.0, 40.0), description="log(xi) integration range")
    quadrature_panels: int = Field(default=160, description="Number of quadrature panels")
    figure_grid: Tuple[float, float, int] = Field(default=(0.05, 5.0, 100), description="Default figure x grid (start, stop, count)")


class HarnessConfig(BaseModel):
    """Defaults for randomized campaigns"""

    seed: int = Field(default=1, description="Campaign master seed")
    samples_per_cell: int = Field(default=20, description="Samples drawn per grid cell")
    dims_grid: List[Tuple[int, int]] = Field(
        default_factory=lambda: [(2, 2), (2, 3), (3, 2), (3, 3)],
        description="Bipartite (d_a, d_b) grid"
    )
    rank_modes: List[str] = Field(default_factory=lambda: ["full", "deficient", "non_nested"],
                                  description="Rank modes per cell: full, deficient (nested supports) or non_nested")
    jobs: int = Field(default=1, description="Worker threads for cell execution")
    max_witnesses: int = Field(default=5, description="Witnesses kept per check")


class ServerConfig(BaseModel):
    """Configuration for the MCP server and CLI"""

    # Server identification
    name: str = Field(
        default="qrel-mcp-server",
        description="Server name for MCP identification"
    )

    version: str = Field(
        default="1.0.0",
        description="Server version"
    )

    # Logging configuration
    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR)"
    )

    log_file: Optional[str] = Field(
        default="qrel-mcp-server.log",
        description="Log file used by the MCP server (None disables file logging)"
    )

    # Development settings
    debug: bool = Field(
        default=False,
        description="Enable debug mode"
    )


class Config(BaseModel):
    """Main configuration class combining all settings"""

    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    schedules: ScheduleConfig = Field(default_factory=ScheduleConfig)
    harness: HarnessConfig = Field(default_factory=HarnessConfig)
    server: ServerConfig = Field(default_factory=ServerConfig)

    @classmethod
    def from_env(cls) -> 'Config':
        """Create configuration from environment variables"""

        harness_config = HarnessConfig(
            seed=int(os.getenv('QREL_SEED', '1')),
            samples_per_cell=int(os.getenv('QREL_SAMPLES_PER_CELL', '20')),
            jobs=int(os.getenv('QREL_JOBS', '1'))
        )

        server_config = ServerConfig(
            name=os.getenv('MCP_SERVER_NAME', 'qrel-mcp-server'),
            version=os.getenv('MCP_SERVER_VERSION', '1.0.0'),
            log_level=os.getenv('LOG_LEVEL', 'INFO'),
            log_file=os.getenv('QREL_LOG_FILE', 'qrel-mcp-server.log') or None,
            debug=os.getenv('DEBUG', 'false').lower() == 'true'
        )

        base = cls(harness=harness_config, server=server_config)

        tolerance_path = os.getenv('QREL_TOLERANCE_CONFIG')
        if tolerance_path:
            base = base.with_overrides(load_override_file(tolerance_path))

        return base

    def with_overrides(self, overrides: Optional[Dict[str, Any]]) -> 'Config':
        """
        Return a copy with tolerance and schedule overrides applied

        Args:
            overrides: Mapping with optional 'tolerances' and 'schedules' sections,
                or a flat mapping of tolerance names

        Returns:
            New Config instance; self is left untouched

        Raises:
            ValueError: If an override names an unknown setting
        """
        if not overrides:
            return self

        if 'tolerances' not in overrides and 'schedules' not in overrides:
            overrides = {'tolerances': overrides}

        tolerance_data = self.tolerances.model_dump()
        for key, value in (overrides.get('tolerances') or {}).items():
            if key not in tolerance_data:
                raise ValueError(f"Unknown tolerance setting: {key}")
            tolerance_data[key] = value

        schedule_data = self.schedules.model_dump()
        for key, value in (overrides.get('schedules') or {}).items():
            if key not in schedule_data:
                raise ValueError(f"Unknown schedule setting: {key}")
            schedule_data[key] = value

        return self.model_copy(update={
            'tolerances': ToleranceConfig(**tolerance_data),
            'schedules': ScheduleConfig(**schedule_data),
        })


def load_override_file(path: str) -> Dict[str, Any]:
    """
    Load a tolerance override file

    Args:
        path: Path to a YAML (.yml/.yaml) or JSON file

    Returns:
        Parsed mapping

    Raises:
        OSError: If the file cannot be read
        ValueError: If the file does not contain a mapping
    """
    override_path = Path(path)
    text = override_path.read_text(encoding='utf-8')

    if override_path.suffix.lower() == '.json':
        data = json.loads(text)
    else:
        data = yaml.safe_load(text)

    if not isinstance(data, dict):
        raise ValueError(f"Tolerance override file must contain a mapping: {path}")

    return data


# Global configuration instance
config = Config.from_env()
