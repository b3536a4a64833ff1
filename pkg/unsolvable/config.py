"""
Project configuration loaded from a `.unsolvable` JSON file.

Missing keys fall back to defaults; an unreadable file is reported and
ignored. The oracle API key is never stored here, only the name of the
environment variable that holds it.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from .oracle import HttpOracle, OracleError
from .rewards import Markers, RewardConfig, TauSchedule

logger = logging.getLogger(__name__)

CONFIG_FILENAME = ".unsolvable"


class ProjectConfig:
    """Configuration for a dataset project."""

    def __init__(self, project_root: Path, config_file: Optional[Path] = None):
        self.project_root = Path(project_root)
        self.config_file = Path(config_file) if config_file else self.project_root / CONFIG_FILENAME
        self.config: Dict[str, Any] = {}
        self._load_config()

    def _load_config(self):
        if self.config_file.exists():
            try:
                with open(self.config_file, "r") as f:
                    self.config = json.load(f)
            except (json.JSONDecodeError, IOError) as e:
                logger.warning("Could not parse %s: %s", self.config_file, e)
                self.config = {}
        else:
            self.config = {}
        if "api_key" in self.section("oracle"):
            logger.warning("ignoring oracle.api_key in %s; set the key in the environment",
                           self.config_file)

    def get(self, key: str, default: Any = None) -> Any:
        return self.config.get(key, default)

    def section(self, name: str) -> Dict[str, Any]:
        value = self.config.get(name, {})
        return value if isinstance(value, dict) else {}

    @property
    def reward(self) -> RewardConfig:
        r = self.section("reward")
        defaults = TauSchedule()
        markers = Markers(
            unsolvable=tuple(r.get("unsolvable_markers", Markers.unsolvable)),
            refusal=tuple(r.get("refusal_markers", Markers.refusal)),
        )
        return RewardConfig(
            rho=float(r.get("rho", -0.5)),
            lam=float(r.get("lambda", 1.0)),
            tau=TauSchedule(
                float(r.get("tau_initial", defaults.initial)),
                float(r.get("tau_terminal", defaults.terminal)),
                int(r.get("tau_horizon", defaults.horizon)),
            ),
            epsilon=float(r.get("epsilon", 1e-8)),
            markers=markers,
        )

    @property
    def workers(self) -> int:
        return int(self.section("generation").get("workers", 1))

    @property
    def max_attempts(self) -> Optional[int]:
        value = self.section("generation").get("max_attempts")
        return int(value) if value is not None else None

    @property
    def templates_path(self) -> Optional[Path]:
        path = self.get("templates")
        return self.project_root / path if path else None

    @property
    def tier1_samples(self) -> int:
        return int(self.section("oracle").get("tier1_samples", 1))

    @property
    def max_in_flight(self) -> int:
        return int(self.section("oracle").get("max_in_flight", 4))

    def make_oracle(self) -> HttpOracle:
        o = self.section("oracle")
        if "endpoint" not in o or "model" not in o:
            raise OracleError(f"oracle.endpoint and oracle.model must be set in {self.config_file}")
        return HttpOracle(
            endpoint=o["endpoint"],
            model=o["model"],
            api_key_env=o.get("api_key_env", "UNSOLVABLE_API_KEY"),
            timeout=float(o.get("timeout", 120.0)),
            retries=int(o.get("retries", 2)),
            debug=bool(o.get("debug", False)),
        )

    def digest_source(self) -> Dict[str, Any]:
        """Everything that influences generation, for the manifest digest."""
        return {"generation": self.section("generation"), "templates": self.get("templates")}
