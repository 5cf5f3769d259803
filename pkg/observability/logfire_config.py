"""
Logfire configuration and initialization.

Logfire provides structured logging and tracing for every experiment run.
Runs work offline: without a token, events go to the console only.

Environment Variables:
    LAB_LOGFIRE_TOKEN: Logfire project token (optional)
    LAB_LOG_LEVEL: minimum console level
"""
import os
from typing import Optional

import logfire


class LogfireConfig:
    """
    Logfire configuration singleton.

    Ensures Logfire is initialized only once per process.
    """

    _initialized = False

    @classmethod
    def initialize(
        cls,
        token: Optional[str] = None,
        log_level: str = "info",
        console: bool = True,
        send: bool = True,
        service_name: str = "annealed-lab",
        environment: Optional[str] = None,
    ) -> None:
        """
        Initialize Logfire.

        Args:
            token: Logfire project token (or set LOGFIRE_TOKEN env var)
            log_level: minimum level printed to the console
            console: False silences the console sink (used by --quiet and tests)
            send: False never ships spans, even with a token
            service_name: service name attached to every span
            environment: deployment environment tag (development, ci, production)
        """
        if cls._initialized:
            return

        token = token or os.getenv("LOGFIRE_TOKEN") or None

        logfire.configure(
            token=token,
            service_name=service_name,
            environment=environment,
            send_to_logfire="if-token-present" if send else False,
            console=logfire.ConsoleOptions(min_log_level=log_level) if console else False,
        )

        cls._initialized = True

