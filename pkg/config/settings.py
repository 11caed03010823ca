import os

# Load environment variables from .env file
try:
    from dotenv import load_dotenv

    # Prefer explicit TEST_ENV_FILE if set; otherwise load .env
    test_env_file = os.getenv("TEST_ENV_FILE")
    if test_env_file and os.path.exists(test_env_file):
        load_dotenv(test_env_file)
    else:
        load_dotenv()
except ImportError:
    pass


_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


class Settings:
    """Process-wide settings read from the environment."""

    def __init__(self):
        """Initialize the class."""
        # Logging
        self.LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
        self.LOG_DIR = os.getenv("LOG_DIR", "logs")
        self.LOG_JSON = os.getenv("LOG_JSON", "true").lower() == "true"

        # Output
        self.OUTPUT_DIR = os.getenv("OUTPUT_DIR", "runs/latest")

        # Performance settings
        self.MAX_WORKERS = int(os.getenv("MAX_WORKERS", "4"))

        # Reproducibility
        self.DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", "20240611"))

        # Metrics
        self.METRICS_ENABLED = os.getenv("METRICS_ENABLED", "true").lower() == "true"

        # Testing settings
        self.TESTING = os.getenv("TEST_ENV_FILE") is not None

        # Flag for deferred validation
        self._validated = False

    def validate_required_settings(self):
        """Validation of critical settings (called only when necessary)"""
        if self._validated:
            return

        # Imported here so that config/ stays importable on its own
        from app.core.errors import ConfigError

        problems = []
        if self.LOG_LEVEL not in _LOG_LEVELS:
            problems.append(f"LOG_LEVEL={self.LOG_LEVEL!r}")
        if self.MAX_WORKERS < 1:
            problems.append(f"MAX_WORKERS={self.MAX_WORKERS}")
        if self.DEFAULT_SEED < 0:
            problems.append(f"DEFAULT_SEED={self.DEFAULT_SEED}")

        if problems:
            raise ConfigError(f"Invalid environment settings: {', '.join(problems)}")

        self._validated = True


# Global settings instance
settings = Settings()
