"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid code, dictionary or experiment configuration."""


class GramBudgetError(MemoryError):
    """A dense gram matrix would exceed the configured entry budget."""
