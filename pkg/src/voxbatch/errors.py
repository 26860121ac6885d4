"""Error types shared across the engine."""


class ContractViolation(ValueError):
    """A caller broke an interface precondition (wrong batch size, step after
    close, malformed action, ...)."""
