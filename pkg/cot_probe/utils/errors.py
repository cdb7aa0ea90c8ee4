"""Base exception for the package."""


class CotProbeError(Exception):
    """Базовая ошибка cot_probe."""

    pass
