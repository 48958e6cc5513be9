# -*- coding: utf-8 -*-
"""
Exception hierarchy shared by every hoi_core module.

The CLI maps ValidationError to exit code 1 and NumericalError to exit code 2.
"""

from typing import Optional


class HoiError(Exception):
    """Base class for all hoi_core errors."""

    exit_code = 1


class ValidationError(HoiError, ValueError):
    """Invalid input data, configuration or file content."""

    exit_code = 1


class NumericalError(HoiError, ArithmeticError):
    """A non-finite value, a diverging run, or a failed gradient check."""

    exit_code = 2

    def __init__(self, message: str, component: Optional[str] = None, step: Optional[int] = None):
        self.component = component
        self.step = step
        details = []
        if component is not None:
            details.append(f"component={component}")
        if step is not None:
            details.append(f"step={step}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)
