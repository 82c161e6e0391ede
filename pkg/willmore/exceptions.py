from typing import Optional

# Process exit codes
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_BLOWUP = 4


class WillmoreException(Exception):
    """Base error, carries the exit status the CLI should return"""

    status_code = 1

    def __init__(self, detail: str, status_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if status_code is not None:
            self.status_code = status_code


class ConfigError(WillmoreException):
    status_code = EXIT_CONFIG


class StateError(WillmoreException):
    """Numerical state that can only come from corrupted input (bad weights, mismatched spaces)"""

    status_code = EXIT_SOLVER


class SolverFailure(WillmoreException):
    status_code = EXIT_SOLVER

    def __init__(self, detail: str, report=None):
        super().__init__(detail)
        self.report = report


class BlowUpError(WillmoreException):
    status_code = EXIT_BLOWUP

    def __init__(self, detail: str, step: Optional[int] = None):
        super().__init__(detail)
        self.step = step
