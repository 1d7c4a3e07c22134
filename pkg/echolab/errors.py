# Copyright (c) 2026 The echolab authors.
#                    All rights reserved.
#
# Use of this source code is governed by a BSD-style license that can be
# found in the LICENSE file.

from typing import Any, Dict, Optional


class EcholabError(Exception):
    """
    Base class for all errors raised by echolab.
    """


class DomainError(EcholabError, ValueError):
    """
    A value or shape violates the precondition of an operation.
    """


class TrajectoryTooShort(DomainError):
    """
    The requested duration cannot hold a two-segment talker trajectory.
    """


class ProtocolError(EcholabError):
    """
    Streaming input arrived out of order.
    """


class ConfigError(EcholabError):
    """
    Invalid or missing configuration, input file or checkpoint.
    """


class NumericError(EcholabError, ArithmeticError):
    """
    Non-finite values were detected in losses or gradients.
    """

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None) -> None:
        """
        Initialize the error with a message and a diagnostics dictionary.

        :param message: Human readable description.
        :type message: str
        :param diagnostics: Details about where the non-finite values appeared. Defaults to None.
        :type diagnostics: Optional[Dict[str, Any]]
        """
        super().__init__(message)
        self.diagnostics: Dict[str, Any] = diagnostics or {}

    def __str__(self) -> str:
        if not self.diagnostics:
            return super().__str__()
        return f"{super().__str__()} {self.diagnostics}"
