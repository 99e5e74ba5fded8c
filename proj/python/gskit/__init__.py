# Copyright 2026 The gskit Authors
# SPDX-License-Identifier: Apache-2.0
"""Gaussian-splat robot simulation toolkit."""

from ._gskit import *  # noqa: F401,F403
from ._gskit import __doc__  # noqa: F401

__version__ = "0.1.0"
