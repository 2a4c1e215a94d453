# SPDX-License-Identifier: Apache-2.0
"""Blind angular power map construction.

Thin python layer over the C++ core: scenario generation, HMM trajectory
recovery, propagation-parameter fitting, CRLB bounds, and radio-map beam
prediction.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
