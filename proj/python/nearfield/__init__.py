# SPDX-License-Identifier: Apache-2.0
# Copyright (C) 2026 nearfield project contributors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
"""Near-field XL-MIMO transceiver algorithms.

Python bindings over the C++ core: hybrid-field channel simulation, the
FPN-OAMP channel estimator, and the neural-calibration beam-focusing suite
with ZF/MRT/WMMSE baselines.
"""

try:
    from ._core import *  # noqa: F401,F403  (installed package layout)
    from . import _core as _impl
except ImportError:  # in-tree builds put _core on PYTHONPATH directly
    from _core import *  # noqa: F401,F403
    import _core as _impl

__version__ = "0.1.0"
__all__ = [name for name in dir(_impl) if not name.startswith("_")]
