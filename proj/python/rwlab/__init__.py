"""Python bindings for the rwlab C++ library."""

import json

try:
    from ._rwlab import *  # noqa: F401,F403
    from . import _rwlab as _core
except ImportError:
    from _rwlab import *  # noqa: F401,F403
    import _rwlab as _core


def run(name, **overrides):
    """Run one experiment and return its report as a dict.

    Keys with dots are passed as e.g. ``run("escape", seed=1, **{"mc.samples": 500})``.
    """
    kv = {k: str(v) for k, v in overrides.items()}
    return json.loads(_core.run_experiment(name, kv))
