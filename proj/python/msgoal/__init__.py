"""Goal-oriented adaptive multiscale finite elements.

Configurations are plain dicts with the keys of the ``.cfg`` files, e.g.
``{"preset": "defect_sin", "qoi": "Q1", "tol": 0.01}``.
"""

from ._core import (
    compare,
    default_cache_dir,
    mark,
    normalize_config,
    problem_info,
    read_config,
    reference_solution,
    run,
    version,
    write_config,
)

__all__ = [
    "compare",
    "default_cache_dir",
    "mark",
    "normalize_config",
    "problem_info",
    "read_config",
    "reference_solution",
    "run",
    "version",
    "write_config",
]
