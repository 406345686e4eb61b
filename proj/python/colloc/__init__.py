"""Direct collocation for trajectory optimization.

Thin wrapper around the C++ core: interval step maps, transcription sizes
and full solves of the registered problems.
"""

from ._core import dynamics, hs_step, problem_names, sizes, solve, tz_step

__all__ = ["dynamics", "hs_step", "problem_names", "sizes", "solve", "tz_step"]
__version__ = "0.1.0"
