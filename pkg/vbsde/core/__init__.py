from .grid import DTYPE, TimeGrid, PathEnsemble
from .process import ProcessKind, TerminalVariable, AdaptedProcess, ControlPair, SolutionPair
from .generator import (Generator, ProbeResult, ZeroGenerator, AffineGenerator, LinearGenerator,
                        CubicGenerator, SineGenerator, generator_map)
from .norms import b_norm, in_ball, left_sum, standard_error
