"""Graph calculus, separation criteria, Markov properties and structural
causal models for directed graphs with hyperedges (HEDGes)."""

from .core import *  # noqa: F403
from .dist import *  # noqa: F403
from .markov import *  # noqa: F403
from .orders import *  # noqa: F403
from .scm import *  # noqa: F403
from .separation import *  # noqa: F403
from .transform import *  # noqa: F403
from .formats import export_dot

__version__ = "0.1.0"
