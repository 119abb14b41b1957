from .errors import *
from .core import *
from .sde import *
from .regression import *
from .solvers import *
from .variational import *
from .checks import *
from .pricing import *
from .utils import *
