"""
Pipeline numérique des cylindres plats.
"""
from .config import *
from .errors import *
from .expression import *
from .metric_core import *
from .beltrami import *
from .isogroup import *
from .geodesy import *
from .develop import *
from .count import *
from .schemas import *
from .loaders import *
from .reports import *
from .cli import main, run
