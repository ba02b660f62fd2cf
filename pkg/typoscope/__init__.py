from .meta import __version__, __author__
from .version import print_version
from .util import run
