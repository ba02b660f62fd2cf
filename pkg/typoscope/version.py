# ---------------------------------------------------------------------------
# Typoscope
#
# version.py
#
# Provides source code version information.
# ---------------------------------------------------------------------------

import logging
import numpy
import yaml

import typoscope


logger = logging.getLogger(__name__)


def print_version():
    logger.info("NUMPY version {}".format(numpy.__version__))
    logger.info("PYYAML version {}".format(yaml.__version__))
    logger.info("TYPOSCOPE version {}".format(typoscope.__version__))
