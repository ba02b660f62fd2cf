#!/usr/bin/env python3

# ---------------------------------------------------------------------------
# Typoscope
#
# typopredict.py
#
# Predicts dependency directionalities from part-of-speech sequences, and
# trains, evaluates and cross-validates the predictors.
#
# usage: python typopredict.py SUBCOMMAND [OPTIONS] FILE...
# ---------------------------------------------------------------------------

import logging
import sys

import typoscope
from typoscope import cli


logger = logging.getLogger(__name__)


def main():
    typoscope.print_version()
    return cli.run(sys.argv[1:])


if __name__ == "__main__":
    if len(sys.argv) == 1:
        cli.print_usage()
        sys.exit(1)
    else:
        typoscope.run(main, "TYPOPREDICT",
                      log_level=cli.log_level_for(sys.argv))
