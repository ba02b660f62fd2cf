# ---------------------------------------------------------------------------
# Typoscope
#
# cmdline.py
#
# Holder for command-line arguments.
# ---------------------------------------------------------------------------

import logging

from typoscope.exceptions import UsageError


logger = logging.getLogger(__name__)


class CommandLineArguments:
    """A simple command-line arguments holder

    Long options take the form --name or --name=value; options listed in
    value_options may also take their value from the next word. The first
    bare word is the subcommand; the remaining bare words are positional
    arguments.
    """

    def __init__(self, args=None, value_options=()):
        """Constructor

        :param args: list of command-line arguments excluding the program name.
        :param value_options: options that always take a value.
        """
        self.args = dict()
        self.subcommand = None
        self.positional_args = []
        self.value_options = set(value_options)
        if args is not None:
            self.add(args)

    def clear(self):
        """Removes all arguments.

        """
        self.args.clear()
        self.subcommand = None
        self.positional_args.clear()

    def add(self, args):
        """Parses and adds command-line arguments.

        :param args: list of command-line arguments excluding the program name.
        """
        options_done = False
        pending = None
        for arg in args:
            if pending is not None:
                self.args[pending] = arg
                pending = None
            elif arg == "--":
                options_done = True
            elif not options_done and arg[0:2] == "--" and len(arg) > 2:
                if arg.count("=") > 0:
                    k = arg.index("=")
                    opt = arg[:k]
                    val = arg[k+1:]
                else:
                    opt = arg
                    val = None
                    if opt in self.value_options:
                        pending = opt
                self.args[opt] = val
                logger.debug("adding command-line argument %s as %s -> %s",
                             arg, opt, val)
            elif not options_done and arg[0:1] == "-" and len(arg) > 1:
                raise UsageError("unknown option {0}; options take the form "
                                 "--name=value".format(arg))
            elif self.subcommand is None:
                self.subcommand = arg
            else:
                self.positional_args.append(arg)
        if pending is not None:
            raise UsageError("option {0} needs a value".format(pending))

    def check_known(self, known_options):
        """Raises UsageError naming the first option not in known_options."""
        for opt in self.args:
            if opt not in known_options:
                raise UsageError("unknown option {0}".format(opt))

    def has_arg(self, option):
        if isinstance(option, list):
            for opt in option:
                if opt in self.args:
                    return True
            return False
        else:
            return True if (option in self.args) else False

    def get_value(self, option):
        """Returns an option value.

        :param option: name of an option, e.g., --seed.
        :return: None if the option is not found. Otherwise, the option
                 value as string.
        """
        if isinstance(option, list):
            for opt in option:
                if opt in self.args:
                    return self.args[opt]
            return None
        else:
            return self.args[option] if (option in self.args) else None

    def get_string_value(self, option, default_value):
        val = self.get_value(option)
        return default_value if (val is None or (not val)) else val

    def get_integer_value(self, option, default_value):
        """Returns an option value as integer; a malformed value raises
        UsageError."""
        val = self.get_value(option)
        if (val is None or (not val)):
            return default_value
        try:
            return int(val)
        except ValueError:
            raise UsageError("non-integer value {0} for command-line "
                             "option {1}".format(val, option))

    def get_float_value(self, option, default_value):
        val = self.get_value(option)
        if (val is None or (not val)):
            return default_value
        try:
            return float(val)
        except ValueError:
            raise UsageError("non-float value {0} for command-line "
                             "option {1}".format(val, option))

    def get_choice_value(self, option, choices, default_value):
        val = self.get_string_value(option, default_value)
        if val not in choices:
            raise UsageError("value {0} for option {1} must be one of "
                             "{2}".format(val, option, ", ".join(choices)))
        return val
