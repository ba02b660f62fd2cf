__version_info__ = ('0', '3', '1')
__version__ = '.'.join(__version_info__)
__author__ = 'Typoscope Developers'
