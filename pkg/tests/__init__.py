# Change directory to tests so that pytest can run in the package root
# directory; test data are referenced as data/<file>.
import os
if os.path.exists('tests/data'):
  os.chdir('tests')
