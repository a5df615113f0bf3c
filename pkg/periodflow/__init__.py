"""Training-free mining of periodic workflows from feature sequences."""

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"
__version__ = "0.1.0"
