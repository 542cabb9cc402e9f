"""
mevforge - Point d'entrée principal
"""

import sys

from mevforge.cli import main

if __name__ == "__main__":
    sys.exit(main())
