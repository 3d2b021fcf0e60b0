import os
import sys

current_dir = os.path.dirname(__file__)
project_root = os.path.dirname(current_dir)  # .../src
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from pxlab.commands.command_line import main

if __name__ == "__main__":
    sys.exit(main())
