#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
compobo launch script

Entry point of the benchmark. Global flags are exported as environment
variables so worker processes see the same settings, then the command
line is handed to src.main.
"""

import os
import sys

# Ensure the current directory is in the Python path
current_dir = os.path.dirname(os.path.abspath(__file__))
if current_dir not in sys.path:
    sys.path.append(current_dir)


def export_flags(argv):
    """
    Export --debug and --jobs as environment variables

    Args:
        argv (list): Raw command-line arguments
    """
    if "--debug" in argv:
        os.environ["BO_BENCH_DEBUG"] = "1"
    if "--jobs" in argv:
        index = argv.index("--jobs")
        if index + 1 < len(argv):
            os.environ["BO_BENCH_JOBS"] = argv[index + 1]


if __name__ == "__main__":
    export_flags(sys.argv[1:])

    # Imported after the environment is set so config picks it up
    from src.main import main

    sys.exit(main())
