import sys

from willmore.main import main

if __name__ == "__main__":
    # Subcommands: run --config <file> [--out <dir>], converge [--out <dir>], odecheck
    sys.exit(main())
