import sys

from runner.cli import main

# Command line entry point: python index.py run data/sample_survival_curve.json
if __name__ == "__main__":
    sys.exit(main())
