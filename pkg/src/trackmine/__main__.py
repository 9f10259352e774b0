"""Entry point for python -m trackmine execution.

This module enables running trackmine as a module:
    python -m trackmine --help
    python -m trackmine mine ./sequences/0001
"""

from trackmine.cli import app

if __name__ == "__main__":
    app()
