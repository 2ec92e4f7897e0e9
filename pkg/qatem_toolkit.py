#!/usr/bin/env python3
"""
Thin wrapper entrypoint for the qatem package CLI.

    python qatem_toolkit.py spectrum circuits/flux_qubit.net
    python qatem_toolkit.py protocol --k 10 --delta 0.01 --trials 1000000
"""
from qatem.cli import app


if __name__ == "__main__":
    app()
