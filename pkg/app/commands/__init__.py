"""Subcommands of the ``driftcomp`` command line, one module each."""

from app.commands import plot, presets, run, sweep, verify, witness

COMMANDS = (run, sweep, verify, plot, presets, witness)
