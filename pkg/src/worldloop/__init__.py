"""worldloop: a deterministic grid-game harness for model-building agents.

Agents learn executable transition models from recorded play, verify them
against every observation, and plan through them before spending real
environment actions.
"""

__version__ = "0.1.0"
