"""Reference external world model for the grid-game harness.

Loads a ``.rules`` file and answers wm_reconstruct / wm_predict /
wm_render / wm_size requests, one canonical JSON line per call, on stdio:

    python -m pymodel --rules <path>

The implementation is split into state handling (``state_io``), the
transition engine (``engine``), and planning over the engine
(``planner``).
"""

__version__ = "0.1.0"
