"""PEG recognition by simplified derivatives, with a reference interpreter.

The compiled core lives in ``_sped``. Installed wheels place it inside this
package; development builds put it on ``PYTHONPATH`` next to the package, so
both locations are tried.
"""

try:
    from ._sped import (
        EngineError,
        Grammar,
        GrammarError,
        fuzz_run,
        load,
        parse,
        simplify_text,
    )
except ImportError:
    from _sped import (
        EngineError,
        Grammar,
        GrammarError,
        fuzz_run,
        load,
        parse,
        simplify_text,
    )

__all__ = [
    "EngineError",
    "Grammar",
    "GrammarError",
    "fuzz_run",
    "load",
    "parse",
    "simplify_text",
]
