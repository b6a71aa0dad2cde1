"""Kernel backend selection and thread control.

Two interchangeable kernel implementations exist: a numba one (compiled,
parallel) and a pure-numpy fallback.  PROBE_ORACLE_BACKEND picks one
("numba", "numpy", or "auto" to use numba when importable); tests and
benchmarks can switch at runtime with set_backend.

NUMBA_NUM_THREADS is pre-seeded before numba ever loads so the requested
thread count can exceed the visible CPU count; results never depend on the
thread count, only wall time does.
"""

import importlib
import importlib.util
import os
import warnings

from .errors import ProbeOracleError

_PRESET_THREADS = max(os.cpu_count() or 1, 8)
os.environ.setdefault("NUMBA_NUM_THREADS", str(_PRESET_THREADS))

# stale-TBB probing noise from the parallel runtime is not actionable here;
# numba falls back to another threading layer by itself
warnings.filterwarnings("ignore", message=".*TBB.*", category=Warning)

_backend = os.environ.get("PROBE_ORACLE_BACKEND", "auto").strip().lower()
_threads = None
_modules = {}


def numba_available():
    return importlib.util.find_spec("numba") is not None


def set_backend(name):
    global _backend
    name = name.strip().lower()
    if name not in ("auto", "numba", "numpy"):
        raise ProbeOracleError(f"unknown backend {name!r}")
    if name == "numba" and not numba_available():
        raise ProbeOracleError("numba backend requested but numba is not importable")
    _backend = name


def backend_name():
    """The backend actually in effect ('numba' or 'numpy')."""
    if _backend == "numpy":
        return "numpy"
    if _backend == "numba":
        return "numba"
    return "numba" if numba_available() else "numpy"


def _load(kind, flavor):
    key = (kind, flavor)
    if key not in _modules:
        _modules[key] = importlib.import_module(f"probe_oracle._{kind}_{flavor}")
    return _modules[key]


def search_kernels(flavor=None):
    return _load("search", flavor or backend_name())


def probes_kernels(flavor=None):
    return _load("probes", flavor or backend_name())


def default_threads():
    env = os.environ.get("PROBE_ORACLE_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ProbeOracleError(f"PROBE_ORACLE_THREADS must be an int, got {env!r}") from None
        if n < 1:
            raise ProbeOracleError(f"PROBE_ORACLE_THREADS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def set_threads(n):
    """Pin the worker count for parallel kernels (numba backend only)."""
    global _threads
    n = int(n)
    if n < 1:
        raise ProbeOracleError(f"thread count must be >= 1, got {n}")
    _threads = min(n, _PRESET_THREADS)
    if backend_name() == "numba":
        import numba

        numba.set_num_threads(_threads)


def get_threads():
    return _threads if _threads is not None else default_threads()
