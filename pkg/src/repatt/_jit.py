"""Optional numba acceleration.

Set ``NUMBA_DISABLE_JIT=1`` to run the stepping kernel as plain Python.
"""

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator


__all__ = ["njit", "NUMBA_AVAILABLE"]
