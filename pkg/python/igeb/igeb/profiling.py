import functools
import json
import threading
import time


_ACTIVE_PROFILERS = []
_LOCK = threading.Lock()


class Profiler:
    """Profiler recording execution time of igeb functions.

    The most expensive functions (assembly, Newton steps, reconstruction and
    certificate scans) are instrumented, and report the time spent inside them
    to all active profilers. The ``Profiler`` class is used as a context
    manager to collect this information.

    .. code-block:: python

        import igeb

        with igeb.Profiler() as profiler:
            # run some simulations
            ...

        print(profiler.as_short_table())
    """

    def __init__(self):
        self._timings = {}

    def __enter__(self):
        self._timings.clear()
        with _LOCK:
            _ACTIVE_PROFILERS.append(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        with _LOCK:
            _ACTIVE_PROFILERS.remove(self)

    def _record(self, name, elapsed):
        with _LOCK:
            calls, total = self._timings.get(name, (0, 0.0))
            self._timings[name] = (calls + 1, total + elapsed)

    def as_json(self):
        """Get current profiling data formatted as JSON."""
        data = {
            name: {"calls": calls, "total": total, "mean": total / calls}
            for name, (calls, total) in sorted(self._timings.items())
        }
        return json.dumps(data, indent=2)

    def as_table(self):
        """Get current profiling data formatted as a table."""
        lines = [
            f"{'function':<40} {'calls':>8} {'total (s)':>12} {'mean (s)':>12}",
            "-" * 75,
        ]
        for name, (calls, total) in sorted(self._timings.items()):
            lines.append(f"{name:<40} {calls:>8} {total:>12.6f} {total / calls:>12.6f}")
        return "\n".join(lines)

    def as_short_table(self):
        """
        Get current profiling data formatted as a table, using short functions names.
        """
        lines = [f"{'function':<24} {'calls':>8} {'total (s)':>12}", "-" * 46]
        for name, (calls, total) in sorted(self._timings.items()):
            short = name.rsplit(".", 1)[-1]
            lines.append(f"{short:<24} {calls:>8} {total:>12.6f}")
        return "\n".join(lines)


def profiled(function):
    """Report the execution time of ``function`` to all active profilers."""
    name = f"{function.__module__}.{function.__qualname__}"

    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        if not _ACTIVE_PROFILERS:
            return function(*args, **kwargs)

        start = time.perf_counter()
        try:
            return function(*args, **kwargs)
        finally:
            elapsed = time.perf_counter() - start
            with _LOCK:
                profilers = list(_ACTIVE_PROFILERS)
            for profiler in profilers:
                profiler._record(name, elapsed)

    return wrapper
