"""Collects one PASS/FAIL/SKIP line per acceptance criterion for the terminal summary."""

import contextlib
import sys
import time

RESULTS: list[str] = []


@contextlib.contextmanager
def criterion(number, title, budget_s=None):
    """Record the outcome of the enclosed block; the block may set ``info["detail"]``."""
    info = {"detail": ""}
    t0 = time.perf_counter()
    status = "FAIL"
    try:
        yield info
        status = "PASS"
    except BaseException as e:
        if type(e).__name__ == "Skipped":
            status = "SKIP"
            info["detail"] = info["detail"] or str(e)
        else:
            info["detail"] = (info["detail"] + " " if info["detail"] else "") + f"{type(e).__name__}: {e}".splitlines()[0]
        raise
    finally:
        dt = time.perf_counter() - t0
        if status == "PASS" and budget_s is not None and dt >= budget_s:
            status = "FAIL"
            info["detail"] += f" over budget {budget_s:g}s"
        line = f"[{status}] {number:>2}. {title} ({dt:.2f}s) {info['detail']}".rstrip()
        RESULTS.append(line)
        print(line, file=sys.stderr)
        if status == "FAIL" and budget_s is not None and dt >= budget_s and sys.exc_info()[0] is None:
            raise AssertionError(f"criterion {number} took {dt:.2f}s, budget {budget_s:g}s")
