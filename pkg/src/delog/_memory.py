"""Hand freed heap back to the OS between pipeline stages.

Encoding a block leaves many megabytes of freed small objects on the C
heap; glibc keeps them mapped unless asked, so the kernel stage would stack
its own working set on top.  Elsewhere this is a no-op.
"""

import ctypes
import ctypes.util
import sys

_trim = None
if sys.platform.startswith("linux"):
    try:
        _trim = ctypes.CDLL(ctypes.util.find_library("c") or "libc.so.6").malloc_trim
        _trim.argtypes = [ctypes.c_size_t]
        _trim.restype = ctypes.c_int
    except (OSError, AttributeError):  # musl and friends
        _trim = None


def release_free_memory() -> None:
    if _trim is not None:
        _trim(0)
