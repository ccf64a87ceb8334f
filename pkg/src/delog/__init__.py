"""Lossless log compression by pattern-signature grouping.

Tokens are scanned once, keyed by a signature built from their structure and
context, and routed into per-signature groups that are delta, dictionary or
raw encoded before a general-purpose kernel finishes each block.
"""

__version__ = "0.1.0"

from .container import KernelId
from .errors import DelogError
from .pipeline import (RunConfig, compress_bytes, compress_file, decompress_bytes,
                       decompress_file, verify_file)
from .signatures import Features, Mode

__all__ = [
    "DelogError", "Features", "KernelId", "Mode", "RunConfig", "compress_bytes", "compress_file",
    "decompress_bytes", "decompress_file", "verify_file", "__version__",
]
