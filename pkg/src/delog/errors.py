"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class DelogError(Exception):
    """Base class. ``block`` is the failing block index when known."""

    def __init__(self, message: str, block: int | None = None):
        super().__init__(message)
        self.message = message
        self.block = block

    def __str__(self) -> str:
        if self.block is None:
            return self.message
        return f"block {self.block}: {self.message}"

    def __reduce__(self):
        return type(self), (self.message, self.block)

    def at_block(self, block: int) -> "DelogError":
        """Attach a block index after the fact (errors raised below the block layer)."""
        if self.block is None:
            self.block = block
        return self


# codec errors
class CodecError(DelogError):
    pass


class UnterminatedVarint(CodecError):
    pass


class VarintOverflow(CodecError):
    pass


class MalformedBlob(CodecError):
    pass


# container errors
class ArchiveError(DelogError):
    pass


class BadMagic(ArchiveError):
    pass


class UnsupportedVersion(ArchiveError):
    pass


class TruncatedArchive(ArchiveError):
    pass


class MalformedArchive(ArchiveError):
    pass


class MalformedTable(ArchiveError):
    pass


class KernelError(ArchiveError):
    pass


# decompression errors
class DecodeError(DelogError):
    pass


class MalformedStream(DecodeError):
    pass


class GroupExhausted(DecodeError):
    pass


class TrailingValues(DecodeError):
    pass
