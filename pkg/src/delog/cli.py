"""``delog`` command line: compress, decompress, verify, bench.

Exit status: 0 success, 1 data or I/O error, 2 usage error.  Every failure
is reported as one diagnostic line on stderr; nothing escapes as a traceback.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
import tempfile
from pathlib import Path
from typing import BinaryIO, Iterator, Sequence

from . import __version__
from .bench import ablation_configs, corpus_files, run_bench, standard_configs
from .container import KernelId
from .errors import DelogError
from .pipeline import (DEFAULT_BLOCK_LINES, RunConfig, compress_stream, decompress_stream,
                       default_workers, verify_file)
from .signatures import BUILTIN_RULES, Features, Mode, load_rules

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2
STDIO = "-"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _level(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer level, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    io_opts = _Parser(add_help=False)
    io_opts.add_argument("-i", "--input", help="input path, '-' for stdin")
    io_opts.add_argument("-o", "--output", help="output path, '-' for stdout")

    cfg = _Parser(add_help=False)
    cfg.add_argument("--mode", choices=("delog", "delog-l"), default="delog")
    cfg.add_argument("--kernel", choices=[k.label for k in KernelId], default="lzma")
    cfg.add_argument("--level", type=_level, help="kernel level (default: the kernel's highest)")
    cfg.add_argument("--block-lines", type=_positive, default=DEFAULT_BLOCK_LINES)
    cfg.add_argument("--features", choices=[f.value for f in Features], default="full",
                     help="signature features: binary, intrinsic or full")
    cfg.add_argument("--rules", metavar="FILE",
                     help="extra named rules, one 'name<TAB>layout<TAB>regex' per line")

    workers = _Parser(add_help=False)
    workers.add_argument("--workers", type=_positive, help="worker processes (env DELOG_WORKERS, default 4)")

    p = _Parser(prog="delog", description="Lossless log compressor using pattern-signature grouping.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="{compress,decompress,verify,bench}")
    sub.required = True
    sub.add_parser("compress", parents=[io_opts, cfg, workers], help="compress a log file")
    sub.add_parser("decompress", parents=[io_opts, workers], help="restore a .dlg archive")
    sub.add_parser("verify", parents=[io_opts, cfg, workers],
                   help="compress, decompress and compare hashes")
    b = sub.add_parser("bench", parents=[cfg, workers], help="measure CR, CS and DCS on a corpus")
    b.add_argument("corpus", help="a log file or a directory of log files")
    b.add_argument("--ablation", action="store_true",
                   help="run the binary/intrinsic/full settings instead of the mode comparison")
    b.add_argument("--repeat", type=_positive, default=1, help="report the best of N timed runs")
    b.add_argument("--csv", metavar="FILE", help="also write the table as CSV")
    b.add_argument("--markdown", metavar="FILE", help="write the markdown table here instead of stdout")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    try:
        workers = args.workers or default_workers()
        rules = load_rules(args.rules) if args.rules else BUILTIN_RULES
        return RunConfig(mode=Mode.parse(args.mode), kernel=KernelId.parse(args.kernel),
                         level=args.level, block_lines=args.block_lines, workers=workers,
                         features=Features(args.features), rules=rules, rules_path=args.rules)
    except OSError as e:
        raise UsageError(f"cannot read rules file: {e}") from None
    except ValueError as e:
        raise UsageError(str(e)) from None


@contextlib.contextmanager
def _open_in(path: str | None) -> Iterator[BinaryIO]:
    if path is None:
        raise UsageError("an input is required (-i PATH or -i -)")
    if path == STDIO:
        yield sys.stdin.buffer
        return
    with open(path, "rb") as f:
        yield f


@contextlib.contextmanager
def _open_out(path: str) -> Iterator[BinaryIO]:
    """Write to a temp file beside ``path`` and rename on success only."""
    if path == STDIO:
        yield sys.stdout.buffer
        sys.stdout.buffer.flush()
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            yield f
        os.replace(tmp, target)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _default_output(inp: str | None, command: str) -> str:
    if inp in (None, STDIO):
        return STDIO
    if command == "compress":
        return inp + ".dlg"
    return inp[:-4] if inp.endswith(".dlg") else inp + ".out"


def cmd_compress(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    out = args.output or _default_output(args.input, "compress")
    with _open_in(args.input) as src, _open_out(out) as dst:
        stats = compress_stream(src, dst, config)
    if out != STDIO:
        print(f"{stats.original_bytes} -> {stats.compressed_bytes} bytes "
              f"(ratio {stats.ratio:.3f}, {stats.blocks} blocks)", file=sys.stderr)
    return EXIT_OK


def cmd_decompress(args: argparse.Namespace) -> int:
    workers = args.workers or default_workers()
    out = args.output or _default_output(args.input, "decompress")
    with _open_in(args.input) as src:
        archive = src.read()
    with _open_out(out) as dst:
        decompress_stream(archive, dst, workers)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    if args.input in (None, STDIO):
        raise UsageError("verify needs an input file path")
    result = verify_file(args.input, config)
    print(result.describe(), file=sys.stdout if result.ok else sys.stderr)
    return EXIT_OK if result.ok else EXIT_DATA


def cmd_bench(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    try:
        files = corpus_files(args.corpus)
    except FileNotFoundError as e:
        raise UsageError(str(e)) from None
    configs = ablation_configs(config) if args.ablation else standard_configs(config)
    report = run_bench(files, configs, args.repeat)
    table = report.to_markdown()
    if args.markdown:
        Path(args.markdown).write_text(table)
    else:
        sys.stdout.write(table)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    for dataset, label, msg in report.errors:
        print(f"bench: {dataset} [{label}] failed: {msg}", file=sys.stderr)
    return EXIT_DATA if report.errors else EXIT_OK


COMMANDS = {"compress": cmd_compress, "decompress": cmd_decompress, "verify": cmd_verify,
            "bench": cmd_bench}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"delog: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DelogError as e:
        print(f"delog: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"delog: {e.filename or ''}{': ' if e.filename else ''}{e.strerror or e}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        print("delog: interrupted", file=sys.stderr)
        return 130
    except SystemExit as e:  # --help / --version
        return e.code if isinstance(e.code, int) else EXIT_OK
    except Exception as e:  # last line of defence: never a traceback
        print(f"delog: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
