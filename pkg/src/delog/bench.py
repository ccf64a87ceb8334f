"""CR / CS / DCS measurement over a corpus of log files."""

from __future__ import annotations

import csv
import io
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import psutil

from .container import KernelId, get_kernel
from .pipeline import RunConfig, compress_file, decompress_file
from .signatures import Features, Mode

CSV_FIELDS = ("dataset", "config", "orig_bytes", "comp_bytes", "cr", "cs_mbps", "dcs_mbps",
              "peak_mem_bytes")


class PeakMemory:
    """Samples the RSS of this process and its children on a background thread."""

    def __init__(self, interval: float = 0.005):
        self.interval = interval
        self.peak = 0
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._proc = psutil.Process()

    def sample(self) -> int:
        total = self._proc.memory_info().rss
        for child in self._proc.children(recursive=True):
            try:
                total += child.memory_info().rss
            except psutil.Error:
                pass
        self.peak = max(self.peak, total)
        return total

    def _run(self):
        while not self._stop.wait(self.interval):
            self.sample()

    def __enter__(self) -> "PeakMemory":
        self.sample()
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        self._thread.join()
        self.sample()


@dataclass
class BenchRow:
    dataset: str
    config: str
    orig_bytes: int
    comp_bytes: int
    cs_mbps: float
    dcs_mbps: float
    peak_mem_bytes: int

    @property
    def cr(self) -> float:
        return self.orig_bytes / self.comp_bytes

    def values(self) -> tuple:
        return (self.dataset, self.config, self.orig_bytes, self.comp_bytes, round(self.cr, 4),
                round(self.cs_mbps, 3), round(self.dcs_mbps, 3), self.peak_mem_bytes)


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    errors: list[tuple[str, str, str]] = field(default_factory=list)

    def row(self, dataset: str, config: str) -> BenchRow:
        for r in self.rows:
            if r.dataset == dataset and r.config == config:
                return r
        raise KeyError((dataset, config))

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in self.rows:
            w.writerow(r.values())
        return out.getvalue()

    def to_markdown(self) -> str:
        lines = ["| " + " | ".join(CSV_FIELDS) + " |", "|" + "---|" * len(CSV_FIELDS)]
        for r in self.rows:
            lines.append("| " + " | ".join(str(v) for v in r.values()) + " |")
        for dataset, config, msg in self.errors:
            lines.append(f"\nFAILED {dataset} [{config}]: {msg}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BenchConfig:
    """A labelled pipeline configuration; ``config=None`` is the plain-kernel baseline."""

    label: str
    config: RunConfig | None
    kernel: KernelId = KernelId.LZMA
    level: int | None = None


def _mbps(n: int, seconds: float) -> float:
    return n / 1e6 / seconds if seconds > 0 else float("inf")


def run_one(path: Path, bc: BenchConfig, tmpdir: str) -> BenchRow:
    data_len = path.stat().st_size
    with PeakMemory() as mem:
        if bc.config is None:
            kernel = get_kernel(bc.kernel)
            raw = path.read_bytes()
            t0 = time.perf_counter()
            packed = kernel.compress_standalone(raw, bc.level)
            t1 = time.perf_counter()
            restored = kernel.decompress(packed)
            t2 = time.perf_counter()
            if restored != raw:
                raise RuntimeError("baseline kernel round trip mismatch")
            comp = len(packed)
        else:
            arc = os.path.join(tmpdir, "bench.dlg")
            out = os.path.join(tmpdir, "bench.out")
            t0 = time.perf_counter()
            stats = compress_file(path, arc, bc.config)
            t1 = time.perf_counter()
            decompress_file(arc, out, bc.config.workers)
            t2 = time.perf_counter()
            if Path(out).read_bytes() != path.read_bytes():
                raise RuntimeError("round trip mismatch")
            comp = stats.compressed_bytes
    return BenchRow(path.stem, bc.label, data_len, comp, _mbps(data_len, t1 - t0),
                    _mbps(data_len, t2 - t1), mem.peak)


def standard_configs(base: RunConfig, modes: Sequence[Mode] = (Mode.DELOG, Mode.DELOG_L),
                     baseline: bool = True) -> list[BenchConfig]:
    k = get_kernel(base.kernel).id
    out = [BenchConfig(f"{m.label}+{k.label}", replace(base, mode=m), k, base.level) for m in modes]
    if baseline:
        out.append(BenchConfig(k.label, None, k, base.level))
    return out


def ablation_configs(base: RunConfig) -> list[BenchConfig]:
    k = get_kernel(base.kernel).id
    return [BenchConfig(f"{base.mode.label}+{k.label}[{f.value}]", replace(base, features=f), k,
                        base.level)
            for f in (Features.BINARY, Features.INTRINSIC, Features.FULL)]


def corpus_files(root: str | os.PathLike) -> list[Path]:
    root = Path(root)
    if root.is_file():
        return [root]
    if not root.is_dir():
        raise FileNotFoundError(f"corpus not found: {root}")
    return sorted(p for p in root.rglob("*") if p.is_file() and not p.name.startswith("."))


def _best(rows: list[BenchRow]) -> BenchRow:
    """Fastest timings and highest memory peak over repeated runs."""
    r = rows[0]
    return replace(r, cs_mbps=max(x.cs_mbps for x in rows), dcs_mbps=max(x.dcs_mbps for x in rows),
                   peak_mem_bytes=max(x.peak_mem_bytes for x in rows))


def run_bench(files: Iterable[Path], configs: Sequence[BenchConfig], repeat: int = 1) -> BenchReport:
    """One row per (file, config), timings best of ``repeat`` runs.

    A failing pair is recorded and the run goes on.
    """
    report = BenchReport()
    with tempfile.TemporaryDirectory(prefix="delog-bench-") as tmp:
        for path in files:
            for bc in configs:
                try:
                    report.rows.append(_best([run_one(path, bc, tmp) for _ in range(repeat)]))
                except Exception as e:  # report and continue with the next pair
                    report.errors.append((path.stem, bc.label, f"{type(e).__name__}: {e}"))
    return report
