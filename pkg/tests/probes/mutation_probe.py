"""Feed mutated archives to ``delog decompress`` and classify every exit.

Usage: mutation_probe.py COUNT SEED WORKDIR.  Runs in its own process so a
hard crash shows up as the probe's exit status.  Prints JSON counts:
``restored`` (exit 0), ``clean`` (exit 1 with a format diagnostic) and
``bad`` (anything else, with examples).
"""

import contextlib
import io
import json
import random
import sys
from pathlib import Path

from delog import cli
from delog.container import KernelId
from delog.corpora import fuzz_corpus, loghub_sample
from delog.pipeline import RunConfig, compress_bytes
from delog.signatures import Mode


def archives() -> list[bytes]:
    data = (loghub_sample("OpenSSH", 300) + fuzz_corpus(150)
            + b"\nat 12:00:01,123 from 10.0.0.1 id 000123 v 1.2-3\n" * 30)
    setups = [(KernelId.NONE, Mode.DELOG), (KernelId.NONE, Mode.DELOG_L), (KernelId.LZMA, Mode.DELOG),
              (KernelId.GZIP, Mode.DELOG_L), (KernelId.BZIP2, Mode.DELOG)]
    return [compress_bytes(data, RunConfig(kernel=k, mode=m, block_lines=200, workers=1))
            for k, m in setups]


def mutate(rng: random.Random, data: bytes) -> bytes:
    b = bytearray(data)
    op = rng.randrange(7)
    i = rng.randrange(len(b))
    if op == 0:
        b[i] ^= 1 << rng.randrange(8)
    elif op == 1:
        for _ in range(rng.randint(2, 16)):
            b[rng.randrange(len(b))] = rng.randrange(256)
    elif op == 2:
        del b[i:]
    elif op == 3:
        b[i:i] = bytes(rng.randrange(256) for _ in range(rng.randint(1, 8)))
    elif op == 4:
        del b[i:i + rng.randint(1, 64)]
    elif op == 5:
        b[rng.randrange(4, 9)] = rng.randrange(256)  # header fields
    else:
        j = rng.randrange(len(b))
        b[i:i] = b[j:j + rng.randint(1, 64)]
    return bytes(b)


def main() -> None:
    count, seed, work = int(sys.argv[1]), int(sys.argv[2]), Path(sys.argv[3])
    rng = random.Random(seed)
    sources = archives()
    src, out = work / "in.dlg", work / "out.log"
    counts = {"restored": 0, "clean": 0, "bad": 0}
    bad = []
    for n in range(count):
        src.write_bytes(mutate(rng, sources[n % len(sources)]))
        err = io.StringIO()
        with contextlib.redirect_stderr(err):
            try:
                code = cli.main(["decompress", "-i", str(src), "-o", str(out), "--workers", "1"])
            except BaseException as e:  # must never happen
                code = f"raised {type(e).__name__}: {e}"
        msg = err.getvalue().strip()
        if code == 0:
            counts["restored"] += 1
        elif code == 1 and msg.startswith("delog: ") and "internal error" not in msg and "\n" not in msg:
            counts["clean"] += 1
        else:
            counts["bad"] += 1
            bad.append({"n": n, "code": str(code), "stderr": msg[:300]})
    print(json.dumps({**counts, "examples": bad[:5]}))


if __name__ == "__main__":
    main()
