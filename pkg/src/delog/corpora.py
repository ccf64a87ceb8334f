"""Deterministic test corpora.

``loghub_sample(system, lines)`` produces text in the line formats of the
public LogHub 2k samples (same headers, message templates and variable
shapes) with values drawn from seeded generators: monotone clocks with
jitter, recycled IP/PID/block-id pools, skewed template frequencies.  They
stand in for the real samples when those cannot be fetched.

``fuzz_corpus`` and ``timestamp_ip_corpus`` target robustness and the
named-pattern stage respectively.

Run ``python -m delog.corpora OUTDIR`` to write every corpus to disk.
"""

from __future__ import annotations

import random
import sys
from datetime import datetime, timedelta
from pathlib import Path
from typing import Callable

_MONTHS = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]
_DAYS = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"]


class _Clock:
    def __init__(self, rng: random.Random, start: datetime, mean_gap: float):
        self.rng = rng
        self.t = start
        self.mean_gap = mean_gap

    def tick(self) -> datetime:
        self.t += timedelta(seconds=self.rng.expovariate(1 / self.mean_gap))
        return self.t


def _pool(rng: random.Random, make: Callable[[], str], size: int) -> Callable[[], str]:
    items = [make() for _ in range(size)]
    weights = [1 / (i + 1) for i in range(size)]

    def pick() -> str:
        return rng.choices(items, weights)[0]

    return pick


def _ip(rng: random.Random, prefix: str | None = None) -> str:
    if prefix:
        return prefix + ".".join(str(rng.randint(0, 255)) for _ in range(4 - prefix.count(".")))
    return ".".join(str(rng.randint(1, 254)) for _ in range(4))


def _weighted(rng: random.Random, table):
    return rng.choices([t[1] for t in table], [t[0] for t in table])[0]


# ---------------------------------------------------------------------------
# systems

def _apache(rng: random.Random, n: int) -> list[str]:
    clock = _Clock(rng, datetime(2005, 12, 4, 4, 47, 44), 40)
    client = _pool(rng, lambda: _ip(rng), 60)
    child = [rng.randint(1000, 9999)]
    out = []
    for _ in range(n):
        t = clock.tick()
        ts = f"[{_DAYS[t.weekday()]} {_MONTHS[t.month - 1]} {t.day:02d} {t:%H:%M:%S} {t.year}]"
        child[0] += rng.randint(0, 3)
        msg = _weighted(rng, [
            (30, lambda: f"[notice] jk2_init() Found child {child[0]} in scoreboard slot {rng.randint(6, 10)}"),
            (25, lambda: "[notice] workerEnv.init() ok /etc/httpd/conf/workers2.properties"),
            (25, lambda: f"[error] mod_jk child workerEnv in error state {rng.choice([6, 6, 6, 7, 8])}"),
            (10, lambda: f"[error] [client {client()}] Directory index forbidden by rule: /var/www/html/"),
            (5, lambda: f"[error] jk2_init() Can't find child {child[0] + rng.randint(1, 5)} in scoreboard"),
            (5, lambda: f"[error] mod_jk child init 1 -2"),
        ])()
        out.append(f"{ts} {msg}")
    return out


def _hdfs(rng: random.Random, n: int) -> list[str]:
    clock = _Clock(rng, datetime(2008, 11, 9, 20, 35, 15), 1.5)
    node = _pool(rng, lambda: _ip(rng, "10.25"), 200)
    blocks = [rng.randint(-(1 << 63), (1 << 63) - 1) for _ in range(300)]
    out = []
    for _ in range(n):
        t = clock.tick()
        blk = f"blk_{rng.choice(blocks)}"
        thread = rng.choice([13, 19, 35, 143, 145, 147, 148, 151, 154, 155, 157])
        msg = _weighted(rng, [
            (30, lambda: f"INFO dfs.DataNode$PacketResponder: PacketResponder {rng.randint(0, 2)} for block {blk} terminating"),
            (25, lambda: f"INFO dfs.DataNode$PacketResponder: Received block {blk} of size {rng.choice([67108864, 67108864, rng.randint(1000, 67108864)])} from /{node()}"),
            (20, lambda: f"INFO dfs.DataNode$DataXceiver: Receiving block {blk} src: /{node()}:{rng.randint(30000, 60000)} dest: /{node()}:50010"),
            (15, lambda: f"INFO dfs.FSNamesystem: BLOCK* NameSystem.addStoredBlock: blockMap updated: {node()}:50010 is added to {blk} size {rng.choice([67108864, rng.randint(1000, 67108864)])}"),
            (5, lambda: f"INFO dfs.FSNamesystem: BLOCK* NameSystem.allocateBlock: /user/root/rand/_temporary/_task_200811092030_0001_m_{rng.randint(0, 1999):06d}_0/part-{rng.randint(0, 1999):05d}. {blk}"),
            (5, lambda: f"INFO dfs.DataNode$DataXceiver: {node()}:50010 Served block {blk} to /{node()}"),
        ])()
        out.append(f"{t:%y%m%d} {t:%H%M%S} {thread} {msg}")
    return out


def _bgl(rng: random.Random, n: int) -> list[str]:
    clock = _Clock(rng, datetime(2005, 6, 3, 15, 42, 50), 3)
    loc = _pool(rng, lambda: f"R{rng.randint(0, 7):02d}-M{rng.randint(0, 1)}-N{rng.choice('0123456789ABCDEF')}-C:J{rng.randint(2, 17):02d}-U{rng.choice([1, 11])}", 150)
    out = []
    for _ in range(n):
        t = clock.tick()
        node = loc()
        msg = _weighted(rng, [
            (35, lambda: "RAS KERNEL INFO instruction cache parity error corrected"),
            (20, lambda: f"RAS KERNEL INFO generating core.{rng.randint(1, 9999)}"),
            (15, lambda: f"RAS KERNEL INFO {rng.randint(1, 999999)} double-hummer alignment exceptions"),
            (10, lambda: f"RAS KERNEL FATAL data TLB error interrupt"),
            (10, lambda: f"RAS KERNEL INFO CE sym {rng.randint(0, 31)}, at 0x{rng.randint(0, 1 << 32):08x}, mask 0x{rng.randint(0, 255):02x}"),
            (10, lambda: f"RAS APP FATAL ciod: failed to read message prefix on control stream (CioStream socket to {_ip(rng, '172.16.96.')}:{rng.randint(30000, 60000)}"),
        ])()
        label = "-" if rng.random() < 0.9 else "KERNDTLB"
        epoch = int(t.timestamp())
        out.append(f"{label} {epoch} {t:%Y.%m.%d} {node} {t:%Y-%m-%d-%H.%M.%S}.{t.microsecond:06d} {node} {msg}")
    return out


def _openssh(rng: random.Random, n: int) -> list[str]:
    clock = _Clock(rng, datetime(2017, 12, 10, 6, 55, 46), 2)
    attacker = _pool(rng, lambda: _ip(rng), 40)
    users = ["root", "admin", "test", "oracle", "webmaster", "guest", "user", "support", "ubuntu", "pi"]
    pid = [24200]
    out = []
    for _ in range(n):
        t = clock.tick()
        if rng.random() < 0.3:
            pid[0] += rng.randint(1, 6)
        ip = attacker()
        u = rng.choice(users)
        port = rng.randint(1024, 65535)
        msg = _weighted(rng, [
            (20, lambda: f"pam_unix(sshd:auth): authentication failure; logname= uid=0 euid=0 tty=ssh ruser= rhost={ip}" + (f"  user={u}" if rng.random() < 0.5 else "")),
            (20, lambda: f"Failed password for {'invalid user ' if rng.random() < 0.5 else ''}{u} from {ip} port {port} ssh2"),
            (12, lambda: f"Received disconnect from {ip}: 11: Bye Bye [preauth]"),
            (10, lambda: f"Invalid user {u} from {ip}"),
            (10, lambda: f"input_userauth_request: invalid user {u} [preauth]"),
            (8, lambda: f"Connection closed by {ip} [preauth]"),
            (8, lambda: f"reverse mapping checking getaddrinfo for {rng.choice(['ns.example.com', 'host-' + ip.replace('.', '-') + '.isp.net'])} [{ip}] failed - POSSIBLE BREAK-IN ATTEMPT!"),
            (6, lambda: f"message repeated {rng.randint(2, 5)} times: [ Failed password for {u} from {ip} port {port} ssh2]"),
            (6, lambda: f"PAM {rng.randint(1, 5)} more authentication failures; logname= uid=0 euid=0 tty=ssh ruser= rhost={ip}  user={u}"),
        ])()
        out.append(f"{_MONTHS[t.month - 1]} {t.day:2d} {t:%H:%M:%S} LabSZ sshd[{pid[0]}]: {msg}")
    return out


def _zookeeper(rng: random.Random, n: int) -> list[str]:
    clock = _Clock(rng, datetime(2015, 7, 29, 17, 41, 44), 20)
    peer = _pool(rng, lambda: _ip(rng, "10.10.34."), 13)
    sess = [0x14ede63a5a70000]
    out = []
    for _ in range(n):
        t = clock.tick()
        ts = f"{t:%Y-%m-%d %H:%M:%S},{t.microsecond // 1000:03d}"
        sess[0] += rng.randint(0, 2)
        level, where, msg = _weighted(rng, [
            (25, lambda: ("INFO ", "NIOServerCxn.Factory:0.0.0.0/0.0.0.0:2181:NIOServerCnxnFactory@197", f"Accepted socket connection from /{peer()}:{rng.randint(30000, 60000)}")),
            (20, lambda: ("INFO ", f"NIOServerCxn.Factory:0.0.0.0/0.0.0.0:2181:NIOServerCnxn@1001", f"Closed socket connection for client /{peer()}:{rng.randint(30000, 60000)} which had sessionid 0x{sess[0]:x}")),
            (15, lambda: ("INFO ", "CommitProcessor:1:ZooKeeperServer@595", f"Established session 0x{sess[0]:x} with negotiated timeout {rng.choice([10000, 20000, 30000])} for client /{peer()}:{rng.randint(30000, 60000)}")),
            (15, lambda: ("WARN ", f"SendWorker:{rng.randint(1, 3)}:QuorumCnxManager$SendWorker@679", "Interrupted while waiting for message on queue")),
            (10, lambda: ("INFO ", "QuorumPeer[myid=1]/0:0:0:0:0:0:0:0:2181:FastLeaderElection@774", f"Notification time out: {rng.choice([200, 400, 800, 1600, 3200, 6400, 12800, 25600, 51200, 60000])}")),
            (10, lambda: ("WARN ", f"RecvWorker:{rng.randint(1, 3)}:QuorumCnxManager$RecvWorker@765", "Interrupting SendWorker")),
            (5, lambda: ("ERROR", "LearnerHandler-/10.10.34.13:37177:LearnerHandler@562", "Unexpected exception causing shutdown while sock still open")),
        ])()
        out.append(f"{ts} - {level} [{where}] - {msg}")
    return out


def _healthapp(rng: random.Random, n: int) -> list[str]:
    clock = _Clock(rng, datetime(2017, 12, 23, 22, 15, 29), 0.4)
    steps = [3579]
    total = [1514038440000]
    out = []
    for _ in range(n):
        t = clock.tick()
        ts = f"{t:%Y%m%d-%H:%M:%S}:{t.microsecond // 1000}"
        steps[0] += rng.randint(0, 2)
        comp, msg = _weighted(rng, [
            (30, lambda: ("Step_LSC", f"onStandStepChanged {steps[0]}")),
            (15, lambda: ("Step_LSC", f"onExtend:{total[0] + rng.randint(0, 90000)} {rng.randint(0, 20)} 0 {rng.randint(0, 4)}")),
            (15, lambda: ("Step_SPUtils", f" getTodayTotalDetailSteps = {total[0]}##{steps[0] + 3000}##{rng.randint(500000, 600000)}##{rng.randint(8000, 9000)}##{rng.randint(12000, 13000)}##{rng.randint(27000000, 28000000)}")),
            (10, lambda: ("Step_StandReportReceiver", "onReceive action: android.intent.action.SCREEN_ON")),
            (10, lambda: ("Step_LSC", "processHandleBroadcastAction action:android.intent.action.SCREEN_ON")),
            (10, lambda: ("Step_StandStepCounter", "flush sensor data")),
            (10, lambda: ("Step_ExtSDM", f"calculateCaloriesWithCache totalCalories={rng.randint(120000, 130000)}")),
        ])()
        out.append(f"{ts}|{comp}|30002312|{msg}")
    return out


def _proxifier(rng: random.Random, n: int) -> list[str]:
    clock = _Clock(rng, datetime(2016, 10, 30, 16, 49, 6), 3)
    host = _pool(rng, lambda: rng.choice(["www.google.com", "play.google.com", "clients4.google.com",
                                          "mail.qq.com", "api.github.com", "outlook.office365.com",
                                          "s.youtube.com", "update.microsoft.com"]) + f":{rng.choice([80, 443, 443])}", 8)
    apps = ["chrome.exe", "chrome.exe", "Skype.exe", "WeChat.exe", "putty.exe", "svchost.exe *64"]
    out = []
    for _ in range(n):
        t = clock.tick()
        ts = f"[{t.month:02d}.{t.day:02d} {t:%H:%M:%S}]"
        app, h = rng.choice(apps), host()
        msg = _weighted(rng, [
            (40, lambda: f"{h} open through proxy proxy.cse.cuhk.edu.hk:5070 HTTPS"),
            (40, lambda: f"{h} close, {rng.choice([0, rng.randint(100, 99999)])} bytes{' (' + str(round(rng.random() * 900, 1)) + ' KB)' if rng.random() < 0.2 else ''} sent, {rng.randint(0, 999999)} bytes received, lifetime {rng.choice(['<1 sec', f'00:{rng.randint(0, 59):02d}', f'{rng.randint(1, 59):02d}:{rng.randint(0, 59):02d}'])}"),
            (15, lambda: f"{h} error : Could not connect through proxy proxy.cse.cuhk.edu.hk:5070 - Proxy server cannot establish a connection with the target, status code 403"),
            (5, lambda: f"{h} open directly"),
        ])()
        out.append(f"{ts} {app} - {msg}")
    return out


def _linux(rng: random.Random, n: int) -> list[str]:
    clock = _Clock(rng, datetime(2005, 6, 14, 15, 16, 1), 60)
    remote = _pool(rng, lambda: _ip(rng), 50)
    pid = [19939]
    out = []
    for _ in range(n):
        t = clock.tick()
        pid[0] += rng.randint(0, 30)
        ip = remote()
        msg = _weighted(rng, [
            (30, lambda: f"sshd(pam_unix)[{pid[0]}]: authentication failure; logname= uid=0 euid=0 tty=NODEVssh ruser= rhost={ip}" + ("  user=root" if rng.random() < 0.4 else "")),
            (20, lambda: f"su(pam_unix)[{pid[0]}]: session {rng.choice(['opened', 'closed'])} for user {rng.choice(['cyrus', 'news', 'root'])}" + (" by (uid=0)" if rng.random() < 0.5 else "")),
            (15, lambda: f"ftpd[{pid[0]}]: connection from {ip} () at {_DAYS[t.weekday()]} {_MONTHS[t.month - 1]} {t.day:2d} {t:%H:%M:%S} {t.year}"),
            (10, lambda: f"logrotate: ALERT exited abnormally with [1]"),
            (10, lambda: f"kernel: audit({int(t.timestamp())}.{rng.randint(0, 999):03d}:{rng.randint(1, 99)}): initialized"),
            (10, lambda: f"xinetd[{rng.randint(1000, 3000)}]: START: {rng.choice(['ftp', 'telnet'])} pid={pid[0]} from={ip}"),
            (5, lambda: f"cups: cupsd shutdown succeeded"),
        ])()
        out.append(f"{_MONTHS[t.month - 1]} {t.day:2d} {t:%H:%M:%S} combo {msg}")
    return out


def _spark(rng: random.Random, n: int) -> list[str]:
    clock = _Clock(rng, datetime(2017, 6, 9, 20, 10, 40), 0.8)
    task = [0]
    out = []
    for _ in range(n):
        t = clock.tick()
        task[0] += rng.randint(0, 2)
        stage = task[0] // 40
        msg = _weighted(rng, [
            (25, lambda: f"INFO executor.Executor: Running task {task[0] % 40}.0 in stage {stage}.0 (TID {task[0]})"),
            (25, lambda: f"INFO executor.Executor: Finished task {task[0] % 40}.0 in stage {stage}.0 (TID {task[0]}). {rng.randint(2000, 2400)} bytes result sent to driver"),
            (15, lambda: f"INFO storage.BlockManager: Found block rdd_{stage}_{task[0] % 40} locally"),
            (15, lambda: f"INFO executor.CoarseGrainedExecutorBackend: Got assigned task {task[0]}"),
            (10, lambda: f"INFO storage.MemoryStore: Block broadcast_{stage} stored as values in memory (estimated size {round(rng.uniform(1, 30), 1)} KB, free {round(rng.uniform(300, 400), 1)} MB)"),
            (10, lambda: f"INFO broadcast.TorrentBroadcast: Reading broadcast variable {stage} took {rng.randint(5, 300)} ms"),
        ])()
        out.append(f"{t:%y/%m/%d %H:%M:%S} {msg}")
    return out


SYSTEMS: dict[str, Callable[[random.Random, int], list[str]]] = {
    "Apache": _apache,
    "HDFS": _hdfs,
    "BGL": _bgl,
    "OpenSSH": _openssh,
    "Zookeeper": _zookeeper,
    "HealthApp": _healthapp,
    "Proxifier": _proxifier,
    "Linux": _linux,
    "Spark": _spark,
}


def loghub_sample(system: str, lines: int = 2000, seed: int = 0) -> bytes:
    rng = random.Random(f"{system}:{seed}")
    return ("\n".join(SYSTEMS[system](rng, lines)) + "\n").encode()


# ---------------------------------------------------------------------------
# adversarial and targeted corpora

def fuzz_corpus(lines: int = 50_000, seed: int = 0) -> bytes:
    """Lines mixing sentinel bytes, NUL, invalid UTF-8, specials-only tokens,
    25-digit runs, CR, empty lines; no trailing newline."""
    rng = random.Random(seed)
    pieces = [
        lambda: b"\x01", lambda: b"\x00", lambda: b"\x01\x00", lambda: b"\xff\xfe",
        lambda: b"\xe6\x97\xa5", lambda: b"\xe6", lambda: b"---", lambda: b"%|<>=\\",
        lambda: str(rng.randint(0, 10 ** 25)).zfill(25).encode(),
        lambda: str(rng.randint(0, 99)).encode(), lambda: b"0" * rng.randint(1, 30),
        lambda: b"%02d:%02d:%02d" % (rng.randint(0, 23), rng.randint(0, 59), rng.randint(0, 59)),
        lambda: b"%d.%d.%d.%d" % tuple(rng.randint(0, 300) for _ in range(4)),
        lambda: b"0%d.%d.1.1" % (rng.randint(0, 99), rng.randint(0, 9)),
        lambda: b"node", lambda: b"error", lambda: b"id=", lambda: b"x_%d" % rng.randint(0, 999),
        lambda: b"-%d" % rng.randint(0, 10 ** 6), lambda: b"\x0b\x0c", lambda: b"\x7f",
        lambda: bytes(rng.randint(0, 255) for _ in range(rng.randint(1, 6))).replace(b"\n", b""),
    ]
    seps = [b" ", b" ", b" ", b"\t", b"  ", b"\r", b" \r"]
    out = []
    for _ in range(lines):
        r = rng.random()
        if r < 0.05:
            out.append(b"")
            continue
        parts = []
        for _ in range(rng.randint(1, 12)):
            tok = b"".join(rng.choice(pieces)() for _ in range(rng.randint(1, 3)))
            parts.append(tok)
            parts.append(rng.choice(seps))
        if rng.random() < 0.7:
            parts.pop()
        out.append(b"".join(parts))
    return b"\n".join(out)


def timestamp_ip_corpus(lines: int = 100_000, seed: int = 0) -> bytes:
    """Every line carries an HH:MM:SS,mmm clock and one or two IPv4 addresses."""
    rng = random.Random(seed)
    clock = _Clock(rng, datetime(2024, 1, 15, 0, 0, 0), 0.05)
    src = _pool(rng, lambda: _ip(rng, "10."), 400)
    dst = _pool(rng, lambda: _ip(rng, "192.168."), 50)
    verbs = ["accepted", "rejected", "forwarded", "dropped"]
    out = []
    for _ in range(lines):
        t = clock.tick()
        ts = f"{t:%H:%M:%S},{t.microsecond // 1000:03d}"
        out.append(f"{t:%Y-%m-%d} {ts} INFO conn {rng.choice(verbs)} from IP {src()} to {dst()} "
                   f"port {rng.choice([22, 80, 443, 8080, rng.randint(1024, 65535)])} at {ts}")
    return ("\n".join(out) + "\n").encode()


def node_corpus(lines: int = 10_000) -> bytes:
    return b"".join(b"node %04d %04d %04d joined\n" % (i % 10000, (i + 1) % 10000, (i + 2) % 10000)
                    for i in range(lines))


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m delog.corpora OUTDIR", file=sys.stderr)
        return 2
    out = Path(argv[0])
    (out / "loghub").mkdir(parents=True, exist_ok=True)
    for name in SYSTEMS:
        (out / "loghub" / f"{name}_2k.log").write_bytes(loghub_sample(name))
    (out / "fuzz_50k.log").write_bytes(fuzz_corpus())
    (out / "ts_ip_100k.log").write_bytes(timestamp_ip_corpus())
    return 0


if __name__ == "__main__":
    sys.exit(main())
