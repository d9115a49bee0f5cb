#!/usr/bin/env python3
"""Throughput comparison of the compiled and pure-Python codecs.

Usage: python3 benchmarks/bench_codec.py [--messages N] [--repeat R]

Builds a corpus of representative wire messages (liveness, requests, status
notifications with grouped attributes, floor-wide broadcasts), then times
encode and decode for both implementations and prints a table.
"""

from __future__ import annotations

import argparse
import statistics
import time

from floorctl.codec import _pure
from floorctl.codec import messages as msgs
from floorctl.codec.model import RequestStatus

try:
    from floorctl.codec import _native
except ImportError:
    _native = None


def build_corpus(n: int) -> list:
    corpus = []
    for i in range(n):
        kind = i % 4
        if kind == 0:
            corpus.append(msgs.hello(1, i & 0xFFFF, 101))
        elif kind == 1:
            corpus.append(
                msgs.floor_request(1, i & 0xFFFF, 102, 1, priority=4, info="spromano")
            )
        elif kind == 2:
            corpus.append(
                msgs.floor_request_status(
                    1, i & 0xFFFF, 102, 7, 1, RequestStatus.GRANTED, 0,
                    display_name="spromano",
                )
            )
        else:
            corpus.append(
                msgs.floor_status(
                    1, i & 0xFFFF, 0, 1,
                    [
                        (5, 101, RequestStatus.GRANTED, 0, "User1"),
                        (6, 102, RequestStatus.ACCEPTED, 1, "spromano"),
                        (7, 103, RequestStatus.PENDING, 2, "User2"),
                    ],
                )
            )
    return corpus


def bench(label: str, fn, items, repeat: int) -> float:
    timings = []
    for _ in range(repeat):
        start = time.perf_counter()
        for item in items:
            fn(item)
        timings.append(time.perf_counter() - start)
    best = min(timings)
    rate = len(items) / best
    spread = statistics.pstdev(timings) / best * 100 if repeat > 1 else 0.0
    print(f"  {label:<28} {rate/1e3:>10.1f} kops/s   (spread {spread:.0f}%)")
    return rate


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--messages", type=int, default=20_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    corpus = build_corpus(args.messages)
    wire = [_pure.encode(m) for m in corpus]
    total_bytes = sum(len(b) for b in wire)
    print(
        f"corpus: {len(corpus)} messages, {total_bytes/len(corpus):.0f} B average"
    )

    impls = [("pure", _pure)]
    if _native is not None:
        impls.append(("native", _native))
    else:
        print("note: native codec not built; showing pure only")

    rates: dict[tuple[str, str], float] = {}
    for name, impl in impls:
        print(f"{name}:")
        rates[(name, "encode")] = bench("encode", impl.encode, corpus, args.repeat)
        rates[(name, "decode")] = bench("decode", impl.decode, wire, args.repeat)

    if _native is not None:
        for op in ("encode", "decode"):
            speedup = rates[("native", op)] / rates[("pure", op)]
            print(f"native {op} speedup: {speedup:.1f}x")


if __name__ == "__main__":
    main()
