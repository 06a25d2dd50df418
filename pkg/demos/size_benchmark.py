"""Compiled size of the labeled form against one dispatchable STN per
consistent component, bucketed by component count.

    python demos/size_benchmark.py [per_size] [sharing]
"""

from __future__ import annotations

import sys

from labeled_stn.bench import bench, bucket_medians, default_suite


def main(argv: list[str]) -> None:
    per_size = int(argv[0]) if argv else 2
    sharing = float(argv[1]) if len(argv) > 1 else 0.5
    suite = default_suite(per_size=per_size, sharing=sharing)

    def show(r):
        print(
            f"{r.problem_id:>16} {r.components:>5} comps  {r.labeled_bytes:>7} B vs {r.enumeration_bytes:>8} B"
            f"  x{r.ratio:7.1f}  {r.labeled_latency_ns / 1e6:6.2f} ms  {r.status}",
            flush=True,
        )

    records = bench(suite, repeats=1, progress=show)
    print()
    for low, count, med in bucket_medians(records):
        print(f"components >= {low:>4}: n={count:<3} median ratio {med:.1f}")


if __name__ == "__main__":
    main(sys.argv[1:])
