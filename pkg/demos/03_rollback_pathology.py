"""The spurious-loss rollback limit cycle.

When every small loss episode is classified as spurious, the congestion
controller restores its checkpointed state after each recovery: the window
jumps back up, the buffer overflows again by a couple of packets, and the
cycle repeats.  The congestion window bounces between two levels instead of
backing off, and the bottleneck drops far more packets than with the
rollback disabled.
"""

from pacersim import preset_config, run_once

results = {}
for preset in ("fq-rollback-on", "fq-rollback-off"):
    config = preset_config(preset)
    config.object_size = 40 * 1024 * 1024
    results[preset] = run_once(config, seed=1)

for preset, result in results.items():
    print(f"\n{preset}: {result.metrics.dropped_packets} drops, "
          f"{len(result.congestion_events)} congestion events")
    print("  time(s)  cwnd before -> after")
    for t, before, after in result.congestion_events[:14]:
        print(f"  {t/1e9:7.2f}  {before/1e3:7.1f} kB -> {after/1e3:7.1f} kB")

on = results["fq-rollback-on"].metrics.dropped_packets
off = results["fq-rollback-off"].metrics.dropped_packets
print(f"\ndrop ratio with/without rollback: {on / off:.2f}x")
