"""How GSO batching shapes the wire.

Three variants of the same timestamp-paced transfer: GSO disabled (each
packet individually scheduled by FQ), GSO in burst mode (a buffer's
segments leave back to back), and paced GSO (segments of a buffer are
individually spread at the buffer's pacing rate).
"""

from pacersim import packets_per_train_cdf, preset_config, run_once

SIZE = 20 * 1024 * 1024

for preset in ("gso-off", "gso-burst", "gso-paced"):
    config = preset_config(preset)
    config.object_size = SIZE
    result = run_once(config, seed=1)
    stats = result.train_stats()
    cdf = packets_per_train_cdf(stats)
    print(f"\n{preset}: {result.metrics.dropped_packets} drops, "
          f"slow-start exit at {result.slow_start_exit_cwnd / 1e3:.0f} kB")
    print("  packets-per-train-length CDF:")
    for length, fraction in cdf[:8]:
        print(f"    <= {length:3d}: {fraction:6.1%}")
    if cdf[-1][0] > 8:
        print(f"    <= {cdf[-1][0]:3d}: {cdf[-1][1]:6.1%}")
