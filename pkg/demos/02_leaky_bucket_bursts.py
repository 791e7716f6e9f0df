"""Bursts after idle with a leaky-bucket pacer.

An application that alternates 5 ms of sending with 5 ms of silence lets
the credit bucket refill during every pause, so each active period starts
with a full-capacity burst (16 segments back to back, often joined by the
first credit-paced packet into a 17-train).
"""

from collections import Counter

from pacersim import preset_config, run_once

config = preset_config("leaky-idle-cycles")
config.object_size = 20 * 1024 * 1024
result = run_once(config, seed=1)
stats = result.train_stats()

print("train length -> number of trains")
counts = Counter(stats.train_lengths)
for length in sorted(counts):
    bar = "#" * min(60, counts[length] // 25 + 1)
    print(f"  {length:3d}  {counts[length]:6d}  {bar}")

big = stats.packets_in_trains_of_at_least(16)
print(f"\npackets in trains of >= 16: {big:.1%}")
print("the 16/17 spike is the refilled bucket draining at line rate after each idle gap")
