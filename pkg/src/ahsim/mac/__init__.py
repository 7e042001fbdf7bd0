"""MAC layer: station state machines, RAW scheduling and DCF contention."""
