"""Software emulator of a GBT-style fault-tolerant, encrypted serial link."""
