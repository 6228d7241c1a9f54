# EntroWire Utilities
