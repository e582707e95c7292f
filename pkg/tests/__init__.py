"""BridgeShift test suite."""
