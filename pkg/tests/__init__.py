"""Test package; oracles live alongside the suites that use them."""
