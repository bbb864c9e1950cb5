# Tests for toric-py
