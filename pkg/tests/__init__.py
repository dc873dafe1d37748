"""Unit test package for mimo_jrc."""
