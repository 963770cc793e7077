"""Channel-estimation workbench: untrained deep decoder, LS/MMSE baselines,
synthetic massive-MIMO channels, and a Monte Carlo benchmark harness."""

__version__ = "0.1.0"
