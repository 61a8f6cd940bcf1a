"""
Test package for the entangled-pair verification simulator.

This package contains tests for:
- Topology, loss budgets and classical latency
- Memory technologies, states, decoherence and trajectories
- Memory buffers and the per-node protocol
- The event engine, metrics, experiments, sweeps and report files
- The command-line interface
"""
