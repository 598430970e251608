"""bimpilot: a desk-scale autonomous building-modeling pipeline.

Floorplan synthesis and interpretation, hierarchical planning with
documentation retrieval, a deterministic mock design-app GUI, scripted
agents with supervision and reflection, and a benchmark harness.
"""

__version__ = "0.1.0"
