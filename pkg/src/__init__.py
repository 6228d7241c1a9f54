# EntroWire: relative-entropy graph rewiring driven by reinforcement learning
