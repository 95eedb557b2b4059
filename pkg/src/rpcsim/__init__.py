"""Planning-and-control framework for legged robots at desk scale.

Layers: physics test environment (simenv), interface and pipeline
(architecture), planning and control (rbd, estimation, locomotion, wbc,
trajectories, qp), and telemetry/operator services (telemetry).
"""

__version__ = "0.1.0"
