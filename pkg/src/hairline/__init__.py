"""hairline: wind-turbine blade crack inspection pipeline.

Synthesizes or ingests high-resolution blade imagery, tiles it with
overlap, classifies tiles with a small gradient-capable CNN, localizes
cracks via Grad-CAM attribution post-processed into polygons, filters
proposals by blade masks, and routes them through an analyst review
loop to a final inspection report.
"""

__version__ = "0.1.0"
