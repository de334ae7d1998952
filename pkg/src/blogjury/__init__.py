"""Blog-survey labelling pipeline: corpus harvesting, jury labelling,
agreement gating, adjudication, and count reporting.
"""

__version__ = "0.1.0"
