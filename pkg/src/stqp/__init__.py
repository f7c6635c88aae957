"""Spatiotemporal delta-QP encoding toolkit.

Builds saliency-derived compression-candidate regions, temporal QP
schedules, per-frame ROI delta-QP maps for HEVC encoding, size-matched
constant-QP baselines, and the session/analysis tooling for subjective
quality studies of the resulting stimuli.
"""

__version__ = "0.1.0"
