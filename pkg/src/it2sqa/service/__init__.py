"""HTTP service wrapping the pipeline and the fused classifier."""
