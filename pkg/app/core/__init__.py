"""Layout model, synthetic designs, feature extraction and dataset plumbing."""
