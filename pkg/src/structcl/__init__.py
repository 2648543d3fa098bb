"""Structure-aware contrastive node embeddings and community detection."""

__version__ = "0.1.0"
