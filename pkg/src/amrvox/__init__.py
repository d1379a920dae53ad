"""AMR data to per-level sparse volumes, rendered seam-free."""
