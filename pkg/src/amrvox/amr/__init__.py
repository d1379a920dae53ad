from .bundle import AMRFormatError, load_amr, save_amr
from .model import AMRDataset, AMRGrid, AMRValidationError, validate_dataset
from .ops import (
    CapacityError,
    OutsideDomainError,
    child_mask,
    covering_grid,
    finest_grid_at,
    ghost_zones,
    sample_amr,
)
from .synth import SynthSpec, g3_dataset, synth_amr

__all__ = [
    "AMRDataset",
    "AMRFormatError",
    "AMRGrid",
    "AMRValidationError",
    "CapacityError",
    "OutsideDomainError",
    "SynthSpec",
    "child_mask",
    "covering_grid",
    "finest_grid_at",
    "g3_dataset",
    "ghost_zones",
    "load_amr",
    "sample_amr",
    "save_amr",
    "synth_amr",
    "validate_dataset",
]
