"""Spatial-temporal embodied carbon accounting for computer hardware."""

from stecarbon.errors import StecError
from stecarbon.grid_data import (
    EmissionFactorTable,
    EnergyGenerationRecord,
    EnergySource,
    GenerationDataset,
    RegionRegistry,
    load_emission_factors,
    parse_generation_csv,
    register_zone,
)
from stecarbon.hardware import (
    CalibrationContext,
    CpuProcessSpec,
    MemoryTechSpec,
    StorageProductSpec,
    calibrate_memory,
    calibrate_storage,
    cpu_breakdown,
    cpu_embodied,
    memory_embodied,
    storage_embodied,
)
from stecarbon.intensity import (
    BucketKind,
    IntensitySeries,
    aggregate_intensity,
    bucketize,
    carbon_intensity,
    intensity_series,
    zone_intensity,
)
from stecarbon.stec import (
    ComparisonReport,
    GranularitySpec,
    StecSeries,
    affine_consistency_check,
    baseline_gy,
    compare,
    evaluate,
)

__version__ = "0.1.0"
