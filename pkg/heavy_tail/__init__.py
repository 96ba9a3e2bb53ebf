from heavy_tail.envelope import (
    HEAVY_COLUMNS,
    HeavyCalibration,
    calibrate_heavy_envelope,
    heavy_envelope,
    heavy_table,
)
from heavy_tail.karamata import heavy_regime, karamata_integral, x2_tail
from heavy_tail.truncated import (
    KsResult,
    LowerBoundEstimate,
    TruncatedChainStats,
    conditional_left_tail,
    left_tail_check,
    level_grid,
    lower_bound_estimate,
    sample_truncated_jumps,
    truncated_diagnostics,
    truncated_jump_ks,
)
