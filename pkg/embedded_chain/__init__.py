from embedded_chain.chain import (
    BlockResult,
    Caps,
    ChainPath,
    JumpSampler,
    MomentEstimate,
    Ruined,
    Survived,
    SurvivalReason,
    jump_moment_estimates,
    sample_jump,
    sample_jumps,
    scaled_drift,
    simulate_block,
    simulate_path,
)
from embedded_chain.rng import RngStream
