from stochastic_model.claims import (
    ClaimModel,
    Deterministic,
    Distribution,
    Exponential,
    GammaDist,
    ParetoType,
)
from stochastic_model.premium_rate import (
    Constant,
    CriticalInverse,
    CriticalPower,
    PowerEnvelope,
    PremiumRateSpec,
    Tabulated,
    evaluate_rate,
)
from stochastic_model.risk_model import (
    DerivedConstants,
    RiskModel,
    critical_rate,
    derived_constants,
)
