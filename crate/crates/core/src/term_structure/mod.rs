//! Forward intensity and default density term structures.

mod azema;
mod coefficients;
mod curve;
mod density;
mod drift;

pub use azema::{
    azema_survival, azema_survival_from_intensity, immersion_holds, AzemaTracker,
};
pub use coefficients::{
    CoefficientSpec, CurveFn, GammaFn, InitialCurve, IntensityModel, JumpLoading, SigmaFn,
    Volatility,
};
pub use curve::{
    csp, density, evolve_intensity, evolve_intensity_tabled, step_intensity, ForwardCurveState,
    ThetaGrid, SURVIVAL_EXPONENT_FLOOR,
};
pub use density::{
    evolve_density_direct, step_density, DensityCurveState, DensityModel, DensityScheme, JumpSign,
    SliceCoefficients,
};
pub use drift::{jump_compensator, mc_drift, mc_drift_parts, DriftTable};
