//! Critical speeds and generalized transition fronts for
//! `u_t = (a u_x)_x + c u (1 − u)` with almost periodic `a`, `c`.

pub mod cli;
pub mod coeff;
pub mod decay;
pub mod eigen;
pub mod frontsim;
pub mod error;
pub mod numerics;
pub mod par;
pub mod speed;

pub use coeff::{BohrMean, CoefficientField, FieldSpec, Grid1D};
pub use decay::{DecayOptions, DecayProfile, Lambda1Ref, MuCurve};
pub use eigen::{EigenEstimate, KpCurve, Lambda1Config};
pub use frontsim::{FrontConfig, FrontState, ProfileU, SandwichSpec};
pub use error::{Error, Result};
pub use speed::{SpeedConfig, SpeedReport};
