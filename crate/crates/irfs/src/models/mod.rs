//! The model zoo: five concrete random-map families with exact metadata.
//!
//! Each constructor returns a [`crate::engine::ModelSpec`] whose `apply`
//! consumes the matching [`crate::noise::NoiseValue`] shape. Constructors
//! also attach whatever exactness is available — per-step Lipschitz
//! factors, linear parts for affine-in-state maps, monotonicity and drift
//! declarations — because the verification layer is only as sharp as this
//! metadata.

pub mod affine;
pub mod gwi;
pub mod langevin;
pub mod lindley;
pub mod sg;

pub use affine::{make_affine, make_multiplicative_scalar, AffineInterp, AffineParams};
pub use gwi::make_gwi;
pub use langevin::{
    contraction_bound, make_langevin, stepsize_threshold, Envelope, HKind, LangevinParams,
};
pub use lindley::{make_lindley, vstar_closed_form, vstar_closed_form_ladder, LindleyParams};
pub use sg::{average_trajectory, bias_estimate, make_sg, target_from_means, SgDerive, SgParams};
