//! Linearization at the deadlock point and the deadlock-breaking thresholds.

mod charpoly;
mod jacobian;
mod spectrum;

pub use charpoly::{char_poly_slow, det_dense, det_via_lemma, CharPolyFactors, Poly};
pub use jacobian::{
    full_trace_formula, jacobian_full, jacobian_slow, rotation_conjugation_sum, BlockJacobian,
    JacobianKind,
};
pub use spectrum::{
    critical_sigma_numeric, leading_eigenvalue, max_real_eigenvalue, mode_block_crossing_numeric,
    sigma_hat_bound, sigma_star_slow_limit, slow_limit_crossing_numeric, spectrum,
    stability_boundary, BoundaryPoint, SIGMA_LO,
};
