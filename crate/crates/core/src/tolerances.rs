//! Numerical thresholds shared by every module.
//!
//! All comparisons are in max-norm unless stated otherwise. The defaults
//! below are used by the plain entry points; the `*_with` variants accept
//! a [`Tolerances`] value so callers can override them.

/// Per-entry tolerance on `|H - H^dagger|` when accepting an operator.
pub const HERMITICITY: f64 = 1e-12;
/// Tolerance on `| ||psi|| - 1 |` when accepting a state.
pub const NORMALIZATION: f64 = 1e-10;
/// Below this, `|<psi(0)|psi(t)>|` (and the orthogonal weight) is a node.
pub const NODE: f64 = 1e-8;
/// Guards divisions at turning points of S0 and at zero-motion steps.
pub const TURN: f64 = 1e-9;
/// Denominators `|dPhi - dPhiBar|` below this skip the fraction ratio check.
pub const RATIO_DENOMINATOR: f64 = 1e-9;
/// Relative reconstruction tolerance of the spectral decomposition.
pub const SPECTRAL_RECONSTRUCTION: f64 = 1e-10;
/// Orthonormality tolerance of the eigenvector matrix.
pub const SPECTRAL_ORTHONORMALITY: f64 = 1e-12;
/// Increments of sign-conflict checks smaller than this are treated as zero.
pub const SIGN_NOISE: f64 = 1e-12;
/// Two candidate branches closer than this to the extrapolated phase are a tie.
pub const BRANCH_TIE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub normalization: f64,
    pub node: f64,
    pub turn: f64,
    pub ratio_denominator: f64,
    pub sign_noise: f64,
    pub branch_tie: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: HERMITICITY,
            normalization: NORMALIZATION,
            node: NODE,
            turn: TURN,
            ratio_denominator: RATIO_DENOMINATOR,
            sign_noise: SIGN_NOISE,
            branch_tie: BRANCH_TIE,
        }
    }
}
