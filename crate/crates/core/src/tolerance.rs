//! Numerical tolerances shared by every module.
//!
//! All values are tuned for double precision at `d <= 64`.

/// Structural flags: Hermitian, positive, projection.
pub const HERMITIAN: f64 = 1e-10;
/// Relative tolerance for algebraic identities.
pub const IDENTITY: f64 = 1e-9;
/// Eigen-decomposition reconstruction and orthonormality.
pub const EIG: f64 = 1e-10;
/// Eigenvalue-2 cut for the meet of two projections.
pub const MEET: f64 = 1e-8;
/// Relative singular value cutoff for supports and pseudo-powers.
pub const RANK: f64 = 1e-10;
/// Atom and certificate conditions.
pub const ATOM: f64 = 1e-8;
/// Eigenvalues this close (relative to the spectral radius) to a bucket
/// boundary fall into the lower bucket.
pub const GUARD_BAND: f64 = 1e-12;
/// Jacobi sweeps stop once the off-diagonal Frobenius mass drops below this
/// fraction of the Frobenius norm.
pub const JACOBI_OFF: f64 = 1e-13;
