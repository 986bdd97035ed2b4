//! Operators on `C^d`, spectral calculus, filtrations and martingales.

pub mod eigen;
pub mod filtration;
pub mod martingale;
pub mod operator;
pub mod spectral;

pub use eigen::{eig_hermitian, gram_root, singular_values, svd, Eigen, Svd};
pub use filtration::{Family, FamilyKind, Filtration, Partition};
pub use martingale::Martingale;
pub use operator::{Operator, C64};
pub use spectral::{
    eigenspace_projections, geometric_slice_frames, geometric_slices, matrix_function, modulus, polar_decomposition, projection_meet, pseudo_power,
    spectral_projection, sqrt_positive, support_projection, Polar, PositiveSpectrum, Side,
};
