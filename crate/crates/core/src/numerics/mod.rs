//! Dense complex linear algebra shared by every other module.

mod legs;
mod linalg;
mod random;
mod unitary;

pub use legs::LegState;
pub use linalg::{
    complete_basis, complete_columns, eig_hermitian, expm_i_hermitian, fidelity, hermitian_sqrt_factor,
    is_unitary, kron, max_abs_diff, nearest_unitary, partial_trace, psd_factor,
    relative_rank, renyi_entropy, renyi_from_spectrum, svd, unitarity_residual, Eigh, Svd,
    RANK_THRESHOLD,
};
pub use random::{
    random_density_matrix, random_haar_unitary, random_hermitian, random_pure_state,
    random_unitary_exp, rng_from_seed, standard_normal, SeedRng,
};
pub use unitary::{rotation_pairs, UnitaryParams};
