//! Half-space discretizations, the sparse lowest-eigenpair solver, the
//! Feshbach map and localization utilities.

pub mod feshbach;
pub mod grid;
pub mod hardy;
pub mod ims;
pub mod lanczos;
pub mod sparse;
pub mod tridiagonal;

pub use feshbach::{
    feshbach_bracket, feshbach_fixed_point, feshbach_min_eig, feshbach_trials, feshbach_value,
    DenseFeshbach, FeshbachMap, FeshbachTrial, FixedPoint, Projection, SparseFeshbach,
};
pub use grid::{
    assemble_1d_electron_plate, assemble_1d_laplacian, assemble_cyl_laplacian,
    assemble_hydrogen_plate, Grid1D, GridCyl, GridSpec,
};
pub use hardy::{hardy_check, hardy_check_cyl, HardyCheck};
pub use ims::{build_ims_partition, ims_identity_check, ImsCheck, PartitionOfUnity};
pub use lanczos::{lowest_eigenpair, lowest_eigenpairs, EigOptions, EigResult};
pub use sparse::{LinearOperator, SparseSymOp};
pub use tridiagonal::lowest_tridiagonal;
