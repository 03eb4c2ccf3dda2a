//! Winsorized principal component analysis.
//!
//! Observations whose Euclidean norm exceeds a radius `r` are pulled back
//! onto the radius-`r` sphere before ordinary PCA is run on the clipped
//! data. As `r` shrinks the procedure becomes spherical PCA, as `r` grows it
//! becomes classical PCA.
//!
//! The crate is organised by stage:
//!
//! * [`transform`]: the winsorization map and radius policies.
//! * [`subspace`]: covariance, eigendecomposition, PC subspaces and principal
//!   angles.
//! * [`bounds`]: closed-form concentration, breakdown and perturbation
//!   bounds, plus Monte Carlo population winsorized eigenvalues.
//! * [`simulate`]: seeded Gaussian / multivariate-t samplers, contamination
//!   and empirical loss estimation.
//! * [`experiments`]: preset pipelines producing [`experiments::ResultTable`]s.

pub mod bounds;
mod error;
pub mod experiments;
pub mod format;
pub mod simulate;
pub mod subspace;
pub mod transform;

pub use error::{Error, Result};
pub use subspace::{
    fit_pc_subspace, fit_pc_subspace_with, principal_angles, sample_covariance, sin_theta_operator,
    symmetric_eigh, AngleReport, FitWarning, PcFit, Spectrum, Subspace,
};
pub use transform::{
    resolve_radius, spherize_dataset, winsorize_dataset, winsorize_point, DataMatrix,
    RadiusSpec, ResolvedRadius, ZeroRowPolicy,
};
