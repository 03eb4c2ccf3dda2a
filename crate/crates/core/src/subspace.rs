//! PC subspaces and the principal angles between them.

use nalgebra::{DMatrix, SymmetricEigen, QR, SVD};

use crate::error::{Error, Result};
use crate::transform::{apply_radius, resolve_radius, DataMatrix, RadiusSpec, ResolvedRadius};

/// Above this many variables (or when `n < p`) the fit runs a thin SVD of
/// the winsorized data instead of a dense covariance eigendecomposition.
pub const THIN_SVD_MIN_P: usize = 1000;

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
///
/// `eigenvectors` is `p × k`. For the covariance route `k = p`; for the
/// thin-SVD route `k = min(n, p)` and the eigenvalues past `k` are zero with
/// no stored eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn p(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `λ_j` for 1-based `j`, with `λ_j = 0` beyond `p`.
    pub fn value(&self, j: usize) -> f64 {
        assert!(j >= 1, "eigenvalue indices are 1-based");
        self.eigenvalues.get(j - 1).copied().unwrap_or(0.0)
    }

    /// `λ_d − λ_{d+1}`.
    pub fn gap(&self, d: usize) -> f64 {
        self.value(d) - self.value(d + 1)
    }

    /// Span of the top `d` eigenvectors.
    pub fn top_subspace(&self, d: usize) -> Result<Subspace> {
        if d == 0 || d > self.eigenvectors.ncols() {
            return Err(Error::invalid(format!(
                "subspace dimension {d} outside 1..={}",
                self.eigenvectors.ncols()
            )));
        }
        Ok(Subspace {
            basis: self.eigenvectors.columns(0, d).into_owned(),
        })
    }
}

/// A `d`-dimensional subspace of `R^p`, stored as a `p × d` orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

const ORTHONORMAL_TOL: f64 = 1e-8;

fn orthonormality_error(basis: &DMatrix<f64>) -> f64 {
    let gram = basis.transpose() * basis;
    let d = gram.nrows();
    (gram - DMatrix::<f64>::identity(d, d)).amax()
}

impl Subspace {
    /// Wraps a basis whose columns are orthonormal within `1e-8`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        Self::check_shape(&basis)?;
        let err = orthonormality_error(&basis);
        if !(err <= ORTHONORMAL_TOL) {
            return Err(Error::invalid(format!(
                "basis columns are not orthonormal (max |B'B - I| = {err:e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormalizes the columns via QR. Fails on rank-deficient input.
    pub fn orthonormalized(basis: &DMatrix<f64>) -> Result<Self> {
        Self::check_shape(basis)?;
        let d = basis.ncols();
        let qr = QR::new(basis.clone());
        let r = qr.r();
        let scale = basis.amax().max(f64::MIN_POSITIVE);
        if (0..d).any(|i| r[(i, i)].abs() <= 1e-12 * scale) {
            return Err(Error::invalid("basis columns are linearly dependent"));
        }
        Ok(Self {
            basis: qr.q().columns(0, d).into_owned(),
        })
    }

    /// Accepts a nearly orthonormal basis as is, otherwise re-orthonormalizes.
    /// The flag reports whether re-orthonormalization happened.
    pub fn from_basis_lenient(basis: DMatrix<f64>, tol: f64) -> Result<(Self, bool)> {
        Self::check_shape(&basis)?;
        if orthonormality_error(&basis) <= tol {
            Ok((Self { basis }, false))
        } else {
            Ok((Self::orthonormalized(&basis)?, true))
        }
    }

    /// Span of the listed coordinate axes (0-based).
    pub fn coordinate(p: usize, axes: &[usize]) -> Result<Self> {
        if axes.iter().any(|&a| a >= p) {
            return Err(Error::invalid(format!("axis index out of range for p = {p}")));
        }
        let mut basis = DMatrix::zeros(p, axes.len());
        for (k, &a) in axes.iter().enumerate() {
            basis[(a, k)] = 1.0;
        }
        Self::new(basis)
    }

    fn check_shape(basis: &DMatrix<f64>) -> Result<()> {
        let (p, d) = basis.shape();
        if d == 0 || d > p {
            return Err(Error::invalid(format!("need 1 <= d <= p, got d = {d}, p = {p}")));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("basis has non-finite entries"));
        }
        Ok(())
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn p(&self) -> usize {
        self.basis.nrows()
    }

    pub fn d(&self) -> usize {
        self.basis.ncols()
    }
}

/// Principal angles between two equal-dimension subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleReport {
    /// Ascending, in `[0, π/2]`.
    pub angles: Vec<f64>,
    /// `θ`, the first angle.
    pub smallest: f64,
    /// `Θ`, the last angle.
    pub largest: f64,
    pub sin_largest: f64,
}

impl AngleReport {
    /// `‖sin Θ‖_F = sqrt(Σ sin² θ_j)`.
    pub fn sin_frobenius(&self) -> f64 {
        self.angles.iter().map(|a| a.sin().powi(2)).sum::<f64>().sqrt()
    }
}

/// `(1/n) XᵀX`, with no mean subtraction.
pub fn sample_covariance(x: &DataMatrix) -> DMatrix<f64> {
    let v = x.values();
    let gram = v.transpose() * v;
    let s = (&gram + gram.transpose()) * (0.5 / x.n() as f64);
    s
}

/// Largest-magnitude component of every column is made positive.
fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut pivot = 0.0f64;
        for &v in col.iter() {
            if v.abs() > pivot.abs() {
                pivot = v;
            }
        }
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

fn sorted_spectrum(values: &[f64], vectors: &DMatrix<f64>, p: usize) -> Spectrum {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let top = values.get(order.first().copied().unwrap_or(0)).copied().unwrap_or(0.0).max(0.0);
    let mut eigenvalues: Vec<f64> = order
        .iter()
        .map(|&k| {
            let v = values[k];
            if v < 0.0 && v >= -1e-10 * top {
                0.0
            } else {
                v
            }
        })
        .collect();
    eigenvalues.resize(p, 0.0);
    let mut eigenvectors = vectors.select_columns(&order);
    fix_signs(&mut eigenvectors);
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
///
/// Eigenvalues in `[-1e-10·λ_max, 0)` are clamped to zero.
pub fn symmetric_eigh(s: &DMatrix<f64>) -> Result<Spectrum> {
    let (p, q) = s.shape();
    if p != q || p == 0 {
        return Err(Error::invalid(format!("expected a non-empty square matrix, got {p}x{q}")));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let asym = (s - s.transpose()).amax();
    if asym > 1e-8 * s.amax().max(f64::MIN_POSITIVE) {
        return Err(Error::invalid(format!("matrix is not symmetric (max |S - S'| = {asym:e})")));
    }
    let eig = SymmetricEigen::new(s.clone());
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    Ok(sorted_spectrum(&values, &eig.eigenvectors, p))
}

/// Spectrum of `(1/n) XᵀX` from a thin SVD of `X`.
fn thin_svd_spectrum(x: &DataMatrix) -> Result<Spectrum> {
    let svd = SVD::new(x.values().clone(), false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;
    let n = x.n() as f64;
    let values: Vec<f64> = svd.singular_values.iter().map(|s| s * s / n).collect();
    Ok(sorted_spectrum(&values, &v_t.transpose(), x.p()))
}

/// Non-fatal conditions attached to a fit.
#[derive(Debug, Clone, PartialEq)]
pub enum FitWarning {
    /// `λ̂_d` and `λ̂_{d+1}` tie; the subspace is one of many invariant
    /// subspaces and gap-based bounds are undefined.
    DegenerateGap { d: usize, lambda_d: f64, lambda_d1: f64 },
}

impl std::fmt::Display for FitWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitWarning::DegenerateGap { d, lambda_d, lambda_d1 } => write!(
                f,
                "eigenvalues {d} and {} tie ({lambda_d} vs {lambda_d1}); the {d}-dimensional PC subspace is not unique",
                d + 1
            ),
        }
    }
}

/// A fitted (winsorized) PC subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct PcFit {
    pub subspace: Subspace,
    pub spectrum: Spectrum,
    pub radius: ResolvedRadius,
    pub warnings: Vec<FitWarning>,
}

/// Resolves `spec` on `x`, transforms the data and extracts the top-`d` subspace.
pub fn fit_pc_subspace(x: &DataMatrix, d: usize, spec: RadiusSpec) -> Result<PcFit> {
    let radius = resolve_radius(x, spec)?;
    fit_pc_subspace_with(x, d, radius)
}

/// Like [`fit_pc_subspace`] with an already resolved radius, so two datasets
/// can be fitted at the same `r`.
pub fn fit_pc_subspace_with(x: &DataMatrix, d: usize, radius: ResolvedRadius) -> Result<PcFit> {
    let p = x.p();
    if d == 0 || d > p {
        return Err(Error::invalid(format!("need 1 <= d <= p, got d = {d}, p = {p}")));
    }
    let transformed = apply_radius(x, radius)?;
    let spectrum = if transformed.n() < p || p > THIN_SVD_MIN_P {
        thin_svd_spectrum(&transformed)?
    } else {
        symmetric_eigh(&sample_covariance(&transformed))?
    };
    let subspace = spectrum.top_subspace(d)?;
    let mut warnings = Vec::new();
    if d < p {
        let (a, b) = (spectrum.value(d), spectrum.value(d + 1));
        if (a - b).abs() <= 1e-12 * spectrum.value(1).abs().max(f64::MIN_POSITIVE) {
            warnings.push(FitWarning::DegenerateGap { d, lambda_d: a, lambda_d1: b });
        }
    }
    Ok(PcFit {
        subspace,
        spectrum,
        radius,
        warnings,
    })
}

fn check_pair(u: &Subspace, w: &Subspace) -> Result<()> {
    if u.p() != w.p() || u.d() != w.d() {
        return Err(Error::mismatch(format!(
            "subspaces live in Gr({}, {}) and Gr({}, {})",
            u.d(),
            u.p(),
            w.d(),
            w.p()
        )));
    }
    Ok(())
}

fn sorted_singular_values(m: DMatrix<f64>, descending: bool) -> Vec<f64> {
    let mut s: Vec<f64> = SVD::new(m, false, false)
        .singular_values
        .iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    if descending {
        s.sort_by(|a, b| b.total_cmp(a));
    } else {
        s.sort_by(f64::total_cmp);
    }
    s
}

/// Principal angles from the singular values of `UᵀW`.
///
/// `arccos` is ill-conditioned near zero, so angles whose sine is below
/// `1/√2` come from the singular values of `(I − UUᵀ)W` instead.
pub fn principal_angles(u: &Subspace, w: &Subspace) -> Result<AngleReport> {
    check_pair(u, w)?;
    if u.basis == w.basis {
        let d = u.d();
        return Ok(AngleReport {
            angles: vec![0.0; d],
            smallest: 0.0,
            largest: 0.0,
            sin_largest: 0.0,
        });
    }
    let cross = u.basis.transpose() * &w.basis;
    let residual = &w.basis - &u.basis * &cross;
    let cosines = sorted_singular_values(cross, true);
    let sines = sorted_singular_values(residual, false);
    let mut angles: Vec<f64> = cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| if s * s < 0.5 { s.asin() } else { c.acos() })
        .collect();
    angles.sort_by(f64::total_cmp);
    let smallest = angles[0];
    let largest = *angles.last().expect("d >= 1");
    Ok(AngleReport {
        smallest,
        largest,
        sin_largest: largest.sin(),
        angles,
    })
}

/// `‖U_⊥ᵀ W‖₂` for an orthonormal completion `U_⊥` of `U`, which equals
/// `sin Θ(U, W)`.
pub fn sin_theta_operator(u: &Subspace, w: &Subspace) -> Result<f64> {
    check_pair(u, w)?;
    let (p, d) = (u.p(), u.d());
    if d == p {
        return Ok(0.0);
    }
    let mut augmented = DMatrix::zeros(p, d + p);
    augmented.columns_mut(0, d).copy_from(&u.basis);
    augmented.columns_mut(d, p).fill_with_identity();
    let q = QR::new(augmented).q();
    let complement = q.columns(d, p - d);
    let cross = complement.transpose() * &w.basis;
    let top = SVD::new(cross, false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max);
    Ok(top.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn span(p: usize, cols: &[Vec<f64>]) -> Subspace {
        let flat: Vec<f64> = cols.iter().flatten().copied().collect();
        Subspace::orthonormalized(&DMatrix::from_column_slice(p, cols.len(), &flat)).unwrap()
    }

    #[test]
    fn covariance_examples() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(sample_covariance(&x), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(sample_covariance(&x), DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
    }

    #[test]
    fn covariance_ignores_row_order() {
        let a = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.25, 4.0]]).unwrap();
        let b = DataMatrix::from_rows(&[vec![0.25, 4.0], vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        let diff = (sample_covariance(&a) - sample_covariance(&b)).amax();
        assert!(diff < 1e-14);
    }

    #[test]
    fn eigh_identity_and_diagonal() {
        let s = symmetric_eigh(&DMatrix::identity(4, 4)).unwrap();
        assert!(s.eigenvalues.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let s = symmetric_eigh(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]))).unwrap();
        assert_eq!(s.eigenvalues, vec![3.0, 2.0, 1.0]);
        let expect = [0usize, 2, 1];
        for (col, &axis) in expect.iter().enumerate() {
            assert!((s.eigenvectors[(axis, col)] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eigh_rejects_asymmetric() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(symmetric_eigh(&s).is_err());
    }

    #[test]
    fn eigh_reconstructs_random_symmetric() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = DMatrix::from_fn(7, 7, |_, _| next());
        let s = &a + a.transpose();
        let spec = symmetric_eigh(&s).unwrap();
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(spec.eigenvalues.clone()));
        let rec = &spec.eigenvectors * lam * spec.eigenvectors.transpose();
        assert!((rec - &s).amax() < 1e-7 * s.norm());
        assert!(spec.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let vtv = spec.eigenvectors.transpose() * &spec.eigenvectors;
        assert!((vtv - DMatrix::<f64>::identity(7, 7)).amax() < 1e-8);
    }

    #[test]
    fn sign_convention_makes_largest_component_positive() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let spec = symmetric_eigh(&s).unwrap();
        for col in spec.eigenvectors.column_iter() {
            let pivot = col.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn angle_examples() {
        let e1 = span(2, &[vec![1.0, 0.0]]);
        let diag = span(2, &[vec![1.0, 1.0]]);
        let rep = principal_angles(&e1, &diag).unwrap();
        assert!((rep.largest - FRAC_PI_4).abs() < 1e-12);
        assert!((rep.sin_largest - FRAC_PI_4.sin()).abs() < 1e-12);

        let a = Subspace::coordinate(4, &[0, 1]).unwrap();
        let b = Subspace::coordinate(4, &[0, 2]).unwrap();
        let rep = principal_angles(&a, &b).unwrap();
        assert!(rep.angles[0].abs() < 1e-12);
        assert!((rep.angles[1] - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(rep.smallest, rep.angles[0]);

        let same = principal_angles(&a, &a).unwrap();
        assert!(same.angles.iter().all(|&t| t.abs() < 1e-7));
        assert!(sin_theta_operator(&a, &a).unwrap() < 1e-12);
    }

    #[test]
    fn orthogonal_subspaces_have_unit_sine() {
        let a = Subspace::coordinate(5, &[0, 1]).unwrap();
        let b = Subspace::coordinate(5, &[2, 3]).unwrap();
        assert!((sin_theta_operator(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!((principal_angles(&a, &b).unwrap().smallest - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = Subspace::coordinate(4, &[0]).unwrap();
        let b = Subspace::coordinate(4, &[0, 1]).unwrap();
        let c = Subspace::coordinate(5, &[0]).unwrap();
        assert!(matches!(principal_angles(&a, &b), Err(Error::DimensionMismatch(_))));
        assert!(matches!(sin_theta_operator(&a, &c), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn subspace_validation() {
        assert!(Subspace::new(DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).is_err());
        assert!(Subspace::orthonormalized(&DMatrix::from_column_slice(2, 2, &[1.0, 1.0, 2.0, 2.0])).is_err());
        let (s, changed) = Subspace::from_basis_lenient(DMatrix::from_column_slice(2, 1, &[2.0, 0.0]), 1e-6).unwrap();
        assert!(changed);
        assert!((s.basis()[(0, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn large_radius_fit_matches_pca() {
        let x = DataMatrix::from_rows(&[
            vec![1.0, 0.2, -0.1],
            vec![-2.0, 0.1, 0.3],
            vec![0.5, -0.7, 0.2],
            vec![3.0, 0.4, -0.5],
        ])
        .unwrap();
        let max_norm = x.row_norms().into_iter().fold(0.0, f64::max);
        let pca = fit_pc_subspace(&x, 1, RadiusSpec::None).unwrap();
        let wpca = fit_pc_subspace(&x, 1, RadiusSpec::Fixed(max_norm)).unwrap();
        assert!(principal_angles(&pca.subspace, &wpca.subspace).unwrap().largest < 1e-10);
        assert_eq!(pca.radius, ResolvedRadius::Identity);
    }

    #[test]
    fn tie_produces_warning_not_error() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let fit = fit_pc_subspace(&x, 1, RadiusSpec::None).unwrap();
        assert_eq!(fit.spectrum.eigenvalues, vec![0.5, 0.5]);
        assert!(matches!(fit.warnings[0], FitWarning::DegenerateGap { d: 1, .. }));
    }

    #[test]
    fn thin_svd_route_agrees_with_covariance_route() {
        // n < p forces the SVD route.
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..6).map(|j| ((i * 5 + j * 3) % 7) as f64 - 3.0 + if j == 0 { 4.0 * i as f64 } else { 0.0 }).collect())
            .collect();
        let x = DataMatrix::from_rows(&rows).unwrap();
        let svd_fit = fit_pc_subspace(&x, 2, RadiusSpec::Fixed(5.0)).unwrap();
        let w = crate::transform::winsorize_dataset(&x, 5.0).unwrap();
        let dense = symmetric_eigh(&sample_covariance(&w)).unwrap();
        for j in 1..=6 {
            assert!((svd_fit.spectrum.value(j) - dense.value(j)).abs() < 1e-10);
        }
        assert_eq!(svd_fit.spectrum.eigenvectors.ncols(), 4);
        let angle = principal_angles(&svd_fit.subspace, &dense.top_subspace(2).unwrap()).unwrap();
        assert!(angle.largest < 1e-8);
    }

    #[test]
    fn spectrum_values_beyond_p_are_zero() {
        let s = symmetric_eigh(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0]))).unwrap();
        assert_eq!(s.value(3), 0.0);
        assert_eq!(s.gap(2), 1.0);
    }
}
