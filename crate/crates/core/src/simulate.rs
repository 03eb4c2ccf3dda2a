//! Seeded data generation, contamination and empirical loss estimation.
//!
//! Every random draw comes from a ChaCha stream addressed by
//! `(seed, stream index)`, so replication `i` sees the same numbers no matter
//! how many worker threads run or in what order they finish.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution as _, StandardNormal};
use rayon::prelude::*;

use crate::bounds::{Distribution, PopulationModel};
use crate::error::{Error, Result};
use crate::subspace::{fit_pc_subspace_with, principal_angles, Subspace};
use crate::transform::{resolve_radius, DataMatrix, RadiusSpec};

/// Independent random stream `stream` of the generator family `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream index for replication `rep` of grid cell `cell`.
pub fn cell_stream(cell: u64, rep: u64) -> u64 {
    (cell << 32) | (rep & 0xffff_ffff)
}

/// Fills `out` with one draw of `Σ^{-1/2} x`: standard normal, or for the
/// t law `z·√((ν−2)/w)` with `w ~ χ²_ν` so the covariance is the identity.
pub fn draw_whitened<R: Rng + ?Sized>(rng: &mut R, distribution: Distribution, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    if let Distribution::StudentT { nu } = distribution {
        let w: f64 = ChiSquared::new(nu).expect("validated nu").sample(rng);
        let scale = ((nu - 2.0) / w).sqrt();
        for v in out.iter_mut() {
            *v *= scale;
        }
    }
}

/// `n` i.i.d. rows from `model` (diagonal covariance) drawn from `rng`.
pub fn sample_model<R: Rng + ?Sized>(n: usize, model: &PopulationModel, rng: &mut R) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::invalid("need n >= 1 rows"));
    }
    let p = model.p();
    let sd: Vec<f64> = model.sigma_eigenvalues.iter().map(|l| l.sqrt()).collect();
    let mut buf = vec![0.0; n * p];
    for row in buf.chunks_exact_mut(p) {
        draw_whitened(rng, model.distribution, row);
        for (v, s) in row.iter_mut().zip(&sd) {
            *v *= s;
        }
    }
    DataMatrix::from_row_major(n, p, &buf)
}

/// Rows i.i.d. `N(0, diag(sigma_eigenvalues))`.
pub fn sample_gaussian(n: usize, sigma_eigenvalues: &[f64], seed: u64) -> Result<DataMatrix> {
    let model = PopulationModel::gaussian(sigma_eigenvalues.to_vec())?;
    sample_model(n, &model, &mut stream_rng(seed, 0))
}

/// Rows i.i.d. multivariate t with `nu` degrees of freedom and covariance
/// `diag(sigma_eigenvalues)` (scale matrix `((ν−2)/ν)·Σ`).
pub fn sample_student_t(n: usize, nu: f64, sigma_eigenvalues: &[f64], seed: u64) -> Result<DataMatrix> {
    let model = PopulationModel::student_t(sigma_eigenvalues.to_vec(), nu)?;
    sample_model(n, &model, &mut stream_rng(seed, 0))
}

/// Which rows get replaced.
#[derive(Debug, Clone, PartialEq)]
pub enum Positions {
    FirstM(usize),
    Explicit(Vec<usize>),
}

/// Value written into every replaced row.
#[derive(Debug, Clone, PartialEq)]
pub enum OutlierRule {
    ConstantVector(Vec<f64>),
    /// `magnitude · e_index` (0-based index).
    CoordinateSpike { index: usize, magnitude: f64 },
    /// `(max_i ‖x_i‖² + offset) · e_index`, the maximum taken over the
    /// pure data being contaminated.
    MaxSquaredNormSpike { index: usize, offset: f64 },
}

/// Replacement of `m` rows of a pure dataset by outliers.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminationPlan {
    pub positions: Positions,
    pub rule: OutlierRule,
}

impl ContaminationPlan {
    pub fn none() -> Self {
        Self::first_m(0, OutlierRule::ConstantVector(Vec::new()))
    }

    pub fn first_m(m: usize, rule: OutlierRule) -> Self {
        Self {
            positions: Positions::FirstM(m),
            rule,
        }
    }

    pub fn explicit(indices: Vec<usize>, rule: OutlierRule) -> Self {
        Self {
            positions: Positions::Explicit(indices),
            rule,
        }
    }

    pub fn m(&self) -> usize {
        match &self.positions {
            Positions::FirstM(m) => *m,
            Positions::Explicit(v) => v.len(),
        }
    }

    /// `ε = m / n`.
    pub fn epsilon(&self, n: usize) -> f64 {
        self.m() as f64 / n as f64
    }

    fn indices(&self, n: usize) -> Result<Vec<usize>> {
        let idx: Vec<usize> = match &self.positions {
            Positions::FirstM(m) => (0..*m).collect(),
            Positions::Explicit(v) => v.clone(),
        };
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::invalid(format!("contamination index {bad} out of range for n = {n}")));
        }
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("contamination indices must be distinct"));
        }
        Ok(idx)
    }

    fn outlier(&self, x0: &DataMatrix) -> Result<Vec<f64>> {
        let p = x0.p();
        let spike = |index: usize, magnitude: f64| -> Result<Vec<f64>> {
            if index >= p {
                return Err(Error::invalid(format!("spike coordinate {index} out of range for p = {p}")));
            }
            let mut v = vec![0.0; p];
            v[index] = magnitude;
            Ok(v)
        };
        match &self.rule {
            OutlierRule::ConstantVector(v) if v.len() == p => Ok(v.clone()),
            OutlierRule::ConstantVector(v) => Err(Error::mismatch(format!(
                "outlier vector has length {}, data has p = {p}",
                v.len()
            ))),
            OutlierRule::CoordinateSpike { index, magnitude } => spike(*index, *magnitude),
            OutlierRule::MaxSquaredNormSpike { index, offset } => {
                let max_sq = x0.row_norms().into_iter().map(|v| v * v).fold(0.0, f64::max);
                spike(*index, max_sq + offset)
            }
        }
    }
}

/// Replaces the planned rows of `x0` by the outlier; other rows are copied
/// bit for bit.
pub fn apply_contamination(x0: &DataMatrix, plan: &ContaminationPlan) -> Result<DataMatrix> {
    let idx = plan.indices(x0.n())?;
    if idx.is_empty() {
        return Ok(x0.clone());
    }
    let z = plan.outlier(x0)?;
    let mut values = x0.values().clone();
    for i in idx {
        for (j, &v) in z.iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    DataMatrix::new(values)
}

/// What the fitted subspace is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Span of the top-`d` population eigenvectors.
    PopulationSubspace,
    /// The winsorized PC subspace of the uncontaminated data, fitted at the
    /// same radius (resolved on the pure data).
    PureDataSubspace,
}

/// One Monte Carlo scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub d: usize,
    pub model: PopulationModel,
    pub radius: RadiusSpec,
    pub plan: ContaminationPlan,
    pub target: Target,
    pub replications: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn p(&self) -> usize {
        self.model.p()
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("need at least one replication"));
        }
        if self.d == 0 || self.d >= self.p() {
            return Err(Error::invalid(format!("need 1 <= d < p, got d = {}, p = {}", self.d, self.p())));
        }
        if self.plan.m() > self.n {
            return Err(Error::invalid("cannot replace more rows than n"));
        }
        self.radius.validate()
    }
}

/// Mean, standard error and raw values of a Monte Carlo statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLoss {
    pub mean: f64,
    /// `None` with a single replication.
    pub std_error: Option<f64>,
    pub values: Vec<f64>,
}

impl EmpiricalLoss {
    pub fn from_values(values: Vec<f64>) -> Self {
        let (mean, std_error) = mean_and_se(&values);
        Self { mean, std_error, values }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// `sin Θ` for replication `rep` of `config`.
pub fn replication_sin_theta(config: &ScenarioConfig, rep: usize) -> Result<f64> {
    let mut rng = stream_rng(config.seed, rep as u64);
    let x0 = sample_model(config.n, &config.model, &mut rng)?;
    let x_eps = apply_contamination(&x0, &config.plan)?;
    let (fitted, target) = match config.target {
        Target::PopulationSubspace => {
            let radius = resolve_radius(&x_eps, config.radius)?;
            let fit = fit_pc_subspace_with(&x_eps, config.d, radius)?;
            (fit.subspace, Subspace::coordinate(config.p(), &config.model.top_axes(config.d))?)
        }
        Target::PureDataSubspace => {
            let radius = resolve_radius(&x0, config.radius)?;
            let pure = fit_pc_subspace_with(&x0, config.d, radius)?;
            let fit = fit_pc_subspace_with(&x_eps, config.d, radius)?;
            (fit.subspace, pure.subspace)
        }
    };
    Ok(principal_angles(&fitted, &target)?.sin_largest)
}

/// Empirical `E[sin Θ]` over the configured replications.
pub fn empirical_sin_theta(config: &ScenarioConfig) -> Result<EmpiricalLoss> {
    config.validate()?;
    let values = (0..config.replications)
        .into_par_iter()
        .map(|rep| replication_sin_theta(config, rep))
        .collect::<Result<Vec<f64>>>()?;
    Ok(EmpiricalLoss::from_values(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_matrix() {
        let a = sample_gaussian(50, &[4.0, 1.0, 0.5], 7).unwrap();
        let b = sample_gaussian(50, &[4.0, 1.0, 0.5], 7).unwrap();
        let c = sample_gaussian(50, &[4.0, 1.0, 0.5], 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let t1 = sample_student_t(20, 3.0, &[1.0, 1.0], 7).unwrap();
        assert_eq!(t1, sample_student_t(20, 3.0, &[1.0, 1.0], 7).unwrap());
    }

    #[test]
    fn student_t_requires_finite_covariance() {
        assert!(sample_student_t(10, 2.0, &[1.0], 1).is_err());
        assert!(sample_student_t(10, 1.5, &[1.0], 1).is_err());
    }

    #[test]
    fn streams_are_distinct() {
        let a: u64 = stream_rng(1, 0).random();
        let b: u64 = stream_rng(1, 1).random();
        assert_ne!(a, b);
        assert_ne!(cell_stream(1, 0), cell_stream(0, 1));
    }

    #[test]
    fn no_contamination_is_identity() {
        let x = sample_gaussian(10, &[1.0, 1.0], 3).unwrap();
        assert_eq!(apply_contamination(&x, &ContaminationPlan::none()).unwrap(), x);
    }

    #[test]
    fn spike_rule_replaces_first_rows() {
        let (n, p) = (20, 5);
        let x = sample_gaussian(n, &vec![1.0; p], 3).unwrap();
        let magnitude = 100.0 * (n * p) as f64;
        let plan = ContaminationPlan::first_m(2, OutlierRule::CoordinateSpike { index: 1, magnitude });
        let xe = apply_contamination(&x, &plan).unwrap();
        for i in 0..2 {
            assert_eq!(xe.row(i), vec![0.0, magnitude, 0.0, 0.0, 0.0]);
        }
        for i in 2..n {
            let (a, b) = (xe.row(i), x.row(i));
            assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
        assert_eq!(plan.epsilon(n), 0.1);
    }

    #[test]
    fn max_norm_rule_uses_pure_data() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![3.0, 4.0], vec![0.0, 2.0]]).unwrap();
        let plan = ContaminationPlan::first_m(1, OutlierRule::MaxSquaredNormSpike { index: 1, offset: 100.0 });
        let xe = apply_contamination(&x, &plan).unwrap();
        assert_eq!(xe.row(0), vec![0.0, 125.0]);
    }

    #[test]
    fn explicit_positions() {
        let x = sample_gaussian(6, &[1.0, 1.0], 3).unwrap();
        let plan = ContaminationPlan::explicit(vec![4, 1], OutlierRule::ConstantVector(vec![9.0, 9.0]));
        let xe = apply_contamination(&x, &plan).unwrap();
        assert_eq!(xe.row(4), vec![9.0, 9.0]);
        assert_eq!(xe.row(1), vec![9.0, 9.0]);
        assert_eq!(xe.row(0), x.row(0));
    }

    #[test]
    fn contamination_errors() {
        let x = sample_gaussian(4, &[1.0, 1.0], 3).unwrap();
        let spike = OutlierRule::CoordinateSpike { index: 0, magnitude: 1.0 };
        assert!(apply_contamination(&x, &ContaminationPlan::explicit(vec![4], spike.clone())).is_err());
        assert!(apply_contamination(&x, &ContaminationPlan::explicit(vec![1, 1], spike.clone())).is_err());
        assert!(apply_contamination(&x, &ContaminationPlan::first_m(5, spike)).is_err());
        let bad = OutlierRule::CoordinateSpike { index: 2, magnitude: 1.0 };
        assert!(apply_contamination(&x, &ContaminationPlan::first_m(1, bad)).is_err());
        let short = OutlierRule::ConstantVector(vec![1.0]);
        assert!(apply_contamination(&x, &ContaminationPlan::first_m(1, short)).is_err());
    }

    #[test]
    fn pure_target_without_contamination_is_exactly_zero() {
        let config = ScenarioConfig {
            n: 60,
            d: 1,
            model: PopulationModel::student_t(vec![9.0, 1.0, 1.0], 3.0).unwrap(),
            radius: RadiusSpec::MedianNorm,
            plan: ContaminationPlan::none(),
            target: Target::PureDataSubspace,
            replications: 8,
            seed: 11,
        };
        let loss = empirical_sin_theta(&config).unwrap();
        assert_eq!(loss.mean, 0.0);
        assert!(loss.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mean_and_se_basic() {
        let (m, se) = mean_and_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(mean_and_se(&[5.0]), (5.0, None));
    }
}
