//! Closed-form robustness and accuracy bounds for winsorized PCA.
//!
//! Every bound is evaluated as written, without clipping; a bound above one
//! is vacuous for a sine but is still reported. [`BoundReport::clipped`]
//! gives the value capped at 1.
//!
//! Population winsorized eigenvalues `λ_j^(r)` have no closed form and are
//! estimated by Monte Carlo in [`estimate_winsorized_eigenvalues`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::simulate::{draw_whitened, stream_rng};
use crate::subspace::Spectrum;

/// Elliptical family of the uncontaminated observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Gaussian,
    /// Multivariate t with `nu > 2` degrees of freedom, scaled so that its
    /// covariance (not its scale matrix) is `Σ`.
    StudentT { nu: f64 },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Distribution::StudentT { nu } if !(nu > 2.0 && nu.is_finite()) => Err(Error::invalid(
                format!("Student-t needs finite nu > 2 for a finite covariance, got {nu}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Distribution::Gaussian => "gaussian".into(),
            Distribution::StudentT { nu } => format!("t{}", crate::format::fmt_f64(*nu)),
        }
    }
}

/// Diagonal population model: `Σ = diag(sigma_eigenvalues)`.
///
/// The diagonal is kept in coordinate order, which need not be sorted; use
/// [`PopulationModel::sorted_eigenvalues`] for `λ_1 ≥ … ≥ λ_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationModel {
    pub sigma_eigenvalues: Vec<f64>,
    pub distribution: Distribution,
    /// Subgaussian parameter of `Σ^{-1/2} x`; `+∞` when the law is not
    /// subgaussian.
    pub sigma_sub: f64,
}

impl PopulationModel {
    pub fn new(sigma_eigenvalues: Vec<f64>, distribution: Distribution, sigma_sub: f64) -> Result<Self> {
        if sigma_eigenvalues.is_empty() {
            return Err(Error::invalid("population model needs at least one eigenvalue"));
        }
        if let Some(v) = sigma_eigenvalues.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::invalid(format!("population eigenvalues must be finite and > 0, got {v}")));
        }
        distribution.validate()?;
        if !(sigma_sub > 0.0) {
            return Err(Error::invalid(format!("subgaussian parameter must be > 0, got {sigma_sub}")));
        }
        if matches!(distribution, Distribution::StudentT { .. }) && sigma_sub.is_finite() {
            return Err(Error::invalid("a Student-t model is not subgaussian; sigma_sub must be +inf"));
        }
        Ok(Self {
            sigma_eigenvalues,
            distribution,
            sigma_sub,
        })
    }

    /// Gaussian model; a standard normal vector is 1-subgaussian.
    pub fn gaussian(sigma_eigenvalues: Vec<f64>) -> Result<Self> {
        Self::new(sigma_eigenvalues, Distribution::Gaussian, 1.0)
    }

    pub fn student_t(sigma_eigenvalues: Vec<f64>, nu: f64) -> Result<Self> {
        Self::new(sigma_eigenvalues, Distribution::StudentT { nu }, f64::INFINITY)
    }

    pub fn p(&self) -> usize {
        self.sigma_eigenvalues.len()
    }

    pub fn sorted_eigenvalues(&self) -> Vec<f64> {
        let mut v = self.sigma_eigenvalues.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn lambda_max(&self) -> f64 {
        self.sigma_eigenvalues.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn lambda_min(&self) -> f64 {
        self.sigma_eigenvalues.iter().copied().fold(f64::MAX, f64::min)
    }

    /// Coordinates of the `d` largest variances; their span is the
    /// population PC subspace.
    pub fn top_axes(&self, d: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.p()).collect();
        idx.sort_by(|&a, &b| self.sigma_eigenvalues[b].total_cmp(&self.sigma_eigenvalues[a]).then(a.cmp(&b)));
        idx.truncate(d);
        idx.sort_unstable();
        idx
    }
}

/// Where a [`WinsorizedSpectrum`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumSource {
    MonteCarlo { samples: usize, seed: u64 },
    Sample,
}

/// Eigenvalues of the (population or sample) covariance of winsorized data.
#[derive(Debug, Clone, PartialEq)]
pub struct WinsorizedSpectrum {
    /// Descending, each at most `r²`.
    pub values: Vec<f64>,
    /// Monte Carlo standard errors, aligned with `values`.
    pub std_errors: Option<Vec<f64>>,
    pub r: f64,
    pub source: SpectrumSource,
}

impl WinsorizedSpectrum {
    /// Wraps the spectrum of `(1/n) X^(r)ᵀ X^(r)`.
    pub fn from_sample(spectrum: &Spectrum, r: f64) -> Result<Self> {
        Self::from_values(spectrum.eigenvalues.clone(), r)
    }

    /// Wraps sample eigenvalues given directly (e.g. from the command line).
    pub fn from_values(mut values: Vec<f64>, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid(format!("radius must be finite and > 0, got {r}")));
        }
        if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("winsorized eigenvalues must be finite and >= 0"));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        let r2 = r * r;
        if values[0] > r2 * (1.0 + 1e-9) {
            return Err(Error::invalid(format!(
                "winsorized eigenvalue {} exceeds r^2 = {r2}",
                values[0]
            )));
        }
        Ok(Self {
            values,
            std_errors: None,
            r,
            source: SpectrumSource::Sample,
        })
    }

    pub fn p(&self) -> usize {
        self.values.len()
    }

    /// Whether the total variance fits inside the radius, `Σ_j λ_j^(r) ≤ r²`
    /// (with `slack` added, e.g. a few Monte Carlo standard errors).
    pub fn total_within_radius(&self, slack: f64) -> bool {
        self.values.iter().sum::<f64>() <= self.r * self.r * (1.0 + 1e-9) + slack
    }

    /// `λ_j^(r)` for 1-based `j`, zero beyond `p`.
    pub fn value(&self, j: usize) -> f64 {
        assert!(j >= 1, "eigenvalue indices are 1-based");
        self.values.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn gap(&self, d: usize) -> f64 {
        self.value(d) - self.value(d + 1)
    }
}

/// A bound value with its named sub-terms and precondition flags.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub value: f64,
    pub components: Vec<(&'static str, f64)>,
    pub assumptions: Vec<(&'static str, bool)>,
}

impl BoundReport {
    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
    }

    pub fn assumptions_met(&self) -> bool {
        self.assumptions.iter().all(|(_, ok)| *ok)
    }

    /// The bound capped at 1, the largest possible sine.
    pub fn clipped(&self) -> f64 {
        self.value.min(1.0)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if (0.0..0.5).contains(&eps) {
        Ok(())
    } else {
        Err(Error::invalid(format!("contamination fraction must lie in [0, 0.5), got {eps}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// `√(p/n) ∨ p/n`.
fn dimension_ratio(p: usize, n: usize) -> f64 {
    let ratio = p as f64 / n as f64;
    ratio.sqrt().max(ratio)
}

struct ConcentrationInputs {
    r2: f64,
    gap: f64,
}

fn concentration_inputs(
    lam1: f64,
    lamp: f64,
    wspec: &WinsorizedSpectrum,
    d: usize,
    eps: f64,
    n: usize,
    p: usize,
) -> Result<ConcentrationInputs> {
    check_positive("lambda_1", lam1)?;
    check_positive("lambda_p", lamp)?;
    if lamp > lam1 {
        return Err(Error::invalid(format!("lambda_p = {lamp} exceeds lambda_1 = {lam1}")));
    }
    check_eps(eps)?;
    if n == 0 || p == 0 {
        return Err(Error::invalid("n and p must be >= 1"));
    }
    if d == 0 || d >= p {
        return Err(Error::invalid(format!("need 1 <= d < p, got d = {d}, p = {p}")));
    }
    if wspec.p() != p {
        return Err(Error::mismatch(format!(
            "winsorized spectrum has {} values, p = {p}",
            wspec.p()
        )));
    }
    Ok(ConcentrationInputs {
        r2: wspec.r * wspec.r,
        gap: wspec.gap(d),
    })
}

fn concentration_report(contamination_num: f64, sampling_num: f64, gap: f64) -> BoundReport {
    let positive_gap = gap > 0.0;
    let divide = |num: f64| {
        if num == 0.0 {
            0.0
        } else if positive_gap {
            num / gap
        } else {
            f64::INFINITY
        }
    };
    let contamination = divide(contamination_num);
    let sampling = if positive_gap { sampling_num / gap } else { f64::INFINITY };
    BoundReport {
        value: contamination + sampling,
        components: vec![("contamination", contamination), ("sampling", sampling), ("gap", gap)],
        assumptions: vec![("positive_gap", positive_gap)],
    }
}

/// Bound on `E[sin Θ]` against the population subspace for any elliptical law:
/// `2r²ε/g + 2⁸ (r²λ₁/(pλ_p)) (√(p/n) ∨ p/n) / g` with
/// `g = λ_d^(r) − λ_{d+1}^(r)`. Infinite when `g ≤ 0`.
pub fn concentration_bound_elliptical(
    lam1: f64,
    lamp: f64,
    wspec: &WinsorizedSpectrum,
    d: usize,
    eps: f64,
    n: usize,
    p: usize,
) -> Result<BoundReport> {
    let inp = concentration_inputs(lam1, lamp, wspec, d, eps, n, p)?;
    let contamination = 2.0 * inp.r2 * eps;
    let sampling = 256.0 * (inp.r2 * lam1 / (p as f64 * lamp)) * dimension_ratio(p, n);
    Ok(concentration_report(contamination, sampling, inp.gap))
}

/// Subgaussian refinement: the sampling factor `r²/(pλ_p)` becomes
/// `r²/(pλ_p) ∧ σ²`.
#[allow(clippy::too_many_arguments)]
pub fn concentration_bound_subgaussian(
    lam1: f64,
    lamp: f64,
    sigma_sub: f64,
    wspec: &WinsorizedSpectrum,
    d: usize,
    eps: f64,
    n: usize,
    p: usize,
) -> Result<BoundReport> {
    if sigma_sub.is_infinite() {
        return Err(Error::invalid(
            "sigma_sub is +inf (not subgaussian); use the elliptical bound",
        ));
    }
    check_positive("sigma_sub", sigma_sub)?;
    let inp = concentration_inputs(lam1, lamp, wspec, d, eps, n, p)?;
    let contamination = 2.0 * inp.r2 * eps;
    let factor = (inp.r2 / (p as f64 * lamp)).min(sigma_sub * sigma_sub);
    let sampling = 256.0 * lam1 * factor * dimension_ratio(p, n);
    Ok(concentration_report(contamination, sampling, inp.gap))
}

/// Rate shapes for `r = p^(1/2 + β)` with unit constants.
///
/// Returns `(p^{1+2(β∨0)} ε, p^{2(β∨0)} (√(p/n) ∨ p/n))`, or
/// `(…, √(p/n) ∨ p/n)` under the subgaussian assumption. The true constants
/// are unknown, so these are shapes, not calibrated bounds.
pub fn asymptotic_rate(beta: f64, p: usize, n: usize, eps: f64, subgaussian: bool) -> Result<(f64, f64)> {
    if p == 0 || n == 0 {
        return Err(Error::invalid("n and p must be >= 1"));
    }
    let b = beta.max(0.0);
    let pf = p as f64;
    let term1 = pf.powf(1.0 + 2.0 * b) * eps;
    let ratio = dimension_ratio(p, n);
    let term2 = if subgaussian { ratio } else { pf.powf(2.0 * b) * ratio };
    Ok((term1, term2))
}

/// Subgaussian parameter of the winsorized vector:
/// `√λ₁·σ ∧ √(λ₁r²/(λ_p p))`. With `σ = +∞` only the radius branch remains.
pub fn subgaussian_param_winsorized(lam1: f64, lamp: f64, p: usize, r: f64, sigma_sub: f64) -> Result<f64> {
    check_positive("lambda_1", lam1)?;
    check_positive("lambda_p", lamp)?;
    check_positive("r", r)?;
    if p == 0 || !(sigma_sub > 0.0) {
        return Err(Error::invalid("need p >= 1 and sigma_sub > 0"));
    }
    let radius_branch = (lam1 * r * r / (lamp * p as f64)).sqrt();
    Ok((lam1.sqrt() * sigma_sub).min(radius_branch))
}

/// `E‖Σ̂_ε^(r) − Σ^(r)‖ ≤ εr² + 2⁴ σ_r² (8p/n ∨ √(8p/n))`.
pub fn covariance_deviation_bound(eps: f64, r: f64, sigma_r: f64, n: usize, p: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid(format!("contamination fraction must lie in [0, 1], got {eps}")));
    }
    if !(r.is_finite() && r >= 0.0) || !(sigma_r.is_finite() && sigma_r >= 0.0) {
        return Err(Error::invalid("r and sigma_r must be finite and >= 0"));
    }
    if n == 0 || p == 0 {
        return Err(Error::invalid("n and p must be >= 1"));
    }
    let ratio = 8.0 * p as f64 / n as f64;
    Ok(eps * r * r + 16.0 * sigma_r * sigma_r * ratio.max(ratio.sqrt()))
}

/// Weak and strong breakdown points of classical PCA: `(1/n, d/n)`.
pub fn pca_breakdown_points(n: usize, d: usize) -> Result<(f64, f64)> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("need n >= 1 and d >= 1"));
    }
    Ok((1.0 / n as f64, d as f64 / n as f64))
}

/// Lower bounds on the weak and strong breakdown points of winsorized PCA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakdownBounds {
    /// `(λ̂_d − λ̂_{d+1}) / (2r²)`, clamped to `[0, 1/2]`.
    pub weak: f64,
    /// `sup_{d₀ ≤ d} (Σ_{j≤d₀} λ̂_j − Σ_{j≤d₀} λ̂_{d+j}) / (2r²d₀)`, clamped.
    pub strong: f64,
    pub weak_raw: f64,
    pub strong_raw: f64,
    /// The `d₀` attaining the supremum.
    pub strong_argmax: usize,
}

pub fn wpca_breakdown_lower_bounds(wspec: &WinsorizedSpectrum, d: usize) -> Result<BreakdownBounds> {
    let p = wspec.p();
    if d == 0 || d >= p {
        return Err(Error::invalid(format!("need 1 <= d < p, got d = {d}, p = {p}")));
    }
    let denom = 2.0 * wspec.r * wspec.r;
    let weak_raw = wspec.gap(d) / denom;
    let (mut head, mut tail) = (0.0, 0.0);
    let (mut strong_raw, mut strong_argmax) = (f64::NEG_INFINITY, 1);
    for d0 in 1..=d {
        head += wspec.value(d0);
        tail += wspec.value(d + d0);
        let v = (head - tail) / (denom * d0 as f64);
        if v > strong_raw {
            strong_raw = v;
            strong_argmax = d0;
        }
    }
    let clamp = |v: f64| v.clamp(0.0, 0.5);
    Ok(BreakdownBounds {
        weak: clamp(weak_raw),
        strong: clamp(strong_raw),
        weak_raw,
        strong_raw,
        strong_argmax,
    })
}

/// Deterministic perturbation bounds between the winsorized PC subspaces of
/// pure and contaminated data.
///
/// `bound1 = 2r²ε/g` (infinite when `g = 0`); `bound2 = r²ε/(g − 2r²ε)`,
/// reported only when `g > 4r²ε`. The report value is the smaller of the two.
pub fn perturbation_bound(lam_d: f64, lam_d1: f64, r: f64, eps: f64) -> Result<BoundReport> {
    check_positive("r", r)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid(format!("contamination fraction must lie in [0, 1], got {eps}")));
    }
    if !(lam_d.is_finite() && lam_d1.is_finite()) {
        return Err(Error::invalid("eigenvalues must be finite"));
    }
    let gap = lam_d - lam_d1;
    if gap < 0.0 {
        return Err(Error::invalid(format!(
            "eigenvalues out of order: lambda_d = {lam_d} < lambda_(d+1) = {lam_d1}"
        )));
    }
    let shift = r * r * eps;
    let bound1 = if gap > 0.0 { 2.0 * shift / gap } else { f64::INFINITY };
    let bound2_valid = gap > 4.0 * shift;
    let mut components = vec![("bound1", bound1), ("gap", gap)];
    let mut value = bound1;
    if bound2_valid {
        let bound2 = shift / (gap - 2.0 * shift);
        components.push(("bound2", bound2));
        value = value.min(bound2);
    }
    Ok(BoundReport {
        value,
        components,
        assumptions: vec![("positive_gap", gap > 0.0), ("bound2_valid", bound2_valid)],
    })
}

const MC_BLOCK: usize = 4096;

/// Welford accumulator; blocks are merged in index order so results do not
/// depend on the number of worker threads.
#[derive(Clone)]
struct Moments {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(p: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; p],
            m2: vec![0.0; p],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1.0;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / self.count;
            *s += delta * (v - *m);
        }
    }

    fn merge(mut self, other: &Moments) -> Self {
        let total = self.count + other.count;
        for j in 0..self.mean.len() {
            let delta = other.mean[j] - self.mean[j];
            self.mean[j] += delta * other.count / total;
            self.m2[j] += other.m2[j] + delta * delta * self.count * other.count / total;
        }
        self.count = total;
        self
    }
}

/// Monte Carlo estimate of `λ_j^(r) = E[λ_j y_j² (1 ∧ r²/s²)]`,
/// `s² = Σ_l λ_l y_l²`, with `y` drawn from the whitened law of the model.
///
/// For a diagonal `Σ` the covariance of the winsorized vector is diagonal by
/// symmetry, so its eigenvalues are these per-coordinate expectations.
pub fn estimate_winsorized_eigenvalues(
    model: &PopulationModel,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<WinsorizedSpectrum> {
    check_positive("r", r)?;
    if samples < 1000 {
        return Err(Error::invalid(format!("need at least 1000 Monte Carlo samples, got {samples}")));
    }
    let p = model.p();
    let lambdas = &model.sigma_eigenvalues;
    let r2 = r * r;
    let blocks = samples.div_ceil(MC_BLOCK);
    let partials: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut acc = Moments::new(p);
            let mut y = vec![0.0; p];
            let mut contrib = vec![0.0; p];
            for _ in 0..count {
                draw_whitened(&mut rng, model.distribution, &mut y);
                let s2: f64 = lambdas.iter().zip(&y).map(|(l, v)| l * v * v).sum();
                let shrink = if s2 > r2 { r2 / s2 } else { 1.0 };
                for j in 0..p {
                    contrib[j] = lambdas[j] * y[j] * y[j] * shrink;
                }
                acc.push(&contrib);
            }
            acc
        })
        .collect();
    let total = partials
        .iter()
        .skip(1)
        .fold(partials[0].clone(), |acc, m| acc.merge(m));
    let n = total.count;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| total.mean[b].total_cmp(&total.mean[a]));
    let values = order.iter().map(|&j| total.mean[j]).collect();
    let std_errors = order
        .iter()
        .map(|&j| (total.m2[j] / (n - 1.0)).sqrt() / n.sqrt())
        .collect();
    Ok(WinsorizedSpectrum {
        values,
        std_errors: Some(std_errors),
        r,
        source: SpectrumSource::MonteCarlo { samples, seed },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    fn wspec(values: &[f64], r: f64) -> WinsorizedSpectrum {
        WinsorizedSpectrum::from_values(values.to_vec(), r).unwrap()
    }

    #[test]
    fn elliptical_bound_hand_value() {
        // r = 1, gap 0.5 at d = 1, p = n = 100.
        let mut vals = vec![0.0; 100];
        vals[0] = 0.5;
        let w = wspec(&vals, 1.0);
        let rep = concentration_bound_elliptical(1.0, 1.0, &w, 1, 0.1, 100, 100).unwrap();
        assert!(close(rep.value, 5.52));
        assert!(close(rep.component("contamination").unwrap(), 0.4));
        assert!(close(rep.component("sampling").unwrap(), 5.12));
        let clean = concentration_bound_elliptical(1.0, 1.0, &w, 1, 0.0, 100, 100).unwrap();
        assert_eq!(clean.component("contamination"), Some(0.0));
        assert!(clean.assumptions_met());
        assert_eq!(rep.clipped(), 1.0);
    }

    #[test]
    fn elliptical_bound_zero_gap_is_infinite() {
        let w = wspec(&[0.25, 0.25, 0.1], 1.0);
        let rep = concentration_bound_elliptical(1.0, 1.0, &w, 1, 0.1, 50, 3).unwrap();
        assert_eq!(rep.value, f64::INFINITY);
        assert!(!rep.assumptions_met());
    }

    #[test]
    fn elliptical_bound_rejects_bad_eps() {
        let w = wspec(&[0.5, 0.1], 1.0);
        assert!(concentration_bound_elliptical(1.0, 1.0, &w, 1, 0.5, 10, 2).is_err());
        assert!(concentration_bound_elliptical(1.0, 1.0, &w, 1, -0.1, 10, 2).is_err());
    }

    #[test]
    fn subgaussian_bound() {
        let mut vals = vec![0.0; 100];
        vals[0] = 0.5;
        let w = wspec(&vals, 1.0);
        let ell = concentration_bound_elliptical(1.0, 1.0, &w, 1, 0.1, 100, 100).unwrap();
        // σ² = r²/(pλ_p) = 0.01: same factor, same value.
        let sub = concentration_bound_subgaussian(1.0, 1.0, 0.1, &w, 1, 0.1, 100, 100).unwrap();
        assert!(close(sub.value, 5.52));
        // Large σ: the min picks the elliptical factor.
        let big = concentration_bound_subgaussian(1.0, 1.0, 10.0, &w, 1, 0.1, 100, 100).unwrap();
        assert!(close(big.value, ell.value));
        // Small σ shrinks only the sampling term.
        let small = concentration_bound_subgaussian(1.0, 1.0, 0.05, &w, 1, 0.1, 100, 100).unwrap();
        assert!(close(small.component("sampling").unwrap(), 5.12 / 4.0));
        assert!(concentration_bound_subgaussian(1.0, 1.0, f64::INFINITY, &w, 1, 0.1, 100, 100).is_err());
    }

    #[test]
    fn subgaussian_min_branch() {
        // r²/(pλ_p) = 4 > σ² = 1, λ₁ = 1, gap 1, p = n.
        let mut vals = vec![0.0; 4];
        vals[0] = 1.0;
        let w = wspec(&vals, 4.0);
        let sub = concentration_bound_subgaussian(1.0, 1.0, 1.0, &w, 1, 0.0, 4, 4).unwrap();
        assert!(close(sub.component("sampling").unwrap(), 256.0));
    }

    #[test]
    fn rate_examples() {
        let (t1, t2) = asymptotic_rate(0.0, 100, 400, 0.0, false).unwrap();
        assert_eq!(t1, 0.0);
        assert!(close(t2, 0.5));
        let (_, t2) = asymptotic_rate(-0.5, 100, 400, 0.0, false).unwrap();
        assert!(close(t2, 0.5));
        let (t1, _) = asymptotic_rate(1.0, 10, 10, 0.1, false).unwrap();
        assert!(close(t1, 100.0));
        let (_, t2) = asymptotic_rate(1.0, 10, 10, 0.0, true).unwrap();
        assert!(close(t2, 1.0));
        let (_, t2) = asymptotic_rate(1.0, 10, 10, 0.0, false).unwrap();
        assert!(close(t2, 100.0));
    }

    #[test]
    fn subgaussian_param_examples() {
        let p = 16;
        let r = (p as f64).sqrt();
        assert!(close(subgaussian_param_winsorized(1.0, 1.0, p, r, f64::INFINITY).unwrap(), 1.0));
        // σ = 0.5, λ₁ = 4: √λ₁σ = 1, radius branch = √(4·100/(1·4)) = 10.
        assert!(close(subgaussian_param_winsorized(4.0, 1.0, 4, 10.0, 0.5).unwrap(), 1.0));
        assert!(close(subgaussian_param_winsorized(2.0, 2.0, 9, 6.0, 1e6).unwrap(), 2.0));
    }

    #[test]
    fn deviation_examples() {
        assert!(close(covariance_deviation_bound(0.0, 3.0, 1.0, 8, 1).unwrap(), 16.0));
        let sampling = covariance_deviation_bound(0.0, 0.0, 1.0, 8, 1).unwrap();
        assert!(close(covariance_deviation_bound(0.5, 0.0, 1.0, 8, 1).unwrap(), sampling));
        let a = covariance_deviation_bound(0.1, 2.0, 1.0, 100, 5).unwrap();
        let b = covariance_deviation_bound(0.2, 2.0, 1.0, 100, 5).unwrap();
        assert!(b > a);
    }

    #[test]
    fn pca_breakdown_examples() {
        assert_eq!(pca_breakdown_points(100, 1).unwrap(), (0.01, 0.01));
        assert_eq!(pca_breakdown_points(1000, 2).unwrap(), (0.001, 0.002));
        assert!(pca_breakdown_points(0, 1).is_err());
    }

    #[test]
    fn wpca_breakdown_examples() {
        let b = wpca_breakdown_lower_bounds(&wspec(&[3.0, 2.0, 1.0, 0.5], 2.0), 2).unwrap();
        assert!(close(b.weak, 0.125));
        assert!(close(b.strong, 0.25));
        assert_eq!(b.strong_argmax, 1);

        let flat = wpca_breakdown_lower_bounds(&wspec(&[0.2, 0.2, 0.2], 1.0), 1).unwrap();
        assert_eq!((flat.weak, flat.strong), (0.0, 0.0));

        let r = 1.5;
        let sat = wpca_breakdown_lower_bounds(&wspec(&[r * r, 0.0], r), 1).unwrap();
        assert!(close(sat.weak, 0.5) && close(sat.strong, 0.5));
    }

    #[test]
    fn wpca_breakdown_pads_with_zeros() {
        // d = 2, p = 3: λ̂_4 := 0 in the d₀ = 2 term.
        let b = wpca_breakdown_lower_bounds(&wspec(&[0.5, 0.3, 0.1], 1.0), 2).unwrap();
        let d0_2: f64 = (0.8 - 0.1) / 4.0;
        let d0_1: f64 = (0.5 - 0.1) / 2.0;
        assert!(close(b.strong_raw, d0_1.max(d0_2)));
    }

    #[test]
    fn perturbation_examples() {
        let rep = perturbation_bound(1.5, 0.5, 1.0, 0.1).unwrap();
        assert!(close(rep.component("bound1").unwrap(), 0.2));
        assert!(close(rep.component("bound2").unwrap(), 0.125));
        assert!(close(rep.value, 0.125));

        let rep = perturbation_bound(1.5, 0.5, 1.0, 0.3).unwrap();
        assert!(close(rep.component("bound1").unwrap(), 0.6));
        assert_eq!(rep.component("bound2"), None);

        let rep = perturbation_bound(1.5, 0.5, 1.0, 0.0).unwrap();
        assert_eq!((rep.component("bound1"), rep.component("bound2")), (Some(0.0), Some(0.0)));

        let rep = perturbation_bound(1.0, 1.0, 1.0, 0.1).unwrap();
        assert_eq!(rep.value, f64::INFINITY);
        assert!(perturbation_bound(0.5, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(PopulationModel::student_t(vec![1.0], 2.0).is_err());
        assert!(PopulationModel::gaussian(vec![1.0, 0.0]).is_err());
        assert!(PopulationModel::new(vec![1.0], Distribution::StudentT { nu: 3.0 }, 1.0).is_err());
        let m = PopulationModel::gaussian(vec![4.0, 9.0, 1.0]).unwrap();
        assert_eq!(m.top_axes(2), vec![0, 1]);
        assert_eq!(m.sorted_eigenvalues(), vec![9.0, 4.0, 1.0]);
    }

    #[test]
    fn monte_carlo_needs_enough_samples() {
        let m = PopulationModel::gaussian(vec![1.0, 1.0]).unwrap();
        assert!(estimate_winsorized_eigenvalues(&m, 1.0, 999, 1).is_err());
    }

    #[test]
    fn monte_carlo_large_radius_recovers_sigma() {
        let m = PopulationModel::gaussian(vec![4.0, 2.0, 1.0]).unwrap();
        let r = 10.0 * 7f64.sqrt() * 3.0;
        let w = estimate_winsorized_eigenvalues(&m, r, 20_000, 5).unwrap();
        let se = w.std_errors.as_ref().unwrap();
        for (j, lam) in [4.0, 2.0, 1.0].iter().enumerate() {
            assert!((w.values[j] - lam).abs() <= 3.0 * se[j], "{j}: {} vs {lam}", w.values[j]);
        }
    }

    #[test]
    fn monte_carlo_isotropic_values_agree() {
        let m = PopulationModel::student_t(vec![1.0; 4], 3.0).unwrap();
        let w = estimate_winsorized_eigenvalues(&m, 1.5, 40_000, 9).unwrap();
        let se = w.std_errors.as_ref().unwrap();
        let spread = w.values[0] - w.values[3];
        assert!(spread <= 4.0 * (se[0] + se[3]));
        assert!(w.values.iter().sum::<f64>() <= 1.5f64.powi(2));
    }
}
