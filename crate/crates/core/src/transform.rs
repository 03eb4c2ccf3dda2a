//! Radial winsorization and radius policies.
//!
//! A point is left alone when its Euclidean norm is at most `r` and is
//! rescaled onto the radius-`r` sphere otherwise. The boundary `‖x‖ = r`
//! belongs to the identity branch. Zero rows always pass through
//! winsorization; they are only a problem for spherical normalization.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense `n × p` data matrix, one observation per row.
///
/// Rows are assumed centered; nothing in the library re-centers them.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::invalid(format!(
                "data matrix must be at least 1x1, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::invalid(format!("non-finite entry at row {i}, column {j}")));
        }
        Ok(Self { values })
    }

    /// Builds a matrix from row vectors, rejecting ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::mismatch(format!(
                "row {i} has {} values, expected {p}",
                rows[i].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), p, &flat))
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_row_major(n: usize, p: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * p {
            return Err(Error::mismatch(format!(
                "buffer holds {} values, expected {n}x{p}",
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, p, data))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.values.row(i).norm()).collect()
    }

    /// Subtracts the column means. Only the CLI's `--center` flag uses this.
    pub fn center_columns(&self) -> DataMatrix {
        let mut values = self.values.clone();
        let n = self.n() as f64;
        for mut col in values.column_iter_mut() {
            let mean = col.sum() / n;
            col.add_scalar_mut(-mean);
        }
        DataMatrix { values }
    }
}

/// How the winsorization radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusSpec {
    /// A fixed radius `r > 0`.
    Fixed(f64),
    /// Median of the row norms.
    MedianNorm,
    /// `r = p^(1/2 + beta)`.
    PowerLaw(f64),
    /// The `r → 0` limit: every row normalized to unit length.
    Spherical,
    /// No winsorization (classical PCA).
    None,
}

impl RadiusSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RadiusSpec::Fixed(r) if !(r.is_finite() && r > 0.0) => {
                Err(Error::invalid(format!("fixed radius must be finite and > 0, got {r}")))
            }
            RadiusSpec::PowerLaw(beta) if !beta.is_finite() => {
                Err(Error::invalid(format!("power-law exponent must be finite, got {beta}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for RadiusSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusSpec::Fixed(r) => write!(f, "fixed:{}", crate::format::fmt_f64(*r)),
            RadiusSpec::MedianNorm => f.write_str("median"),
            RadiusSpec::PowerLaw(b) => write!(f, "power:{}", crate::format::fmt_f64(*b)),
            RadiusSpec::Spherical => f.write_str("spherical"),
            RadiusSpec::None => f.write_str("none"),
        }
    }
}

impl FromStr for RadiusSpec {
    type Err = Error;

    /// Accepts `none`, `spherical`, `median`, `fixed:<r>` and `power:<beta>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let spec = match s.split_once(':') {
            None => match s {
                "none" => RadiusSpec::None,
                "spherical" => RadiusSpec::Spherical,
                "median" => RadiusSpec::MedianNorm,
                _ => return Err(Error::invalid(format!("unknown radius spec '{s}'"))),
            },
            Some((kind, value)) => {
                let v: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad number in radius spec '{s}'")))?;
                match kind {
                    "fixed" => RadiusSpec::Fixed(v),
                    "power" => RadiusSpec::PowerLaw(v),
                    _ => return Err(Error::invalid(format!("unknown radius spec '{s}'"))),
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Outcome of [`resolve_radius`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedRadius {
    /// Winsorize at this radius.
    Radius(f64),
    /// Normalize every row.
    Spherize,
    /// Leave the data untouched.
    Identity,
}

impl ResolvedRadius {
    pub fn radius(&self) -> Option<f64> {
        match self {
            ResolvedRadius::Radius(r) => Some(*r),
            _ => None,
        }
    }

    pub fn mode(&self) -> &'static str {
        match self {
            ResolvedRadius::Radius(_) => "winsorize",
            ResolvedRadius::Spherize => "spherize",
            ResolvedRadius::Identity => "identity",
        }
    }
}

/// Sample median; even counts use the midpoint of the two central values.
pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn resolve_radius(x: &DataMatrix, spec: RadiusSpec) -> Result<ResolvedRadius> {
    spec.validate()?;
    match spec {
        RadiusSpec::Fixed(r) => Ok(ResolvedRadius::Radius(r)),
        RadiusSpec::MedianNorm => {
            let r = median(&x.row_norms());
            if r > 0.0 {
                Ok(ResolvedRadius::Radius(r))
            } else {
                Err(Error::DegenerateRadius("median row norm is 0".into()))
            }
        }
        RadiusSpec::PowerLaw(beta) => {
            let r = (x.p() as f64).powf(0.5 + beta);
            if r.is_finite() && r > 0.0 {
                Ok(ResolvedRadius::Radius(r))
            } else {
                Err(Error::DegenerateRadius(format!(
                    "p^(1/2 + {beta}) is not a positive finite radius"
                )))
            }
        }
        RadiusSpec::Spherical => Ok(ResolvedRadius::Spherize),
        RadiusSpec::None => Ok(ResolvedRadius::Identity),
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("radius must be finite and > 0, got {r}")))
    }
}

/// Scale factor that maps a point of norm `norm` into the closed `r`-ball.
///
/// Returns `None` for points already inside. The factor is nudged down when
/// rounding would leave the rescaled norm a hair above `r`, so a second pass
/// is always the identity.
fn clip_factor(norm: f64, r: f64, rescaled_norm: impl Fn(f64) -> f64) -> Option<f64> {
    if norm <= r {
        return None;
    }
    let mut c = r / norm;
    for _ in 0..8 {
        if rescaled_norm(c) <= r {
            break;
        }
        c *= 1.0 - f64::EPSILON;
    }
    Some(c)
}

/// Winsorizes a single point at radius `r`.
pub fn winsorize_point(x: &[f64], r: f64) -> Result<Vec<f64>> {
    check_radius(r)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("point has non-finite coordinates"));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scaled = |c: f64| x.iter().map(|v| (v * c) * (v * c)).sum::<f64>().sqrt();
    Ok(match clip_factor(norm, r, scaled) {
        None => x.to_vec(),
        Some(c) => x.iter().map(|v| v * c).collect(),
    })
}

/// Winsorizes every row of `x` at radius `r`.
pub fn winsorize_dataset(x: &DataMatrix, r: f64) -> Result<DataMatrix> {
    check_radius(r)?;
    let mut values = x.values.clone();
    let factors: Vec<Option<f64>> = (0..x.n())
        .into_par_iter()
        .map(|i| {
            let row = x.values.row(i);
            clip_factor(row.norm(), r, |c| (row * c).norm())
        })
        .collect();
    for (i, c) in factors.into_iter().enumerate() {
        if let Some(c) = c {
            values.row_mut(i).scale_mut(c);
        }
    }
    Ok(DataMatrix { values })
}

/// What [`spherize_dataset`] does with rows of zero norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroRowPolicy {
    #[default]
    Error,
    Drop,
}

/// Result of spherical normalization, including which rows were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Spherized {
    pub data: DataMatrix,
    pub policy: ZeroRowPolicy,
    pub dropped_rows: Vec<usize>,
}

/// Normalizes every row to unit length.
pub fn spherize_dataset(x: &DataMatrix, policy: ZeroRowPolicy) -> Result<Spherized> {
    let norms = x.row_norms();
    let zero_rows: Vec<usize> = (0..x.n()).filter(|&i| norms[i] == 0.0).collect();
    if !zero_rows.is_empty() && policy == ZeroRowPolicy::Error {
        return Err(Error::invalid(format!(
            "cannot spherize zero row(s) {zero_rows:?}"
        )));
    }
    let kept: Vec<usize> = (0..x.n()).filter(|&i| norms[i] > 0.0).collect();
    if kept.is_empty() {
        return Err(Error::invalid("every row is zero; nothing left to spherize"));
    }
    let p = x.p();
    let values = DMatrix::from_fn(kept.len(), p, |k, j| {
        let i = kept[k];
        x.values[(i, j)] / norms[i]
    });
    Ok(Spherized {
        data: DataMatrix { values },
        policy,
        dropped_rows: zero_rows,
    })
}

/// Applies a resolved radius: winsorize, spherize (zero rows are an error)
/// or pass through.
pub fn apply_radius(x: &DataMatrix, radius: ResolvedRadius) -> Result<DataMatrix> {
    match radius {
        ResolvedRadius::Radius(r) => winsorize_dataset(x, r),
        ResolvedRadius::Spherize => Ok(spherize_dataset(x, ZeroRowPolicy::Error)?.data),
        ResolvedRadius::Identity => Ok(x.clone()),
    }
}
