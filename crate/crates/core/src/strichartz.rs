//! Space-time moments of `F(x, t) = sum_{|z| < R} a_z e^{2 pi i (x.z + t q(z))}`
//! on `T^{n+1}`: Strichartz ratios, level-set measures, the large-value /
//! small-value split used to trade exponents, and power-law sharpness sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expsum::{
    schrodinger_samples, CoefficientAssignment, CoefficientModel, DispersionForm, FieldSamples, TimeSampling, TorusGrid,
};
use crate::moments::{
    growth_fit, lp_norm, mean_abs_pow, measure_on_grid, refine_by_doubling, GridPolicy, MomentReport,
};
use crate::surfaces::{
    irrational_paraboloid_points, paraboloid_points, FrequencySet, IntForm, ParaboloidForm, RealForm,
};
use crate::{Error, Result};

/// Slack allowed by [`epsilon_removal_check`] for floating-point rounding.
pub const SPLIT_TOL: f64 = 1e-12;

/// Dispersion relation of the space-time sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Dispersion {
    /// `q(z) = |z|^2`.
    #[default]
    Unit,
    /// `q(z) = z^T Q z` for an integer positive-definite `Q`.
    Integer { rows: Vec<Vec<i64>> },
    /// `q(z) = sum alpha_i z_i^2` with real `alpha_i > 0`.
    Alpha { alpha: Vec<f64> },
}

impl Dispersion {
    pub fn frequency_set(&self, n: usize, r: i64) -> Result<FrequencySet> {
        match self {
            Dispersion::Unit => paraboloid_points(n, r, &ParaboloidForm::Unit),
            Dispersion::Integer { rows } => {
                paraboloid_points(n, r, &ParaboloidForm::Integer(IntForm::new(rows.clone())?))
            }
            Dispersion::Alpha { alpha } => irrational_paraboloid_points(n, r, alpha),
        }
    }

    pub fn form(&self, n: usize) -> Result<DispersionForm> {
        Ok(match self {
            Dispersion::Unit => DispersionForm::Integer(IntForm::identity(n)),
            Dispersion::Integer { rows } => DispersionForm::Integer(IntForm::new(rows.clone())?),
            Dispersion::Alpha { alpha } => DispersionForm::Real(RealForm::diagonal(alpha)?),
        })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Dispersion::Unit => "unit",
            Dispersion::Integer { .. } => "integer",
            Dispersion::Alpha { .. } => "alpha",
        }
    }
}

/// Samples `F` on `x-grid x t-samples` given the full grid dims (time last).
pub fn space_time_samples(
    coeffs: &CoefficientAssignment,
    form: &DispersionForm,
    dims: &[usize],
) -> Result<FieldSamples> {
    let (&mt, xs) = dims
        .split_last()
        .ok_or_else(|| Error::InvalidParameter("empty grid".into()))?;
    schrodinger_samples(coeffs, form, &TorusGrid::new(xs.to_vec())?, &TimeSampling::Uniform(mt))
}

fn max_temporal(form: &DispersionForm, coeffs: &CoefficientAssignment) -> i64 {
    coeffs
        .frequencies()
        .iter()
        .map(|f| form.eval(&f.spatial).abs().ceil() as i64)
        .max()
        .unwrap_or(0)
}

/// `||F||_{L^q(T^{n+1})} / ||f||_2` for coefficients drawn from `model` on
/// `{z : |z| < R}`.
///
/// Integer forms use the non-aliased grid (`M_x > q (R - 1)`,
/// `M_t > q max q(z)`) for even `q`. Real forms are not periodic in `t`; the
/// unit-time average is refined by grid doubling.
pub fn strichartz_ratio(
    n: usize,
    r: i64,
    q: f64,
    model: &CoefficientModel,
    seed: u64,
    dispersion: &Dispersion,
    policy: &GridPolicy,
) -> Result<MomentReport> {
    let fs = dispersion.frequency_set(n, r)?;
    let coeffs = CoefficientAssignment::from_model(&fs, model, seed);
    strichartz_ratio_with(n, r, q, &coeffs, dispersion, policy)
}

/// [`strichartz_ratio`] for explicit spatial coefficients.
pub fn strichartz_ratio_with(
    n: usize,
    r: i64,
    q: f64,
    coeffs: &CoefficientAssignment,
    dispersion: &Dispersion,
    policy: &GridPolicy,
) -> Result<MomentReport> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("exponent q = {q}")));
    }
    if coeffs.is_empty() {
        return Err(Error::Empty("coefficients".into()));
    }
    if let Some(f) = coeffs
        .frequencies()
        .iter()
        .find(|f| f.spatial.len() != n || f.spatial.iter().map(|&x| x * x).sum::<i64>() >= r * r)
    {
        return Err(Error::InvalidParameter(format!(
            "frequency {:?} outside |z| < {r}",
            f.spatial
        )));
    }
    let form = dispersion.form(n)?;
    let mut max_abs: Vec<i64> = (0..n)
        .map(|i| {
            coeffs
                .frequencies()
                .iter()
                .map(|f| f.spatial[i].abs())
                .max()
                .unwrap_or(0)
        })
        .collect();
    max_abs.push(max_temporal(&form, coeffs));
    let measure = |g: &TorusGrid| lp_norm(&space_time_samples(coeffs, &form, g.dims())?, q);
    let m = match (&form, policy) {
        (DispersionForm::Real(_), GridPolicy::Auto) => {
            refine_by_doubling(TorusGrid::non_aliased(&max_abs, q.max(2.0)), measure, |v| *v)?
        }
        _ => measure_on_grid(&max_abs, q, policy, measure, |v| *v)?,
    };
    let exact = m.exact && matches!(form, DispersionForm::Integer(_));
    let norm_2 = coeffs.l2_norm();
    Ok(MomentReport {
        surface: "paraboloid".into(),
        n,
        dilation: r as f64,
        p: q,
        grid: m.grid.dims().to_vec(),
        norm_p: m.value,
        norm_2,
        ratio: m.value / norm_2,
        exact,
        model: coeffs.model().to_string(),
        seed: coeffs.seed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub lambdas: Vec<f64>,
    /// Fraction of grid points with `|F| > lambda`.
    pub measures: Vec<f64>,
    /// `lambda > R^{n/4}`.
    pub above_threshold: Vec<bool>,
    pub threshold: f64,
    pub r: f64,
    pub n: usize,
    pub q1: f64,
    /// Smallest `C` with `measure <= C R^{(n/2) q1 - (n+2)} lambda^{-q1}` at
    /// every above-threshold `lambda` with positive measure.
    pub fitted_constant: Option<f64>,
}

impl LevelSetReport {
    pub const CSV_HEADER: &'static str = "lambda,measure,above_threshold_flag";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for ((l, m), a) in self.lambdas.iter().zip(&self.measures).zip(&self.above_threshold) {
            out.push_str(&format!("{l},{m},{}\n", u8::from(*a)));
        }
        out
    }
}

/// Geometric grid of `count` values from `R^{n/4} / 16` to `max|F|`.
pub fn default_lambda_grid(samples: &FieldSamples, r: f64, n: usize, count: usize) -> Vec<f64> {
    let lo = r.powf(n as f64 / 4.0) / 16.0;
    let hi = samples.max_abs();
    if count < 2 || !(hi > lo) {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (step * i as f64).exp()).collect()
}

/// Measures of `{|F| > lambda}` for sorted positive `lambdas`.
pub fn level_set_distribution(
    samples: &FieldSamples,
    lambdas: &[f64],
    r: f64,
    n: usize,
    q1: f64,
) -> Result<LevelSetReport> {
    if lambdas.iter().any(|l| !(*l > 0.0)) || lambdas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(
            "lambda values must be positive and sorted".into(),
        ));
    }
    if samples.values.is_empty() {
        return Err(Error::Empty("samples".into()));
    }
    let mut mags: Vec<f64> = samples.values.iter().map(|v| v.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let total = mags.len() as f64;
    let measures: Vec<f64> = lambdas
        .iter()
        .map(|&l| (mags.len() - mags.partition_point(|&m| m <= l)) as f64 / total)
        .collect();
    let threshold = r.powf(n as f64 / 4.0);
    let above_threshold: Vec<bool> = lambdas.iter().map(|&l| l > threshold).collect();
    let scale = r.powf(n as f64 / 2.0 * q1 - (n as f64 + 2.0));
    let fitted_constant = lambdas
        .iter()
        .zip(&measures)
        .zip(&above_threshold)
        .filter(|((_, m), a)| **a && **m > 0.0)
        .map(|((l, m), _)| m / (scale * l.powf(-q1)))
        .reduce(f64::max);
    Ok(LevelSetReport {
        lambdas: lambdas.to_vec(),
        measures,
        above_threshold,
        threshold,
        r,
        n,
        q1,
        fitted_constant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    /// Grid average of `|F|^q`.
    pub lhs: f64,
    /// Grid average of `|F|^q 1{|F| > theta}`.
    pub term1: f64,
    /// `theta^{q - q0}` times the grid average of `|F|^{q0}`.
    pub term2: f64,
    pub theta: f64,
    pub q: f64,
    pub q0: f64,
    pub q1: f64,
    pub holds: bool,
}

/// Splits `int |F|^q` at `theta = R^{n/4}`:
/// `|F|^q <= |F|^q 1{|F| > theta} + theta^{q - q0} |F|^{q0}` pointwise.
///
/// Requires `q > q1 > 2(n+2)/n` and `q0 = 2(n+1)/n`.
pub fn epsilon_removal_check(
    samples: &FieldSamples,
    n: usize,
    r: f64,
    q: f64,
    q0: f64,
    q1: f64,
) -> Result<SplitRecord> {
    let nf = n as f64;
    let expected_q0 = 2.0 * (nf + 1.0) / nf;
    if n == 0 || (q0 - expected_q0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("q0 = {q0}, expected {expected_q0}")));
    }
    if !(q > q1 && q1 > 2.0 * (nf + 2.0) / nf) {
        return Err(Error::InvalidParameter(format!(
            "need q > q1 > {}, got q = {q}, q1 = {q1}",
            2.0 * (nf + 2.0) / nf
        )));
    }
    if samples.values.is_empty() {
        return Err(Error::Empty("samples".into()));
    }
    let theta = r.powf(nf / 4.0);
    let lhs = mean_abs_pow(samples, q);
    let big = FieldSamples {
        grid: samples.grid.clone(),
        values: samples
            .values
            .iter()
            .map(|v| if v.norm() > theta { *v } else { Default::default() })
            .collect(),
    };
    let term1 = mean_abs_pow(&big, q);
    let term2 = theta.powf(q - q0) * mean_abs_pow(samples, q0);
    Ok(SplitRecord {
        lhs,
        term1,
        term2,
        theta,
        q,
        q0,
        q1,
        holds: lhs <= (term1 + term2) * (1.0 + SPLIT_TOL),
    })
}

/// `n/2 - (n+2)/q`.
pub fn predicted_exponent(n: usize, q: f64) -> f64 {
    n as f64 / 2.0 - (n as f64 + 2.0) / q
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub n: usize,
    pub q: f64,
    pub predicted: f64,
    pub rows: Vec<MomentReport>,
    pub slope: f64,
    pub intercept: f64,
}

impl SharpnessReport {
    pub const CSV_HEADER: &'static str = "n,R,q,model,seed,ratio,predicted_exp,slope";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.n, row.dilation, self.q, row.model, row.seed, row.ratio, self.predicted, self.slope
            ));
        }
        out
    }
}

/// Unit coefficients on `|z| < R` for each `R` in `radii`; fits the
/// log-log slope of the Strichartz ratio against `R`.
///
/// Requires `q >= 2(n+3)/n`.
pub fn sharpness_witness(n: usize, radii: &[i64], q: f64, policy: &GridPolicy) -> Result<SharpnessReport> {
    let nf = n as f64;
    if n == 0 || q < 2.0 * (nf + 3.0) / nf {
        return Err(Error::InvalidParameter(format!(
            "q = {q} below {} for n = {n}",
            2.0 * (nf + 3.0) / nf
        )));
    }
    let rows = radii
        .par_iter()
        .map(|&r| strichartz_ratio(n, r, q, &CoefficientModel::Unit, 0, &Dispersion::Unit, policy))
        .collect::<Result<Vec<_>>>()?;
    let fit = growth_fit(&rows.iter().map(|m| (m.dilation, m.ratio)).collect::<Vec<_>>())?;
    Ok(SharpnessReport {
        n,
        q,
        predicted: predicted_exponent(n, q),
        rows,
        slope: fit.slope,
        intercept: fit.intercept,
    })
}
