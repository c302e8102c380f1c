//! `L^p` norms on torus grids, moment ratios, decoupling defects, multilinear
//! averages and log-log growth fits.
//!
//! For an even integer `p` and a grid with `M_i > p * max|z_i|` on every axis,
//! the grid average of `|f|^p` equals the torus integral exactly (the
//! polynomial `|f|^p` has no frequency that aliases onto zero). Other
//! exponents are quadrature estimates refined by grid doubling until the
//! relative change drops below [`REFINE_TOL`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caps::{assign_points, near_subspace_filter, CapPartition};
use crate::expsum::{
    evaluate_direct, evaluate_periodic, CoefficientAssignment, CoefficientModel, FieldSamples, TorusGrid,
};
use crate::surfaces::{Frequency, FrequencySet};
use crate::{Error, Result};

/// Relative stopping tolerance of the grid-doubling refinement.
pub const REFINE_TOL: f64 = 1e-6;

/// Grid size cap for refinement; beyond it the estimate is reported unconverged.
pub const MAX_REFINE_POINTS: usize = 1 << 22;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GridPolicy {
    /// Smallest non-aliased power-of-two grid for even `p`, doubling
    /// refinement otherwise.
    #[default]
    Auto,
    Explicit(Vec<usize>),
}

pub fn is_even_integer(p: f64) -> bool {
    p.fract() == 0.0 && (p as i64) % 2 == 0
}

/// Deterministic compensated sum over fixed-size chunks.
fn stable_sum(len: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let partials: Vec<f64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| neumaier((c * CHUNK..((c + 1) * CHUNK).min(len)).map(&f)))
        .collect();
    neumaier(partials.into_iter())
}

fn neumaier(it: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn mean_of(values: &[Complex64], g: impl Fn(Complex64) -> f64 + Sync) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    stable_sum(values.len(), |i| g(values[i])) / values.len() as f64
}

/// Grid average of `|v|^p`.
pub fn mean_abs_pow(samples: &FieldSamples, p: f64) -> f64 {
    if p == 2.0 {
        mean_of(&samples.values, |v| v.norm_sqr())
    } else {
        mean_of(&samples.values, |v| v.norm().powf(p))
    }
}

/// `(grid average of |value|^p)^{1/p}`.
pub fn lp_norm(samples: &FieldSamples, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent p = {p}")));
    }
    Ok(mean_abs_pow(samples, p).powf(1.0 / p))
}

/// True when every axis of `grid` exceeds `p * max|z_i|` and `p` is even.
pub fn quadrature_exact(grid: &TorusGrid, max_abs: &[i64], p: f64) -> bool {
    is_even_integer(p)
        && grid.dim() == max_abs.len()
        && grid
            .dims()
            .iter()
            .zip(max_abs)
            .all(|(&m, &z)| (m as f64) > p * z as f64)
}

/// A measurement together with the grid it was taken on.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasurement<T> {
    pub value: T,
    pub grid: TorusGrid,
    /// Exact quadrature (even `p`, non-aliased) or converged refinement.
    pub exact: bool,
    pub converged: bool,
}

/// Runs `measure` on the grid chosen by `policy`; under `Auto` with odd or
/// fractional `p`, doubles the grid until `key(value)` changes by less than
/// [`REFINE_TOL`] relative.
pub fn measure_on_grid<T>(
    max_abs: &[i64],
    p: f64,
    policy: &GridPolicy,
    measure: impl Fn(&TorusGrid) -> Result<T>,
    key: impl Fn(&T) -> f64,
) -> Result<GridMeasurement<T>> {
    match policy {
        GridPolicy::Explicit(dims) => {
            let grid = TorusGrid::new(dims.clone())?;
            let value = measure(&grid)?;
            let exact = quadrature_exact(&grid, max_abs, p);
            Ok(GridMeasurement {
                value,
                grid,
                exact,
                converged: exact,
            })
        }
        GridPolicy::Auto => {
            let grid = TorusGrid::non_aliased(max_abs, p.max(2.0));
            if is_even_integer(p) {
                let value = measure(&grid)?;
                return Ok(GridMeasurement {
                    value,
                    grid,
                    exact: true,
                    converged: true,
                });
            }
            refine_by_doubling(grid, measure, key)
        }
    }
}

/// Doubles `grid` from the given start until `key(value)` changes by less
/// than [`REFINE_TOL`] relative, or the grid would exceed
/// [`MAX_REFINE_POINTS`].
pub fn refine_by_doubling<T>(
    mut grid: TorusGrid,
    measure: impl Fn(&TorusGrid) -> Result<T>,
    key: impl Fn(&T) -> f64,
) -> Result<GridMeasurement<T>> {
    let mut value = measure(&grid)?;
    loop {
        let next = grid.doubled();
        if next.len() > MAX_REFINE_POINTS {
            return Ok(GridMeasurement {
                value,
                grid,
                exact: false,
                converged: false,
            });
        }
        let next_value = measure(&next)?;
        let (a, b) = (key(&value), key(&next_value));
        let done = (a - b).abs() <= REFINE_TOL * b.abs().max(f64::MIN_POSITIVE);
        grid = next;
        value = next_value;
        if done {
            return Ok(GridMeasurement {
                value,
                grid,
                exact: false,
                converged: true,
            });
        }
    }
}

/// `||f||_4` through `int |f|^4 = sum_xi |(a * a)(xi)|^2`, with the
/// autocorrelation `a * a` accumulated by exact pair summation.
pub fn l4_exact(coeffs: &CoefficientAssignment) -> Result<f64> {
    let keyed: Vec<(Vec<i64>, Complex64)> = coeffs
        .iter()
        .map(|(f, a)| {
            f.integer_coords()
                .map(|z| (z, *a))
                .ok_or_else(|| Error::NonInteger(format!("{f:?}")))
        })
        .collect::<Result<_>>()?;
    let mut conv: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
    for (z1, a1) in &keyed {
        for (z2, a2) in &keyed {
            let xi: Vec<i64> = z1.iter().zip(z2).map(|(x, y)| x + y).collect();
            *conv.entry(xi).or_default() += a1 * a2;
        }
    }
    Ok(neumaier(conv.values().map(|c| c.norm_sqr())).powf(0.25))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub surface: String,
    pub n: usize,
    pub dilation: f64,
    pub p: f64,
    pub grid: Vec<usize>,
    pub norm_p: f64,
    pub norm_2: f64,
    pub ratio: f64,
    pub exact: bool,
    pub model: String,
    pub seed: u64,
}

impl MomentReport {
    pub fn grid_label(&self) -> String {
        self.grid.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("x")
    }
}

/// Builds coefficients from `model`, evaluates the polynomial on the torus
/// and compares `||f||_p` with `||f||_2 = (sum |a_z|^2)^{1/2}`.
///
/// Space-time sets are evaluated on `T^{n+1}` with integer temporal
/// frequency `q(z)`.
pub fn moment_ratio(
    fs: &FrequencySet,
    model: &CoefficientModel,
    seed: u64,
    p: f64,
    policy: &GridPolicy,
) -> Result<MomentReport> {
    let coeffs = CoefficientAssignment::from_model(fs, model, seed);
    moment_ratio_with(fs, &coeffs, p, policy)
}

/// [`moment_ratio`] for explicit coefficients.
pub fn moment_ratio_with(
    fs: &FrequencySet,
    coeffs: &CoefficientAssignment,
    p: f64,
    policy: &GridPolicy,
) -> Result<MomentReport> {
    if !fs.is_periodic() {
        return Err(Error::NonInteger(
            "moment ratios need an integer (periodic) spectrum".into(),
        ));
    }
    if coeffs.is_empty() {
        return Err(Error::Empty("frequency set".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p = {p}")));
    }
    let max_abs = coeffs.max_abs_per_axis()?;
    let m = measure_on_grid(
        &max_abs,
        p,
        policy,
        |g| {
            let s = evaluate_periodic(coeffs, g)?;
            lp_norm(&s, p)
        },
        |v| *v,
    )?;
    let norm_2 = coeffs.l2_norm();
    Ok(MomentReport {
        surface: fs.surface().tag().to_string(),
        n: fs.spatial_dim(),
        dilation: fs.dilation(),
        p,
        grid: m.grid.dims().to_vec(),
        norm_p: m.value,
        norm_2,
        ratio: m.value / norm_2,
        exact: m.exact,
        model: coeffs.model().to_string(),
        seed: coeffs.seed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    /// Cap scale `delta = 1/K`.
    pub delta: f64,
    pub p: f64,
    /// `||f||_p`.
    pub lhs: f64,
    /// `(sum_alpha ||f_alpha||_p^2)^{1/2}`.
    pub rhs: f64,
    pub defect: f64,
    pub caps: usize,
    pub grid: Vec<usize>,
    pub exact: bool,
}

/// `||f||_p / (sum_alpha ||f_alpha||_p^2)^{1/2}` with `f_alpha` the part of
/// `f` whose frequencies fall in cap `alpha`; every piece is evaluated on the
/// same grid as `f`.
pub fn decoupling_defect(
    fs: &FrequencySet,
    coeffs: &CoefficientAssignment,
    part: &CapPartition,
    p: f64,
    policy: &GridPolicy,
) -> Result<DecouplingReport> {
    if fs.is_empty() || coeffs.is_empty() {
        return Err(Error::Empty("frequency set".into()));
    }
    let groups = assign_points(part, fs)?;
    let mut cap_of: BTreeMap<Frequency, usize> = BTreeMap::new();
    for (alpha, freqs) in &groups {
        for f in freqs {
            cap_of.insert(f.clone(), *alpha);
        }
    }
    if let Some((f, _)) = coeffs.iter().find(|(f, _)| !cap_of.contains_key(f)) {
        return Err(Error::InvalidParameter(format!("coefficient at {f:?} outside the set")));
    }
    let pieces: Vec<CoefficientAssignment> = groups
        .keys()
        .map(|alpha| coeffs.restrict(|f| cap_of.get(f) == Some(alpha)))
        .collect();
    let max_abs = coeffs.max_abs_per_axis()?;
    let m = measure_on_grid(
        &max_abs,
        p,
        policy,
        |g| {
            let lhs = lp_norm(&evaluate_periodic(coeffs, g)?, p)?;
            let mut squares = Vec::with_capacity(pieces.len());
            for piece in &pieces {
                squares.push(lp_norm(&evaluate_periodic(piece, g)?, p)?.powi(2));
            }
            Ok((lhs, neumaier(squares.into_iter()).sqrt()))
        },
        |(l, r)| l / r,
    )?;
    let (lhs, rhs) = m.value;
    Ok(DecouplingReport {
        delta: 1.0 / part.k(),
        p,
        lhs,
        rhs,
        defect: lhs / rhs,
        caps: groups.len(),
        grid: m.grid.dims().to_vec(),
        exact: m.exact,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultilinearReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub q: f64,
}

/// Cube average over `[-M/2, M/2]^n` (midpoint grid, `resolution` points per
/// axis) of `prod_i |f_i|^{q/k}`, against `prod_i (sum |a|^2)^{q/2k}`, where
/// `f_i(x) = sum_{xi in D_i} a(xi) e^{i x.xi}`.
///
/// Each `D_i` must be `1/M` separated. `q` defaults to `2k/(k-1)` and is
/// required when `k = 1`.
pub fn multilinear_average(
    sets: &[Vec<Vec<f64>>],
    coeffs: &[Vec<Complex64>],
    m: f64,
    resolution: usize,
    q: Option<f64>,
) -> Result<MultilinearReport> {
    let k = sets.len();
    if k == 0 || coeffs.len() != k {
        return Err(Error::InvalidParameter("need one coefficient list per set".into()));
    }
    let n = sets
        .iter()
        .flatten()
        .map(Vec::len)
        .next()
        .ok_or_else(|| Error::Empty("frequency sets".into()))?;
    if sets.iter().flatten().any(|v| v.len() != n) || k > n {
        return Err(Error::InvalidParameter(format!("{k} sets of {n}-dimensional vectors")));
    }
    if !(m > 0.0) || resolution == 0 {
        return Err(Error::InvalidParameter(format!("M = {m}, resolution = {resolution}")));
    }
    let q = match (q, k) {
        (Some(q), _) => q,
        (None, 1) => return Err(Error::InvalidParameter("k = 1 needs an explicit exponent q".into())),
        (None, k) => 2.0 * k as f64 / (k as f64 - 1.0),
    };
    for (i, (set, a)) in sets.iter().zip(coeffs).enumerate() {
        if set.len() != a.len() {
            return Err(Error::InvalidParameter(format!("set {i}: coefficient count mismatch")));
        }
        let mut best = f64::INFINITY;
        for (x, y) in set
            .iter()
            .enumerate()
            .flat_map(|(j, x)| set[j + 1..].iter().map(move |y| (x, y)))
        {
            best = best.min(x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt());
        }
        if best < 1.0 / m {
            return Err(Error::SeparationViolated {
                set: i,
                distance: best,
                required: 1.0 / m,
            });
        }
    }
    let total = resolution.pow(n as u32);
    let step = m / resolution as f64;
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut flat| {
            let mut x = vec![0.0; n];
            for xi in x.iter_mut().rev() {
                *xi = -m / 2.0 + ((flat % resolution) as f64 + 0.5) * step;
                flat /= resolution;
            }
            x
        })
        .collect();
    let fields: Vec<Vec<Complex64>> = sets
        .iter()
        .zip(coeffs)
        .map(|(set, a)| evaluate_direct(set, a, &points))
        .collect();
    let exponent = q / k as f64;
    let lhs = stable_sum(total, |j| fields.iter().map(|f| f[j].norm().powf(exponent)).product()) / total as f64;
    let rhs: f64 = coeffs
        .iter()
        .map(|a| a.iter().map(|c| c.norm_sqr()).sum::<f64>().powf(q / (2.0 * k as f64)))
        .product();
    Ok(MultilinearReport {
        lhs,
        rhs,
        ratio: lhs / rhs,
        q,
    })
}

/// Multilinear average restricted to frequencies whose unit normals lie
/// within `c / M` of the hyperplane `v^perp`; frequencies enter through their
/// unit-surface images.
pub fn subspace_multilinear_average(
    sets: &[(&FrequencySet, &CoefficientAssignment)],
    v: &[f64],
    c: f64,
    m: f64,
    resolution: usize,
    q: Option<f64>,
) -> Result<MultilinearReport> {
    let mut vecs = Vec::with_capacity(sets.len());
    let mut amps = Vec::with_capacity(sets.len());
    for (fs, coeffs) in sets {
        let near = near_subspace_filter(fs, v, c, m)?;
        let kept: BTreeMap<&Frequency, Complex64> = coeffs.iter().map(|(f, a)| (f, *a)).collect();
        vecs.push(near.points().iter().map(|f| fs.unit_point(f)).collect());
        amps.push(
            near.points()
                .iter()
                .map(|f| kept.get(f).copied().unwrap_or_default())
                .collect(),
        );
    }
    multilinear_average(&vecs, &amps, m, resolution, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual in log space.
    pub residual: f64,
}

/// Least-squares fit of `log y = intercept + slope * log D`.
pub fn growth_fit(points: &[(f64, f64)]) -> Result<GrowthFit> {
    for &(d, y) in points {
        if !(d > 0.0) {
            return Err(Error::NonPositive(d));
        }
        if !(y > 0.0) {
            return Err(Error::NonPositive(y));
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(d, y)| (d.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if logs.len() < 2 || sxx == 0.0 {
        return Err(Error::InvalidParameter("growth fit needs two distinct scales".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = logs
        .iter()
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(GrowthFit {
        slope,
        intercept,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caps::build_cap_partition;
    use crate::surfaces::{enumerate_sphere_lattice, Surface};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coeffs_1d(pairs: &[(i64, f64)]) -> CoefficientAssignment {
        CoefficientAssignment::from_pairs(
            pairs
                .iter()
                .map(|&(z, a)| (Frequency::new(vec![z]), Complex64::new(a, 0.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn lp_norm_examples() {
        let single = coeffs_1d(&[(3, 1.0)]);
        let s = evaluate_periodic(&single, &TorusGrid::new(vec![16]).unwrap()).unwrap();
        for p in [1.0, 2.0, 3.0, 4.0, 7.5] {
            assert!((lp_norm(&s, p).unwrap() - 1.0).abs() < 1e-13);
        }
        let two = coeffs_1d(&[(0, 1.0), (1, 1.0)]);
        let s = evaluate_periodic(&two, &TorusGrid::new(vec![8]).unwrap()).unwrap();
        assert!((lp_norm(&s, 4.0).unwrap() - 6f64.powf(0.25)).abs() < 1e-14);
        assert!(lp_norm(&s, 0.5).is_err());
    }

    #[test]
    fn p2_is_parseval() {
        let fs = enumerate_sphere_lattice(3, 50).unwrap();
        let c = CoefficientAssignment::from_model(&fs, &CoefficientModel::Gaussian, 2);
        let grid = TorusGrid::non_aliased(&c.max_abs_per_axis().unwrap(), 2.0);
        let s = evaluate_periodic(&c, &grid).unwrap();
        assert!((lp_norm(&s, 2.0).unwrap() - c.l2_norm()).abs() < 1e-10);
    }

    #[test]
    fn l4_examples() {
        assert!((l4_exact(&coeffs_1d(&[(0, 1.0), (1, 1.0)])).unwrap() - 6f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(l4_exact(&coeffs_1d(&[(5, 1.0)])).unwrap(), 1.0);
        let fs = enumerate_sphere_lattice(2, 65).unwrap();
        for seed in 0..10 {
            let c = CoefficientAssignment::from_model(&fs, &CoefficientModel::RandomPhase, seed);
            let grid = TorusGrid::non_aliased(&c.max_abs_per_axis().unwrap(), 4.0);
            let grid_norm = lp_norm(&evaluate_periodic(&c, &grid).unwrap(), 4.0).unwrap();
            assert!((l4_exact(&c).unwrap() - grid_norm).abs() < 1e-9);
        }
    }

    #[test]
    fn moment_ratio_examples() {
        let fs = enumerate_sphere_lattice(2, 25).unwrap();
        let one = fs.filter(|f| f.spatial == vec![0, 5]);
        let r = moment_ratio(&one, &CoefficientModel::Unit, 0, 4.0, &GridPolicy::Auto).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-14);

        let r2 = moment_ratio(&fs, &CoefficientModel::Unit, 0, 2.0, &GridPolicy::Auto).unwrap();
        assert!((r2.ratio - 1.0).abs() < 1e-12);
        assert!(r2.exact);

        let r4 = moment_ratio(&fs, &CoefficientModel::Unit, 0, 4.0, &GridPolicy::Auto).unwrap();
        assert_eq!(r4.grid, vec![32, 32]);
        let c = CoefficientAssignment::from_model(&fs, &CoefficientModel::Unit, 0);
        let via_energy = l4_exact(&c).unwrap() / 12f64.sqrt();
        assert!((r4.ratio - via_energy).abs() < 1e-9);
    }

    #[test]
    fn non_even_exponent_refines() {
        let fs = enumerate_sphere_lattice(3, 6).unwrap();
        let r = moment_ratio(&fs, &CoefficientModel::RandomPhase, 1, 3.0, &GridPolicy::Auto).unwrap();
        assert!(!r.exact);
        assert!(r.ratio >= 1.0);
        let r4 = moment_ratio(&fs, &CoefficientModel::RandomPhase, 1, 4.0, &GridPolicy::Auto).unwrap();
        assert!(r.norm_p <= r4.norm_p + 1e-9);
    }

    #[test]
    fn monotone_in_p() {
        let fs = enumerate_sphere_lattice(2, 85).unwrap();
        let c = CoefficientAssignment::from_model(&fs, &CoefficientModel::Gaussian, 8);
        let grid = TorusGrid::new(vec![128, 128]).unwrap();
        let s = evaluate_periodic(&c, &grid).unwrap();
        let ps = [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0];
        for w in ps.windows(2) {
            assert!(lp_norm(&s, w[0]).unwrap() <= lp_norm(&s, w[1]).unwrap() + 1e-9);
        }
    }

    #[test]
    fn doubling_non_aliased_grid_keeps_even_moments() {
        let fs = enumerate_sphere_lattice(2, 50).unwrap();
        let c = CoefficientAssignment::from_model(&fs, &CoefficientModel::RandomSign, 3);
        for p in [2.0, 4.0] {
            let grid = TorusGrid::non_aliased(&c.max_abs_per_axis().unwrap(), p);
            let a = lp_norm(&evaluate_periodic(&c, &grid).unwrap(), p).unwrap();
            let b = lp_norm(&evaluate_periodic(&c, &grid.doubled()).unwrap(), p).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn defect_examples() {
        let fs = enumerate_sphere_lattice(2, 25).unwrap();
        let part = build_cap_partition(&Surface::sphere(2), 8.0).unwrap();
        let c = CoefficientAssignment::from_model(&fs, &CoefficientModel::Unit, 0);

        let r2 = decoupling_defect(&fs, &c, &part, 2.0, &GridPolicy::Auto).unwrap();
        assert!((r2.defect - 1.0).abs() < 1e-10);

        let one = fs.filter(|f| f.spatial[0] == 3 && f.spatial[1] == 4);
        let c1 = CoefficientAssignment::from_model(&one, &CoefficientModel::RandomPhase, 3);
        let r = decoupling_defect(&one, &c1, &part, 4.0, &GridPolicy::Auto).unwrap();
        assert_eq!(r.defect, 1.0);

        let r4 = decoupling_defect(&fs, &c, &part, 4.0, &GridPolicy::Auto).unwrap();
        assert_eq!(r4.caps, 12);
        assert!((r4.defect - 1.2877547884506975).abs() < 1e-9);

        let scaled = c.scaled(Complex64::new(-0.3, 2.1));
        let r4s = decoupling_defect(&fs, &scaled, &part, 4.0, &GridPolicy::Auto).unwrap();
        assert!((r4s.defect - r4.defect).abs() < 1e-12);
    }

    #[test]
    fn defect_single_coarse_cap_is_one() {
        let fs = enumerate_sphere_lattice(2, 25).unwrap().filter(|f| f.spatial[0] >= 4);
        let part = build_cap_partition(&Surface::sphere(2), 1.0).unwrap();
        let c = CoefficientAssignment::from_model(&fs, &CoefficientModel::Gaussian, 5);
        let r = decoupling_defect(&fs, &c, &part, 4.0, &GridPolicy::Auto).unwrap();
        assert_eq!(r.caps, 1);
        assert_eq!(r.defect, 1.0);
    }

    #[test]
    fn multilinear_examples() {
        let a = vec![Complex64::from_polar(1.0, 0.4)];
        let r = multilinear_average(
            &[vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            &[a.clone(), a.clone()],
            8.0,
            16,
            None,
        )
        .unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 1.0).abs() < 1e-15 && (r.ratio - 1.0).abs() < 1e-12);
        assert_eq!(r.q, 4.0);

        let r = multilinear_average(&[vec![vec![0.6, 0.8]]], std::slice::from_ref(&a), 8.0, 16, Some(3.0)).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12);
        assert!(multilinear_average(&[vec![vec![0.6, 0.8]]], std::slice::from_ref(&a), 8.0, 16, None).is_err());

        let close = vec![vec![1.0, 0.0], vec![0.99, 0.0]];
        assert!(matches!(
            multilinear_average(&[close], &[vec![a[0], a[0]]], 8.0, 4, Some(2.0)),
            Err(Error::SeparationViolated { .. })
        ));
    }

    #[test]
    fn multilinear_transversal_arcs_sweep() {
        let arc = |center: f64| -> Vec<Vec<f64>> {
            (0..4)
                .map(|j| {
                    let t = center + 0.13 * j as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        };
        let sets = vec![arc(0.0), arc(std::f64::consts::FRAC_PI_2)];
        let ones = vec![vec![Complex64::new(1.0, 0.0); 4]; 2];
        let mut pts = Vec::new();
        for m in [8.0, 16.0, 32.0] {
            let r = multilinear_average(&sets, &ones, m, 64, None).unwrap();
            assert!(r.ratio.is_finite() && r.ratio > 0.0);
            pts.push((m, r.ratio));
        }
        // the average concentrates near the origin as M grows; the decay is
        // bounded, never growth beyond M^{1/2}
        assert!(growth_fit(&pts).unwrap().slope <= 0.5);
    }

    #[test]
    fn subspace_variant_filters_first() {
        let fs = enumerate_sphere_lattice(2, 25).unwrap();
        let c = CoefficientAssignment::from_model(&fs, &CoefficientModel::Unit, 0);
        let r = subspace_multilinear_average(&[(&fs, &c)], &[0.0, 1.0], 0.1, 1.0, 8, Some(2.0)).unwrap();
        // only (+-5, 0) survive: two unit frequencies
        assert!((r.rhs - 2.0).abs() < 1e-15);
    }

    #[test]
    fn growth_fit_examples() {
        let sq: Vec<(f64, f64)> = [2.0, 3.0, 5.0, 9.0].iter().map(|&d: &f64| (d, d * d)).collect();
        let g = growth_fit(&sq).unwrap();
        assert!((g.slope - 2.0).abs() < 1e-12 && g.residual < 1e-12);
        let flat = growth_fit(&[(2.0, 7.0), (4.0, 7.0), (8.0, 7.0)]).unwrap();
        assert!(flat.slope.abs() < 1e-15);
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|&d: &f64| (d, 3.0 * d.sqrt()))
            .collect();
        let g = growth_fit(&pts).unwrap();
        assert!((g.slope - 0.5).abs() < 1e-12 && (g.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(matches!(
            growth_fit(&[(1.0, 0.0), (2.0, 1.0)]),
            Err(Error::NonPositive(_))
        ));
        assert!(growth_fit(&[(2.0, 1.0), (2.0, 3.0)]).is_err());
    }

    #[test]
    fn stable_sum_is_order_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vals: Vec<Complex64> = (0..50_000)
            .map(|_| Complex64::new(rng.random(), rng.random()))
            .collect();
        let a = mean_of(&vals, |v| v.norm());
        let b = mean_of(&vals, |v| v.norm());
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
