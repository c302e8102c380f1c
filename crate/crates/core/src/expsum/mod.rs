//! Evaluation of exponential sums `f(x) = sum_z a_z e^{2 pi i x.z}`.
//!
//! Integer spectra are evaluated on torus grids by scattering the amplitudes
//! into an `M_1 x ... x M_n` array and applying one unnormalized inverse DFT.
//! Real spectra and arbitrary sample points go through direct summation,
//! which doubles as the reference oracle for the fast path.

pub mod fft;

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::surfaces::{Frequency, FrequencySet, IntForm, RealForm};
use crate::{Error, Result};

/// How amplitudes are drawn for a frequency set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum CoefficientModel {
    /// `a_z = 1`.
    #[default]
    Unit,
    /// `a_z = +-1` with equal probability.
    RandomSign,
    /// `a_z = e^{i theta}`, `theta` uniform.
    RandomPhase,
    /// Complex standard gaussian, `E|a_z|^2 = 1`.
    Gaussian,
    /// `a_z = 1` within unit-surface distance `radius` of a random pivot
    /// frequency, 0 elsewhere.
    CapConcentrated { radius: f64 },
}

impl CoefficientModel {
    pub fn tag(&self) -> &'static str {
        match self {
            CoefficientModel::Unit => "unit",
            CoefficientModel::RandomSign => "random-sign",
            CoefficientModel::RandomPhase => "random-phase",
            CoefficientModel::Gaussian => "gaussian",
            CoefficientModel::CapConcentrated { .. } => "cap-concentrated",
        }
    }
}

/// Amplitudes attached to the frequencies of a companion set, in the set's
/// sorted order.
#[derive(Debug, Clone)]
pub struct CoefficientAssignment {
    freqs: Vec<Frequency>,
    amps: Vec<Complex64>,
    model: String,
    seed: u64,
}

impl CoefficientAssignment {
    pub fn from_model(fs: &FrequencySet, model: &CoefficientModel, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = fs.len();
        let amps: Vec<Complex64> = match model {
            CoefficientModel::Unit => vec![Complex64::new(1.0, 0.0); n],
            CoefficientModel::RandomSign => (0..n)
                .map(|_| Complex64::new(if rng.random_bool(0.5) { 1.0 } else { -1.0 }, 0.0))
                .collect(),
            CoefficientModel::RandomPhase => (0..n)
                .map(|_| Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()))
                .collect(),
            CoefficientModel::Gaussian => (0..n)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im) / 2f64.sqrt()
                })
                .collect(),
            CoefficientModel::CapConcentrated { radius } => {
                if n == 0 {
                    Vec::new()
                } else {
                    let pivot = fs.unit_point(&fs.points()[rng.random_range(0..n)]);
                    fs.points()
                        .iter()
                        .map(|f| {
                            let u = fs.unit_point(f);
                            let d2: f64 = u.iter().zip(&pivot).map(|(a, b)| (a - b).powi(2)).sum();
                            Complex64::new(if d2.sqrt() <= *radius { 1.0 } else { 0.0 }, 0.0)
                        })
                        .collect()
                }
            }
        };
        CoefficientAssignment {
            freqs: fs.points().to_vec(),
            amps,
            model: model.tag().to_string(),
            seed,
        }
    }

    /// Explicit amplitudes; frequencies must be distinct.
    pub fn from_pairs(mut pairs: Vec<(Frequency, Complex64)>) -> Result<Self> {
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("duplicate frequency in coefficients".into()));
        }
        if let Some(first) = pairs.first() {
            let d = first.0.dim();
            if pairs.iter().any(|(f, _)| f.dim() != d) {
                return Err(Error::InvalidParameter("mixed frequency dimensions".into()));
            }
        }
        let (freqs, amps) = pairs.into_iter().unzip();
        Ok(CoefficientAssignment {
            freqs,
            amps,
            model: "explicit".into(),
            seed: 0,
        })
    }

    pub fn frequencies(&self) -> &[Frequency] {
        &self.freqs
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Frequency, &Complex64)> {
        self.freqs.iter().zip(&self.amps)
    }

    /// `(sum |a_z|^2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.amps.iter_mut().for_each(|a| *a *= factor);
        out
    }

    /// The amplitudes restricted to frequencies accepted by `keep`.
    pub fn restrict<P: FnMut(&Frequency) -> bool>(&self, mut keep: P) -> Self {
        let (freqs, amps) = self
            .iter()
            .filter(|(f, _)| keep(f))
            .map(|(f, a)| (f.clone(), *a))
            .unzip();
        CoefficientAssignment {
            freqs,
            amps,
            model: self.model.clone(),
            seed: self.seed,
        }
    }

    /// Per-frequency amplitude map `a_z -> g(z, a_z)`.
    pub fn map_amplitudes<G: FnMut(&Frequency, Complex64) -> Complex64>(&self, mut g: G) -> Self {
        let mut out = self.clone();
        for (f, a) in out.freqs.iter().zip(out.amps.iter_mut()) {
            *a = g(f, *a);
        }
        out
    }

    /// Largest `|z_i|` per axis over integer coordinates (temporal last).
    pub fn max_abs_per_axis(&self) -> Result<Vec<i64>> {
        let mut out: Vec<i64> = Vec::new();
        for f in &self.freqs {
            let z = f.integer_coords().ok_or_else(|| Error::NonInteger(format!("{f:?}")))?;
            if out.is_empty() {
                out = vec![0; z.len()];
            }
            for (m, v) in out.iter_mut().zip(&z) {
                *m = (*m).max(v.abs());
            }
        }
        Ok(out)
    }
}

/// Uniform product grid on the torus, `M_i` samples along axis `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    dims: Vec<usize>,
}

impl TorusGrid {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidParameter(format!("grid dims {dims:?}")));
        }
        Ok(TorusGrid { dims })
    }

    /// Per axis, the smallest power of two strictly greater than
    /// `order * max_abs[i]`; even moments up to `order` are then integrated
    /// exactly by the grid average.
    pub fn non_aliased(max_abs: &[i64], order: f64) -> Self {
        let dims = max_abs
            .iter()
            .map(|&m| {
                let need = (order * m as f64).floor() as usize + 1;
                need.next_power_of_two()
            })
            .collect();
        TorusGrid { dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn doubled(&self) -> Self {
        TorusGrid {
            dims: self.dims.iter().map(|m| 2 * m).collect(),
        }
    }

    /// Multi-index of a flat row-major position.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for (i, &m) in self.dims.iter().enumerate().rev() {
            idx[i] = flat % m;
            flat /= m;
        }
        idx
    }

    /// Torus coordinates `j_i / M_i` of a flat position.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.dims)
            .map(|(&j, &m)| j as f64 / m as f64)
            .collect()
    }

    pub fn label(&self) -> String {
        self.dims.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("x")
    }
}

/// Complex samples on a grid, row-major with the last axis contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub grid: TorusGrid,
    pub values: Vec<Complex64>,
}

impl FieldSamples {
    pub fn new(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(FieldSamples { grid, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Header line `# dims=M1,M2,...` followed by little-endian `f64`
    /// pairs `(re, im)`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let dims: Vec<String> = self.grid.dims().iter().map(|m| m.to_string()).collect();
        writeln!(w, "# dims={}", dims.join(","))?;
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Parse("missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|e| Error::Parse(e.to_string()))?;
        let dims_str = header
            .strip_prefix("# dims=")
            .ok_or_else(|| Error::Parse(format!("bad header `{header}`")))?;
        let dims = dims_str
            .split(',')
            .map(|s| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad dim `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        let grid = TorusGrid::new(dims)?;
        let body = &bytes[nl + 1..];
        if body.len() != grid.len() * 16 {
            return Err(Error::Parse(format!(
                "expected {} bytes of samples, found {}",
                grid.len() * 16,
                body.len()
            )));
        }
        let values = body
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        FieldSamples::new(grid, values)
    }

    /// `j1,...,jn,re,im` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let cols: Vec<String> = (1..=self.grid.dim()).map(|i| format!("j{i}")).collect();
        let _ = writeln!(out, "{},re,im", cols.join(","));
        for (flat, v) in self.values.iter().enumerate() {
            let idx: Vec<String> = self.grid.multi_index(flat).iter().map(|j| j.to_string()).collect();
            let _ = writeln!(out, "{},{:?},{:?}", idx.join(","), v.re, v.im);
        }
        out
    }
}

/// `values[j] = sum_z a_z e^{2 pi i sum_i j_i z_i / M_i}` on the grid.
///
/// Amplitudes are scattered to `z mod M` and one unnormalized inverse DFT is
/// applied. Two frequencies congruent modulo the grid are an aliasing error.
pub fn evaluate_periodic(coeffs: &CoefficientAssignment, grid: &TorusGrid) -> Result<FieldSamples> {
    let dims = grid.dims();
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut occupied = vec![false; grid.len()];
    for (f, a) in coeffs.iter() {
        let z = f.integer_coords().ok_or_else(|| Error::NonInteger(format!("{f:?}")))?;
        if z.len() != dims.len() {
            return Err(Error::InvalidParameter(format!(
                "frequency of dimension {} on a {}-dimensional grid",
                z.len(),
                dims.len()
            )));
        }
        let flat: usize = z
            .iter()
            .zip(dims)
            .zip(&strides)
            .map(|((&zi, &m), &s)| (zi.rem_euclid(m as i64) as usize) * s)
            .sum();
        if occupied[flat] {
            return Err(Error::Aliasing(format!(
                "{:?} collides with another frequency modulo {}",
                z,
                grid.label()
            )));
        }
        occupied[flat] = true;
        values[flat] = *a;
    }
    fft::transform_nd(&mut values, dims, fft::Direction::Inverse);
    FieldSamples::new(grid.clone(), values)
}

/// Naive `sum_xi a(xi) e^{i x.xi}` at every point.
pub fn evaluate_direct(freqs: &[Vec<f64>], coeffs: &[Complex64], points: &[Vec<f64>]) -> Vec<Complex64> {
    use rayon::prelude::*;
    points
        .par_iter()
        .map(|x| {
            freqs
                .iter()
                .zip(coeffs)
                .map(|(xi, a)| {
                    let phase: f64 = x.iter().zip(xi).map(|(u, v)| u * v).sum();
                    a * Complex64::from_polar(1.0, phase)
                })
                .sum()
        })
        .collect()
}

/// Dispersion relation `q(z)` of a space-time sum.
#[derive(Debug, Clone, PartialEq)]
pub enum DispersionForm {
    /// Integer form: the field is 1-periodic in `t`.
    Integer(IntForm),
    /// Real form (e.g. `diag(alpha)` for irrational tori).
    Real(RealForm),
}

impl DispersionForm {
    pub fn dim(&self) -> usize {
        match self {
            DispersionForm::Integer(f) => f.dim(),
            DispersionForm::Real(f) => f.dim(),
        }
    }

    pub fn eval(&self, z: &[i64]) -> f64 {
        match self {
            DispersionForm::Integer(f) => f.eval(z).map(|v| v as f64).unwrap_or(f64::INFINITY),
            DispersionForm::Real(f) => {
                let y: Vec<f64> = z.iter().map(|&v| v as f64).collect();
                f.eval(&y)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeSampling {
    /// `t_l = l / count`, `l = 0..count`.
    Uniform(usize),
    /// Explicit times in `[0, 1]`.
    Explicit(Vec<f64>),
}

/// Samples of `F(x, t) = sum_z a_z e^{2 pi i (x.z + t q(z))}` on
/// `x-grid x t-samples`, time as the last (contiguous) axis.
///
/// An integer form with uniform times is one `(n+1)`-dimensional DFT with
/// temporal frequency `q(z)`, which needs `M_t > 2 max q(z)`. Otherwise each
/// time slice is evaluated separately from the phase-adjusted amplitudes
/// `a_z e^{2 pi i t q(z)}`.
pub fn schrodinger_samples(
    coeffs: &CoefficientAssignment,
    form: &DispersionForm,
    x_grid: &TorusGrid,
    times: &TimeSampling,
) -> Result<FieldSamples> {
    if x_grid.dim() != form.dim() {
        return Err(Error::InvalidParameter(format!(
            "form of dimension {} on a {}-dimensional x-grid",
            form.dim(),
            x_grid.dim()
        )));
    }
    let spatial: Vec<(Frequency, Complex64)> = coeffs
        .iter()
        .map(|(f, a)| (Frequency::new(f.spatial.clone()), *a))
        .collect();
    if let (DispersionForm::Integer(int_form), TimeSampling::Uniform(mt)) = (form, times) {
        let mut pairs = Vec::with_capacity(spatial.len());
        let mut max_q: i128 = 0;
        for (f, a) in spatial {
            let q = int_form
                .eval(&f.spatial)
                .filter(|q| q.abs() < (1i128 << 53))
                .ok_or_else(|| Error::Overflow("temporal frequency".into()))?;
            max_q = max_q.max(q.abs());
            pairs.push((Frequency::space_time(f.spatial, q as f64), a));
        }
        if (*mt as i128) <= 2 * max_q {
            return Err(Error::Aliasing(format!(
                "temporal grid {mt} <= 2 * max q(z) = {}",
                2 * max_q
            )));
        }
        let mut dims = x_grid.dims().to_vec();
        dims.push(*mt);
        let st = CoefficientAssignment::from_pairs(pairs)?;
        return evaluate_periodic(&st, &TorusGrid::new(dims)?);
    }

    let ts: Vec<f64> = match times {
        TimeSampling::Uniform(mt) => {
            if *mt == 0 {
                return Err(Error::InvalidParameter("zero time samples".into()));
            }
            (0..*mt).map(|l| l as f64 / *mt as f64).collect()
        }
        TimeSampling::Explicit(v) => {
            if v.is_empty() || v.iter().any(|t| !(0.0..=1.0).contains(t)) {
                return Err(Error::InvalidParameter("explicit times must lie in [0, 1]".into()));
            }
            v.clone()
        }
    };
    let base = CoefficientAssignment::from_pairs(spatial)?;
    let qs: Vec<f64> = base.frequencies().iter().map(|f| form.eval(&f.spatial)).collect();
    let nx = x_grid.len();
    let nt = ts.len();
    let mut values = vec![Complex64::new(0.0, 0.0); nx * nt];
    for (l, &t) in ts.iter().enumerate() {
        let mut k = 0;
        let phased = base.map_amplitudes(|_, a| {
            let turn = (t * qs[k]).rem_euclid(1.0);
            k += 1;
            a * Complex64::from_polar(1.0, 2.0 * PI * turn)
        });
        let slice = evaluate_periodic(&phased, x_grid)?;
        for (j, v) in slice.values.into_iter().enumerate() {
            values[j * nt + l] = v;
        }
    }
    let mut dims = x_grid.dims().to_vec();
    dims.push(nt);
    FieldSamples::new(TorusGrid::new(dims)?, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{enumerate_sphere_lattice, ParaboloidForm};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn one_d(pairs: &[(i64, f64)]) -> CoefficientAssignment {
        CoefficientAssignment::from_pairs(pairs.iter().map(|&(z, a)| (Frequency::new(vec![z]), c(a))).collect())
            .unwrap()
    }

    #[test]
    fn single_frequency_is_unimodular() {
        let coeffs = CoefficientAssignment::from_pairs(vec![(Frequency::new(vec![3, -2]), c(1.0))]).unwrap();
        let s = evaluate_periodic(&coeffs, &TorusGrid::new(vec![8, 16]).unwrap()).unwrap();
        assert!(s.values.iter().all(|v| (v.norm() - 1.0).abs() < 1e-13));
    }

    #[test]
    fn two_term_sum() {
        let s = evaluate_periodic(&one_d(&[(0, 1.0), (1, 1.0)]), &TorusGrid::new(vec![8]).unwrap()).unwrap();
        assert!((s.values[0] - c(2.0)).norm() < 1e-15);
        for (j, v) in s.values.iter().enumerate() {
            let want = c(1.0) + Complex64::from_polar(1.0, 2.0 * PI * j as f64 / 8.0);
            assert!((v - want).norm() < 1e-14);
        }
    }

    #[test]
    fn parseval_on_circle() {
        let fs = enumerate_sphere_lattice(2, 25).unwrap();
        let coeffs = CoefficientAssignment::from_model(&fs, &CoefficientModel::Gaussian, 11);
        let grid = TorusGrid::non_aliased(&coeffs.max_abs_per_axis().unwrap(), 2.0);
        let s = evaluate_periodic(&coeffs, &grid).unwrap();
        let mean = s.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / grid.len() as f64;
        assert!((mean - coeffs.l2_norm().powi(2)).abs() < 1e-10);
    }

    #[test]
    fn aliasing_and_non_integer_errors() {
        let coeffs = one_d(&[(0, 1.0), (4, 1.0)]);
        assert!(matches!(
            evaluate_periodic(&coeffs, &TorusGrid::new(vec![4]).unwrap()),
            Err(Error::Aliasing(_))
        ));
        let real = CoefficientAssignment::from_pairs(vec![(Frequency::space_time(vec![1], 0.5), c(1.0))]).unwrap();
        assert!(matches!(
            evaluate_periodic(&real, &TorusGrid::new(vec![4, 4]).unwrap()),
            Err(Error::NonInteger(_))
        ));
    }

    #[test]
    fn direct_examples() {
        assert_eq!(
            evaluate_direct(&[], &[], &[vec![0.3, 0.1], vec![1.0, 2.0]]),
            vec![c(0.0), c(0.0)]
        );
        let a = Complex64::new(0.5, -1.5);
        let v = evaluate_direct(&[vec![2.0, -1.0]], &[a], &[vec![0.25, 0.7]]);
        let want = a * Complex64::from_polar(1.0, 0.5 - 0.7);
        assert!((v[0] - want).norm() < 1e-15);
    }

    #[test]
    fn schrodinger_examples() {
        let grid = TorusGrid::new(vec![8]).unwrap();
        let unit = DispersionForm::Integer(IntForm::identity(1));
        let single = one_d(&[(2, 1.0)]);
        let s = schrodinger_samples(&single, &unit, &grid, &TimeSampling::Uniform(16)).unwrap();
        assert!(s.values.iter().all(|v| (v.norm() - 1.0).abs() < 1e-13));

        let three = one_d(&[(-1, 1.0), (0, 1.0), (1, 1.0)]);
        let s = schrodinger_samples(&three, &unit, &grid, &TimeSampling::Uniform(4)).unwrap();
        assert!((s.values[0] - c(3.0)).norm() < 1e-14);
        assert!(matches!(
            schrodinger_samples(&three, &unit, &grid, &TimeSampling::Uniform(2)),
            Err(Error::Aliasing(_))
        ));
    }

    #[test]
    fn schrodinger_integer_path_matches_real_path() {
        let fs = crate::surfaces::paraboloid_points(2, 3, &ParaboloidForm::Unit).unwrap();
        let coeffs = CoefficientAssignment::from_model(&fs, &CoefficientModel::RandomPhase, 3);
        let grid = TorusGrid::new(vec![8, 8]).unwrap();
        let times = TimeSampling::Uniform(32);
        let int = schrodinger_samples(&coeffs, &DispersionForm::Integer(IntForm::identity(2)), &grid, &times).unwrap();
        let real = schrodinger_samples(&coeffs, &DispersionForm::Real(RealForm::identity(2)), &grid, &times).unwrap();
        assert_eq!(int.grid, real.grid);
        for (a, b) in int.values.iter().zip(&real.values) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn binary_and_csv_export() {
        let s = evaluate_periodic(&one_d(&[(0, 1.0), (1, -2.0)]), &TorusGrid::new(vec![4]).unwrap()).unwrap();
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert!(buf.starts_with(b"# dims=4\n"));
        assert_eq!(buf.len(), 9 + 4 * 16);
        assert_eq!(FieldSamples::read_binary(&buf[..]).unwrap(), s);
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("j1,re,im\n0,-1.0,0.0\n"));
    }

    #[test]
    fn models_are_seeded() {
        let fs = enumerate_sphere_lattice(3, 11).unwrap();
        for model in [
            CoefficientModel::RandomSign,
            CoefficientModel::RandomPhase,
            CoefficientModel::Gaussian,
            CoefficientModel::CapConcentrated { radius: 0.5 },
        ] {
            let a = CoefficientAssignment::from_model(&fs, &model, 9);
            let b = CoefficientAssignment::from_model(&fs, &model, 9);
            assert_eq!(a.amplitudes(), b.amplitudes());
            assert_eq!(a.len(), fs.len());
        }
        let signs = CoefficientAssignment::from_model(&fs, &CoefficientModel::RandomSign, 1);
        assert!(signs.amplitudes().iter().all(|a| a.im == 0.0 && a.re.abs() == 1.0));
        let cap = CoefficientAssignment::from_model(&fs, &CoefficientModel::CapConcentrated { radius: 0.5 }, 4);
        let support = cap.amplitudes().iter().filter(|a| a.re == 1.0).count();
        assert!(support >= 1 && support < fs.len());
    }
}
