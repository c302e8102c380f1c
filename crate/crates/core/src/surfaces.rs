//! Curved hypersurfaces, their lattice points on dilates, and the geometric
//! primitives (membership, normals, separation) used by the other modules.
//!
//! Three surface families are supported:
//! - the unit sphere `|x| = 1` in `R^n`;
//! - level sets `x^T Q x = 1` of an integer positive-definite form `Q`
//!   (lattice points of the dilate are the `z` with `z^T Q z = E`);
//! - graphs `(y, <Ay, y>)` over a base ball of radius `u0`, used for
//!   space-time (Schrodinger) frequency sets `(z, q(z))`.

use std::cmp::Ordering;
use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;

use crate::linalg;
use crate::{Error, Result};

/// Tolerance for real-valued surface membership on the unit surface.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Largest accepted level `E`; keeps every partial sum of squares inside `i64`.
pub const MAX_ENERGY: i64 = 1 << 60;

/// Symmetric positive-definite integer quadratic form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntForm {
    dim: usize,
    entries: Vec<i64>,
}

impl IntForm {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidParameter(
                "quadratic form must be a nonempty square matrix".into(),
            ));
        }
        let entries: Vec<i64> = rows.into_iter().flatten().collect();
        for i in 0..dim {
            for j in 0..i {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(Error::NotPositiveDefinite(format!(
                        "entry ({i},{j}) differs from ({j},{i})"
                    )));
                }
            }
        }
        let wide: Vec<i128> = entries.iter().map(|&x| x as i128).collect();
        match linalg::leading_minors_positive(&wide, dim) {
            Some(true) => Ok(IntForm { dim, entries }),
            Some(false) => Err(Error::NotPositiveDefinite(
                "a leading principal minor is not positive".into(),
            )),
            None => Err(Error::Overflow("principal minors exceed i128".into())),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        IntForm { dim, entries }
    }

    pub fn diagonal(diag: &[i64]) -> Result<Self> {
        let dim = diag.len();
        let rows = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { diag[i] } else { 0 }).collect())
            .collect();
        IntForm::new(rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    /// `z^T Q z`, or `None` on overflow.
    pub fn eval(&self, z: &[i64]) -> Option<i128> {
        let mut acc: i128 = 0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let term = (self.entry(i, j) as i128)
                    .checked_mul(z[i] as i128)?
                    .checked_mul(z[j] as i128)?;
                acc = acc.checked_add(term)?;
            }
        }
        Some(acc)
    }

    pub fn to_real(&self) -> RealForm {
        RealForm {
            dim: self.dim,
            entries: self.entries.iter().map(|&x| x as f64).collect(),
        }
    }

    /// Certified lower bound `lambda` on the smallest eigenvalue:
    /// `Q - lambda I` is checked positive semidefinite in exact arithmetic.
    fn certified_min_eigenvalue(&self) -> f64 {
        const SCALE: i128 = 1 << 20;
        let approx = linalg::symmetric_eigen(&self.to_real().entries, self.dim)[0].0;
        let mut num = ((approx * (1.0 - 1e-9)) * SCALE as f64).floor() as i128;
        while num > 0 {
            let shifted: Vec<i128> = (0..self.dim * self.dim)
                .map(|k| {
                    let diag = if k / self.dim == k % self.dim { num } else { 0 };
                    self.entries[k] as i128 * SCALE - diag
                })
                .collect();
            if linalg::leading_minors_positive(&shifted, self.dim) == Some(true) {
                return num as f64 / SCALE as f64;
            }
            num /= 2;
        }
        // Integer positive-definite forms have determinant >= 1, so the
        // smallest eigenvalue is at least 1 / trace^(dim-1).
        let trace: f64 = (0..self.dim).map(|i| self.entry(i, i) as f64).sum();
        1.0 / trace.powi(self.dim as i32 - 1)
    }

    fn to_spec_string(&self) -> String {
        form_string(self.rows().iter().map(|r| r.iter().map(|x| x.to_string())))
    }
}

/// Symmetric positive-definite real quadratic form `psi(y) = <Ay, y>`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealForm {
    dim: usize,
    entries: Vec<f64>,
}

impl RealForm {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidParameter(
                "quadratic form must be a nonempty square matrix".into(),
            ));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("form entries must be finite".into()));
        }
        for i in 0..dim {
            for j in 0..i {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(Error::NotPositiveDefinite(format!(
                        "entry ({i},{j}) differs from ({j},{i})"
                    )));
                }
            }
        }
        if Cholesky::new(DMatrix::from_row_slice(dim, dim, &entries)).is_none() {
            return Err(Error::NotPositiveDefinite("Cholesky factorization failed".into()));
        }
        Ok(RealForm { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        IntForm::identity(dim).to_real()
    }

    pub fn diagonal(alpha: &[f64]) -> Result<Self> {
        if alpha.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter(
                "diagonal coefficients must be positive and finite".into(),
            ));
        }
        let dim = alpha.len();
        RealForm::new(
            (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { alpha[i] } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.entry(i, j) * y[i] * y[j];
            }
        }
        acc
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| 2.0 * (0..self.dim).map(|j| self.entry(i, j) * y[j]).sum::<f64>())
            .collect()
    }

    /// The form as an integer form, when every entry is an integer.
    pub fn as_integer(&self) -> Option<IntForm> {
        if self.entries.iter().all(|x| x.fract() == 0.0 && x.abs() < 1e15) {
            Some(IntForm {
                dim: self.dim,
                entries: self.entries.iter().map(|&x| x as i64).collect(),
            })
        } else {
            None
        }
    }

    fn to_spec_string(&self) -> String {
        form_string(
            self.entries
                .chunks(self.dim)
                .map(|r| r.iter().map(|x| format!("{x:?}"))),
        )
    }
}

fn form_string<R, I>(rows: R) -> String
where
    R: Iterator<Item = I>,
    I: Iterator<Item = String>,
{
    rows.map(|r| r.collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_rows<T: std::str::FromStr>(s: &str) -> Result<Vec<Vec<T>>> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<T>()
                        .map_err(|_| Error::Parse(format!("bad form entry `{v}`")))
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    UnitSphere {
        dim: usize,
    },
    QuadricLevel {
        form: IntForm,
    },
    /// Graph `{(y, <Ay, y>) : y in base patch}` with base cutoff `radius`.
    ParaboloidGraph {
        form: RealForm,
        radius: f64,
    },
}

impl Surface {
    pub fn sphere(dim: usize) -> Self {
        Surface::UnitSphere { dim }
    }

    pub fn paraboloid(form: RealForm, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter("base radius must be positive".into()));
        }
        Ok(Surface::ParaboloidGraph { form, radius })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Surface::UnitSphere { .. } => "sphere",
            Surface::QuadricLevel { .. } => "quadric",
            Surface::ParaboloidGraph { .. } => "paraboloid",
        }
    }

    /// Dimension of the ambient space.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Surface::UnitSphere { dim } => *dim,
            Surface::QuadricLevel { form } => form.dim(),
            Surface::ParaboloidGraph { form, .. } => form.dim() + 1,
        }
    }

    pub fn is_graph(&self) -> bool {
        matches!(self, Surface::ParaboloidGraph { .. })
    }

    /// Membership defect of a unit-surface point (0 on the surface).
    fn defect(&self, point: &[f64]) -> f64 {
        match self {
            Surface::UnitSphere { .. } => (linalg::norm(point) - 1.0).abs(),
            Surface::QuadricLevel { form } => (form.to_real().eval(point) - 1.0).abs(),
            Surface::ParaboloidGraph { form, .. } => {
                let (base, height) = point.split_at(form.dim());
                (height[0] - form.eval(base)).abs()
            }
        }
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        point.len() == self.ambient_dim() && self.defect(point) <= tol
    }

    pub fn normal_at(&self, point: &[f64]) -> Result<Vec<f64>> {
        if !self.contains(point, MEMBERSHIP_TOL) {
            return Err(Error::OffSurface(format!("{point:?} on {}", self.tag())));
        }
        let raw = match self {
            Surface::UnitSphere { .. } => point.to_vec(),
            Surface::QuadricLevel { form } => form.to_real().gradient(point),
            Surface::ParaboloidGraph { form, .. } => {
                let mut v: Vec<f64> = form.gradient(&point[..form.dim()]);
                v.iter_mut().for_each(|x| *x = -*x);
                v.push(1.0);
                v
            }
        };
        let len = linalg::norm(&raw);
        Ok(raw.into_iter().map(|x| x / len).collect())
    }

    fn spec_string(&self) -> Option<String> {
        match self {
            Surface::UnitSphere { .. } => None,
            Surface::QuadricLevel { form } => Some(form.to_spec_string()),
            Surface::ParaboloidGraph { form, .. } => Some(form.to_spec_string()),
        }
    }
}

/// Outward unit normal at a point of the unit surface.
pub fn normal_at(surface: &Surface, point: &[f64]) -> Result<Vec<f64>> {
    surface.normal_at(point)
}

/// A frequency vector: integer spatial part, optional real temporal part.
#[derive(Debug, Clone)]
pub struct Frequency {
    pub spatial: Vec<i64>,
    pub temporal: Option<f64>,
}

impl Frequency {
    pub fn new(spatial: Vec<i64>) -> Self {
        Frequency {
            spatial,
            temporal: None,
        }
    }

    pub fn space_time(spatial: Vec<i64>, temporal: f64) -> Self {
        Frequency {
            spatial,
            temporal: Some(temporal),
        }
    }

    pub fn dim(&self) -> usize {
        self.spatial.len() + usize::from(self.temporal.is_some())
    }

    /// All coordinates as reals (temporal last).
    pub fn coords(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.spatial.iter().map(|&x| x as f64).collect();
        v.extend(self.temporal);
        v
    }

    /// All coordinates as integers, if the temporal part is integral.
    pub fn integer_coords(&self) -> Option<Vec<i64>> {
        let mut v = self.spatial.clone();
        if let Some(t) = self.temporal {
            if t.fract() != 0.0 || t.abs() >= 9.0e15 {
                return None;
            }
            v.push(t as i64);
        }
        Some(v)
    }
}

impl PartialEq for Frequency {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frequency {}

impl PartialOrd for Frequency {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frequency {
    fn cmp(&self, other: &Self) -> Ordering {
        self.spatial
            .cmp(&other.spatial)
            .then_with(|| match (self.temporal, other.temporal) {
                (Some(a), Some(b)) => a.total_cmp(&b),
                (a, b) => a.is_some().cmp(&b.is_some()),
            })
    }
}

/// Finite set of frequencies lying on the dilate `D * S` of a surface.
#[derive(Debug, Clone)]
pub struct FrequencySet {
    surface: Surface,
    dilation: f64,
    level: Option<i64>,
    points: Vec<Frequency>,
    separation: f64,
    periodic_in_t: bool,
}

impl FrequencySet {
    /// Validates membership and uniqueness, sorts the points and computes
    /// the separation.
    ///
    /// `level` is the integer level `E` for sphere and quadric sets (where
    /// membership is checked exactly); graphs ignore it. `periodic_in_t`
    /// marks space-time sets whose temporal parts are all integers.
    pub fn new(
        surface: Surface,
        dilation: f64,
        level: Option<i64>,
        mut points: Vec<Frequency>,
        periodic_in_t: bool,
    ) -> Result<Self> {
        if !(dilation >= 0.0) || !dilation.is_finite() {
            return Err(Error::InvalidParameter(format!("dilation {dilation}")));
        }
        let space_time = surface.is_graph();
        let spatial_dim = if space_time {
            surface.ambient_dim() - 1
        } else {
            surface.ambient_dim()
        };
        for f in &points {
            if f.spatial.len() != spatial_dim || f.temporal.is_some() != space_time {
                return Err(Error::InvalidParameter(format!(
                    "frequency {f:?} does not match a {}-dimensional {} set",
                    spatial_dim,
                    surface.tag()
                )));
            }
            check_member(&surface, dilation, level, f, periodic_in_t)?;
        }
        points.sort();
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate frequency".into()));
        }
        let mut fs = FrequencySet {
            surface,
            dilation,
            level,
            points,
            separation: 0.0,
            periodic_in_t: space_time && periodic_in_t,
        };
        fs.separation = separation(&fs).distance;
        Ok(fs)
    }

    /// Construction for points already known to be on the surface, sorted,
    /// and distinct.
    fn from_sorted(
        surface: Surface,
        dilation: f64,
        level: Option<i64>,
        points: Vec<Frequency>,
        periodic_in_t: bool,
    ) -> Self {
        let mut fs = FrequencySet {
            surface,
            dilation,
            level,
            points,
            separation: 0.0,
            periodic_in_t,
        };
        fs.separation = separation(&fs).distance;
        fs
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn dilation(&self) -> f64 {
        self.dilation
    }

    pub fn level(&self) -> Option<i64> {
        self.level
    }

    pub fn points(&self) -> &[Frequency] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn is_space_time(&self) -> bool {
        self.surface.is_graph()
    }

    /// True when every coordinate of every frequency is an integer.
    pub fn is_periodic(&self) -> bool {
        !self.is_space_time() || self.periodic_in_t
    }

    pub fn spatial_dim(&self) -> usize {
        self.points
            .first()
            .map(|p| p.spatial.len())
            .unwrap_or_else(|| self.surface.ambient_dim() - usize::from(self.is_space_time()))
    }

    /// The frequency mapped back onto the unit surface: `z / D` for spheres
    /// and quadrics, `(z / N, t / N^2)` for graphs.
    pub fn unit_point(&self, f: &Frequency) -> Vec<f64> {
        let d = if self.dilation > 0.0 { self.dilation } else { 1.0 };
        let mut v: Vec<f64> = f.spatial.iter().map(|&x| x as f64 / d).collect();
        if let Some(t) = f.temporal {
            v.push(t / (d * d));
        }
        v
    }

    /// Subset of this set with the same surface and dilation.
    pub fn filter<P: FnMut(&Frequency) -> bool>(&self, mut keep: P) -> FrequencySet {
        let points = self.points.iter().filter(|f| keep(f)).cloned().collect();
        FrequencySet::from_sorted(
            self.surface.clone(),
            self.dilation,
            self.level,
            points,
            self.periodic_in_t,
        )
    }

    /// Line-oriented text form: header `# surface=<tag> D=<val> n=<val>`,
    /// optional `# key=value` metadata lines, then one frequency per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# surface={} D={:?} n={}",
            self.surface.tag(),
            self.dilation,
            self.spatial_dim()
        );
        if let Some(level) = self.level {
            let _ = writeln!(out, "# level={level}");
        }
        if let Some(form) = self.surface.spec_string() {
            let _ = writeln!(out, "# form={form}");
        }
        if let Surface::ParaboloidGraph { radius, .. } = &self.surface {
            let _ = writeln!(out, "# radius={radius:?}");
            let _ = writeln!(out, "# periodic={}", self.periodic_in_t);
        }
        for f in &self.points {
            let mut line = f.spatial.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            if let Some(t) = f.temporal {
                let _ = write!(line, " {t:?}");
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<FrequencySet> {
        let mut meta = std::collections::BTreeMap::new();
        let mut rows = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                for kv in rest.split_whitespace() {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("bad header token `{kv}`")))?;
                    meta.insert(k.to_string(), v.to_string());
                }
            } else {
                rows.push(line);
            }
        }
        let get = |k: &str| {
            meta.get(k)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("missing header key `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad value for `{k}`")))
        };
        let n = num("n")? as usize;
        let dilation = num("D")?;
        let level = match meta.get("level") {
            Some(v) => Some(v.parse::<i64>().map_err(|_| Error::Parse("bad level".into()))?),
            None => None,
        };
        let tag = get("surface")?;
        let surface = match tag.as_str() {
            "sphere" => Surface::sphere(n),
            "quadric" => Surface::QuadricLevel {
                form: IntForm::new(parse_rows(&get("form")?)?)?,
            },
            "paraboloid" => Surface::paraboloid(RealForm::new(parse_rows(&get("form")?)?)?, num("radius")?)?,
            other => return Err(Error::Parse(format!("unknown surface `{other}`"))),
        };
        let periodic = meta.get("periodic").map(|v| v == "true").unwrap_or(false);
        let mut points = Vec::with_capacity(rows.len());
        for row in rows {
            let toks: Vec<&str> = row.split_whitespace().collect();
            let bad = || Error::Parse(format!("bad frequency line `{row}`"));
            let spatial: Vec<i64> = toks
                .iter()
                .take(n)
                .map(|t| t.parse::<i64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            if spatial.len() != n {
                return Err(bad());
            }
            let f = match toks.len() - n {
                0 => Frequency::new(spatial),
                1 => Frequency::space_time(spatial, toks[n].parse::<f64>().map_err(|_| bad())?),
                _ => return Err(bad()),
            };
            points.push(f);
        }
        FrequencySet::new(surface, dilation, level, points, periodic)
    }
}

fn check_member(surface: &Surface, dilation: f64, level: Option<i64>, f: &Frequency, periodic: bool) -> Result<()> {
    let off = || Error::OffSurface(format!("{f:?} on {} (D = {dilation})", surface.tag()));
    match surface {
        Surface::UnitSphere { .. } => {
            let e = level.ok_or_else(|| Error::InvalidParameter("sphere sets need an integer level".into()))?;
            let s: i128 = f.spatial.iter().map(|&x| (x as i128) * (x as i128)).sum();
            if s != e as i128 {
                return Err(off());
            }
        }
        Surface::QuadricLevel { form } => {
            let e = level.ok_or_else(|| Error::InvalidParameter("quadric sets need an integer level".into()))?;
            if form.eval(&f.spatial) != Some(e as i128) {
                return Err(off());
            }
        }
        Surface::ParaboloidGraph { form, radius } => {
            let t = f.temporal.ok_or_else(off)?;
            let expected = match (periodic, form.as_integer()) {
                (true, Some(int)) => int.eval(&f.spatial).ok_or_else(off)? as f64,
                (true, None) => {
                    return Err(Error::InvalidParameter(
                        "periodic space-time sets need an integer form".into(),
                    ))
                }
                (false, _) => {
                    let y: Vec<f64> = f.spatial.iter().map(|&x| x as f64).collect();
                    form.eval(&y)
                }
            };
            if (t - expected).abs() > MEMBERSHIP_TOL * expected.abs().max(1.0) {
                return Err(off());
            }
            let base: f64 = f.spatial.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
            if base > radius * dilation * (1.0 + MEMBERSHIP_TOL) {
                return Err(off());
            }
        }
    }
    Ok(())
}

fn check_energy(energy: i64) -> Result<()> {
    if energy < 0 {
        return Err(Error::InvalidParameter(format!("level {energy} is negative")));
    }
    if energy > MAX_ENERGY {
        return Err(Error::Overflow(format!(
            "level {energy} exceeds the safe bound {MAX_ENERGY}"
        )));
    }
    Ok(())
}

/// All `z in Z^n` with `|z|^2 = E`, sorted lexicographically.
///
/// Each coordinate is searched in `[-isqrt(rest), isqrt(rest)]` where `rest`
/// is the part of `E` not yet used by earlier coordinates; the last
/// coordinate is solved directly.
pub fn enumerate_sphere_lattice(n: usize, energy: i64) -> Result<FrequencySet> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("dimension {n} < 2")));
    }
    check_energy(energy)?;
    let bound = energy.isqrt();
    let points: Vec<Frequency> = (-bound..=bound)
        .into_par_iter()
        .map(|first| {
            let mut out = Vec::new();
            let mut prefix = vec![first];
            sphere_fill(&mut prefix, energy - first * first, n - 1, &mut out);
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .map(Frequency::new)
        .collect();
    Ok(FrequencySet::from_sorted(
        Surface::sphere(n),
        (energy as f64).sqrt(),
        Some(energy),
        points,
        false,
    ))
}

fn sphere_fill(prefix: &mut Vec<i64>, rest: i64, dims_left: usize, out: &mut Vec<Vec<i64>>) {
    let r = rest.isqrt();
    if dims_left == 1 {
        if r * r == rest {
            for v in if r == 0 { vec![0] } else { vec![-r, r] } {
                let mut z = prefix.clone();
                z.push(v);
                out.push(z);
            }
        }
        return;
    }
    for v in -r..=r {
        prefix.push(v);
        sphere_fill(prefix, rest - v * v, dims_left - 1, out);
        prefix.pop();
    }
}

/// All `z` with `z^T Q z = E`, sorted lexicographically.
///
/// The search box is `|z_i| <= sqrt(E / lambda)` for a certified lower
/// bound `lambda` on the smallest eigenvalue of `Q`; the last coordinate is
/// recovered from the exact quadratic it satisfies.
pub fn enumerate_quadric_lattice(form: &IntForm, energy: i64) -> Result<FrequencySet> {
    check_energy(energy)?;
    let dim = form.dim();
    let lambda = form.certified_min_eigenvalue();
    let bound = ((energy as f64 / lambda).sqrt().floor() as i64) + 1;
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(dim);
    quadric_fill(form, energy as i128, bound, &mut prefix, &mut out)?;
    out.sort();
    let points = out.into_iter().map(Frequency::new).collect();
    Ok(FrequencySet::from_sorted(
        Surface::QuadricLevel { form: form.clone() },
        (energy as f64).sqrt(),
        Some(energy),
        points,
        false,
    ))
}

fn quadric_fill(
    form: &IntForm,
    energy: i128,
    bound: i64,
    prefix: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
) -> Result<()> {
    let dim = form.dim();
    let k = prefix.len();
    if k + 1 < dim {
        for v in -bound..=bound {
            prefix.push(v);
            quadric_fill(form, energy, bound, prefix, out)?;
            prefix.pop();
        }
        return Ok(());
    }
    // Solve a z^2 + 2 b z + c = E for the last coordinate.
    let last = dim - 1;
    let a = form.entry(last, last) as i128;
    let b: i128 = (0..last).map(|j| form.entry(last, j) as i128 * prefix[j] as i128).sum();
    let mut c: i128 = 0;
    for i in 0..last {
        for j in 0..last {
            c += form.entry(i, j) as i128 * prefix[i] as i128 * prefix[j] as i128;
        }
    }
    let disc = b
        .checked_mul(b)
        .and_then(|bb| a.checked_mul(c - energy).map(|ac| bb - ac))
        .ok_or_else(|| Error::Overflow("quadric discriminant".into()))?;
    if disc < 0 {
        return Ok(());
    }
    let s = disc.isqrt();
    if s * s != disc {
        return Ok(());
    }
    let roots: Vec<i128> = if s == 0 { vec![-b] } else { vec![-b - s, -b + s] };
    for num in roots {
        if num % a == 0 {
            let mut z = prefix.clone();
            z.push((num / a) as i64);
            out.push(z);
        }
    }
    Ok(())
}

/// Quadratic form for integer paraboloid sets.
#[derive(Debug, Clone, PartialEq)]
pub enum ParaboloidForm {
    Unit,
    Integer(IntForm),
}

fn ball_points(n: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let r2 = radius * radius;
    let mut z = vec![-(radius - 1); n];
    if radius <= 0 {
        return out;
    }
    loop {
        if z.iter().map(|x| x * x).sum::<i64>() < r2 {
            out.push(z.clone());
        }
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if z[i] < radius - 1 {
                z[i] += 1;
                break;
            }
            z[i] = -(radius - 1);
        }
    }
}

/// Space-time frequencies `(z, q(z))` for `z in Z^n`, `|z| < N`, with an
/// integer form `q`; the associated polynomial is 1-periodic in `t`.
pub fn paraboloid_points(n: usize, radius: i64, form: &ParaboloidForm) -> Result<FrequencySet> {
    if n < 1 || radius < 1 {
        return Err(Error::InvalidParameter(format!("n = {n}, N = {radius}")));
    }
    let int_form = match form {
        ParaboloidForm::Unit => IntForm::identity(n),
        ParaboloidForm::Integer(f) if f.dim() == n => f.clone(),
        ParaboloidForm::Integer(f) => {
            return Err(Error::InvalidParameter(format!("form dimension {} != {n}", f.dim())))
        }
    };
    let mut points = Vec::new();
    for z in ball_points(n, radius) {
        let q = int_form
            .eval(&z)
            .filter(|q| q.abs() < (1i128 << 53))
            .ok_or_else(|| Error::Overflow("temporal frequency exceeds 2^53".into()))?;
        points.push(Frequency::space_time(z, q as f64));
    }
    Ok(FrequencySet::from_sorted(
        Surface::paraboloid(int_form.to_real(), 1.0)?,
        radius as f64,
        None,
        points,
        true,
    ))
}

/// Space-time frequencies `(z, sum alpha_i z_i^2)` for `|z| < N` (irrational
/// tori). Temporal parts are real; the set is flagged non-periodic in `t`.
pub fn irrational_paraboloid_points(n: usize, radius: i64, alpha: &[f64]) -> Result<FrequencySet> {
    if n < 1 || radius < 1 || alpha.len() != n {
        return Err(Error::InvalidParameter(format!(
            "n = {n}, N = {radius}, |alpha| = {}",
            alpha.len()
        )));
    }
    let form = RealForm::diagonal(alpha)?;
    let points = ball_points(n, radius)
        .into_iter()
        .map(|z| {
            let t = z.iter().zip(alpha).map(|(&x, a)| a * (x * x) as f64).sum();
            Frequency::space_time(z, t)
        })
        .collect();
    Ok(FrequencySet::from_sorted(
        Surface::paraboloid(form, 1.0)?,
        radius as f64,
        None,
        points,
        false,
    ))
}

/// Minimum pairwise distance of a frequency set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separation {
    pub distance: f64,
    /// Exact squared distance when all coordinates are integers.
    pub squared: Option<i128>,
}

/// Minimum pairwise Euclidean distance; a set with fewer than two points has
/// separation `D` by convention.
pub fn separation(fs: &FrequencySet) -> Separation {
    let pts = fs.points();
    if pts.len() < 2 {
        return Separation {
            distance: fs.dilation(),
            squared: None,
        };
    }
    let ints: Option<Vec<Vec<i64>>> = pts.iter().map(Frequency::integer_coords).collect();
    match ints {
        Some(ints) => {
            let best = (0..ints.len())
                .into_par_iter()
                .map(|i| {
                    (i + 1..ints.len())
                        .map(|j| {
                            ints[i]
                                .iter()
                                .zip(&ints[j])
                                .map(|(a, b)| {
                                    let d = (*a - *b) as i128;
                                    d * d
                                })
                                .sum::<i128>()
                        })
                        .min()
                        .unwrap_or(i128::MAX)
                })
                .min()
                .unwrap_or(i128::MAX);
            Separation {
                distance: (best as f64).sqrt(),
                squared: Some(best),
            }
        }
        None => {
            let coords: Vec<Vec<f64>> = pts.iter().map(Frequency::coords).collect();
            let mut best = f64::INFINITY;
            for i in 0..coords.len() {
                for j in i + 1..coords.len() {
                    let d: f64 = coords[i].iter().zip(&coords[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    best = best.min(d);
                }
            }
            Separation {
                distance: best.sqrt(),
                squared: None,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spatial(fs: &FrequencySet) -> Vec<Vec<i64>> {
        fs.points().iter().map(|f| f.spatial.clone()).collect()
    }

    /// Unpruned scan of the full box, independent of the pruned recursion.
    fn box_scan(n: usize, e: i64) -> Vec<Vec<i64>> {
        let r = (e as f64).sqrt().floor() as i64;
        let side = (2 * r + 1) as usize;
        let mut out = Vec::new();
        for code in 0..side.pow(n as u32) {
            let mut c = code;
            let mut z = vec![0i64; n];
            for i in (0..n).rev() {
                z[i] = (c % side) as i64 - r;
                c /= side;
            }
            if z.iter().map(|x| x * x).sum::<i64>() == e {
                out.push(z);
            }
        }
        out
    }

    #[test]
    fn sphere_counts() {
        assert_eq!(enumerate_sphere_lattice(2, 25).unwrap().len(), 12);
        assert!(enumerate_sphere_lattice(2, 3).unwrap().is_empty());
        let unit = enumerate_sphere_lattice(4, 1).unwrap();
        assert_eq!(unit.len(), 8);
        assert!(unit
            .points()
            .iter()
            .all(|f| f.spatial.iter().filter(|&&x| x != 0).count() == 1));
    }

    #[test]
    fn sphere_matches_box_scan() {
        for n in 2..=4 {
            let max_e = match n {
                2 => 2000,
                3 => 400,
                _ => 60,
            };
            for e in 0..=max_e {
                assert_eq!(
                    spatial(&enumerate_sphere_lattice(n, e).unwrap()),
                    box_scan(n, e),
                    "n={n} E={e}"
                );
            }
        }
    }

    #[test]
    fn sphere_rejects_bad_parameters() {
        assert!(matches!(
            enumerate_sphere_lattice(2, MAX_ENERGY + 1),
            Err(Error::Overflow(_))
        ));
        assert!(matches!(
            enumerate_sphere_lattice(2, -1),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            enumerate_sphere_lattice(1, 4),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn quadric_examples() {
        let id = IntForm::identity(2);
        assert_eq!(
            spatial(&enumerate_quadric_lattice(&id, 25).unwrap()),
            spatial(&enumerate_sphere_lattice(2, 25).unwrap())
        );
        let q = IntForm::diagonal(&[1, 2]).unwrap();
        assert_eq!(
            spatial(&enumerate_quadric_lattice(&q, 3).unwrap()),
            vec![vec![-1, -1], vec![-1, 1], vec![1, -1], vec![1, 1]]
        );
        assert!(enumerate_quadric_lattice(&q, 7).unwrap().is_empty());
    }

    #[test]
    fn quadric_off_diagonal_matches_scan() {
        let q = IntForm::new(vec![vec![2, 1, 0], vec![1, 3, 1], vec![0, 1, 2]]).unwrap();
        for e in 0..120 {
            let got = spatial(&enumerate_quadric_lattice(&q, e).unwrap());
            let mut want = Vec::new();
            for a in -12..=12i64 {
                for b in -12..=12i64 {
                    for c in -12..=12i64 {
                        if q.eval(&[a, b, c]) == Some(e as i128) {
                            want.push(vec![a, b, c]);
                        }
                    }
                }
            }
            assert_eq!(got, want, "E={e}");
        }
    }

    #[test]
    fn rejects_indefinite_form() {
        assert!(matches!(
            IntForm::new(vec![vec![1, 2], vec![2, 1]]),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(matches!(
            IntForm::new(vec![vec![1, 0], vec![1, 1]]),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn paraboloid_examples() {
        let one = paraboloid_points(1, 2, &ParaboloidForm::Unit).unwrap();
        let got: Vec<(i64, f64)> = one
            .points()
            .iter()
            .map(|f| (f.spatial[0], f.temporal.unwrap()))
            .collect();
        assert_eq!(got, vec![(-1, 1.0), (0, 0.0), (1, 1.0)]);
        // |z| < 2 in Z^2: the origin, (+-1, 0), (0, +-1) and (+-1, +-1)
        assert_eq!(paraboloid_points(2, 2, &ParaboloidForm::Unit).unwrap().len(), 9);
        let single = paraboloid_points(1, 1, &ParaboloidForm::Unit).unwrap();
        assert_eq!(single.len(), 1);
        assert!(single.is_periodic());
    }

    #[test]
    fn irrational_paraboloid_examples() {
        let t = |fs: FrequencySet| -> Vec<f64> { fs.points().iter().map(|f| f.temporal.unwrap()).collect() };
        assert_eq!(
            t(irrational_paraboloid_points(1, 2, &[1.0]).unwrap()),
            vec![1.0, 0.0, 1.0]
        );
        let s2 = 2f64.sqrt();
        assert_eq!(t(irrational_paraboloid_points(1, 2, &[s2]).unwrap()), vec![s2, 0.0, s2]);
        let fs = irrational_paraboloid_points(2, 2, &[1.0, 2.0]).unwrap();
        assert!(!fs.is_periodic());
        for f in fs.points() {
            let want = match (f.spatial[0], f.spatial[1]) {
                (0, 0) => 0.0,
                (_, 0) => 1.0,
                (0, _) => 2.0,
                _ => 3.0,
            };
            assert_eq!(f.temporal.unwrap(), want);
        }
    }

    #[test]
    fn normals() {
        let n = normal_at(&Surface::sphere(3), &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(n, vec![0.0, 0.0, 1.0]);
        let par = Surface::paraboloid(RealForm::identity(2), 1.0).unwrap();
        assert_eq!(normal_at(&par, &[0.0, 0.0, 0.0]).unwrap(), vec![0.0, 0.0, 1.0]);
        let par1 = Surface::paraboloid(RealForm::identity(1), 1.0).unwrap();
        let v = normal_at(&par1, &[1.0, 1.0]).unwrap();
        let s5 = 5f64.sqrt();
        assert!((v[0] + 2.0 / s5).abs() < 1e-15 && (v[1] - 1.0 / s5).abs() < 1e-15);
        assert!(matches!(
            normal_at(&Surface::sphere(2), &[1.0, 1.0]),
            Err(Error::OffSurface(_))
        ));
    }

    #[test]
    fn separation_examples() {
        let fs = enumerate_sphere_lattice(2, 25).unwrap();
        let s = separation(&fs);
        assert_eq!(s.squared, Some(2));
        assert!((s.distance - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(fs.separation(), s.distance);

        let single = FrequencySet::new(
            Surface::sphere(2),
            5.0,
            Some(25),
            vec![Frequency::new(vec![3, 4])],
            false,
        )
        .unwrap();
        assert_eq!(single.separation(), 5.0);

        let pair = enumerate_sphere_lattice(2, 1).unwrap().filter(|f| f.spatial[1] == 0);
        assert_eq!(pair.separation(), 2.0);
    }

    #[test]
    fn new_validates_membership_and_duplicates() {
        let bad = FrequencySet::new(
            Surface::sphere(2),
            5.0,
            Some(25),
            vec![Frequency::new(vec![3, 3])],
            false,
        );
        assert!(matches!(bad, Err(Error::OffSurface(_))));
        let dup = FrequencySet::new(
            Surface::sphere(2),
            5.0,
            Some(25),
            vec![Frequency::new(vec![3, 4]), Frequency::new(vec![3, 4])],
            false,
        );
        assert!(matches!(dup, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn text_round_trip() {
        let sets = vec![
            enumerate_sphere_lattice(3, 9).unwrap(),
            enumerate_quadric_lattice(&IntForm::diagonal(&[1, 2]).unwrap(), 3).unwrap(),
            paraboloid_points(2, 3, &ParaboloidForm::Unit).unwrap(),
            irrational_paraboloid_points(1, 3, &[2f64.sqrt()]).unwrap(),
        ];
        for fs in sets {
            let text = fs.to_text();
            assert!(text.starts_with(&format!("# surface={} D=", fs.surface().tag())));
            let back = FrequencySet::from_text(&text).unwrap();
            assert_eq!(back.points(), fs.points());
            assert_eq!(back.dilation(), fs.dilation());
            assert_eq!(back.surface(), fs.surface());
            assert_eq!(back.is_periodic(), fs.is_periodic());
        }
    }
}
