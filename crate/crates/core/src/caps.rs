//! Cap partitions at scale `1/K`, transversality of cap normals, the pointwise
//! broad/narrow classifier, and parabolic rescaling of caps on graphs.
//!
//! Spheres (and quadric level sets, through radial projection) are charted by
//! the `2n` faces of the cube `[-1, 1]^n`: a unit point `x` belongs to the face
//! of its largest coordinate (ties go to the smaller axis), with face
//! coordinates `u_j = x_j / |x_axis|` in `[-1, 1]`, and each face is cut into
//! `ceil(K)^{n-1}` congruent boxes. Graphs use a uniform grid of width at most
//! `1/K` on the base cube `[-u0, u0]^{n-1}`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::surfaces::{Frequency, FrequencySet, Surface, MEMBERSHIP_TOL};
use crate::{Error, Result};

/// Implied constant of the wedge condition `|xi_1 ^ ... ^ xi_n| > c_w K^{-n}`.
pub const DEFAULT_WEDGE_CONSTANT: f64 = 0.5;

/// Largest candidate count for the exhaustive transversal search.
const EXHAUSTIVE_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum CellBounds {
    /// Box `[lo, hi]` in the face coordinates of face `sign * e_axis`.
    CubeFace {
        axis: usize,
        positive: bool,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Box `[lo, hi]` in base coordinates of a graph.
    Base { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cap {
    pub index: usize,
    /// Center on the unit surface.
    pub center: Vec<f64>,
    pub scale: f64,
    pub cell: CellBounds,
}

#[derive(Debug, Clone)]
pub struct CapPartition {
    surface: Surface,
    k: f64,
    cells_per_axis: usize,
    caps: Vec<Cap>,
}

impl CapPartition {
    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn caps(&self) -> &[Cap] {
        &self.caps
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// `c_1` with every cap of diameter at most `c_1 / K`: `2 sqrt(n-1)` on
    /// spheres (the inverse face chart is 1-Lipschitz), `sqrt(n-1)` for the
    /// base cells of graphs.
    pub fn diameter_constant(&self) -> f64 {
        let b = (self.base_dim()) as f64;
        match self.surface {
            Surface::ParaboloidGraph { .. } => b.sqrt(),
            _ => 2.0 * b.sqrt(),
        }
    }

    fn base_dim(&self) -> usize {
        self.surface.ambient_dim() - 1
    }

    /// Index of the cap containing a unit-surface point.
    pub fn assign(&self, point: &[f64]) -> Result<usize> {
        if !self.surface.contains(point, MEMBERSHIP_TOL) {
            return Err(Error::OffSurface(format!("{point:?} on {}", self.surface.tag())));
        }
        let m = self.cells_per_axis;
        let b = self.base_dim();
        match &self.surface {
            Surface::ParaboloidGraph { radius, .. } => {
                let width = 2.0 * radius / m as f64;
                let mut flat = 0usize;
                for &y in &point[..b] {
                    if y.abs() > radius * (1.0 + MEMBERSHIP_TOL) {
                        return Err(Error::OffSurface(format!(
                            "base coordinate {y} outside [-{radius}, {radius}]"
                        )));
                    }
                    let c = (((y + radius) / width).floor().max(0.0) as usize).min(m - 1);
                    flat = flat * m + c;
                }
                Ok(flat)
            }
            _ => {
                let (axis, positive, u) = face_coordinates(point);
                let mut flat = 2 * axis + usize::from(!positive);
                for uj in u {
                    let c = (((uj + 1.0) / 2.0 * m as f64).floor().max(0.0) as usize).min(m - 1);
                    flat = flat * m + c;
                }
                Ok(flat)
            }
        }
    }

    /// Text table `cap_index, center coords, scale`.
    pub fn dump(&self) -> String {
        let mut out = String::from("cap_index,center,scale\n");
        for cap in &self.caps {
            let center: Vec<String> = cap.center.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(out, "{},{},{:?}", cap.index, center.join(" "), cap.scale);
        }
        out
    }
}

fn face_coordinates(x: &[f64]) -> (usize, bool, Vec<f64>) {
    let mut axis = 0;
    for i in 1..x.len() {
        if x[i].abs() > x[axis].abs() {
            axis = i;
        }
    }
    let pivot = x[axis].abs();
    let u = (0..x.len()).filter(|&j| j != axis).map(|j| x[j] / pivot).collect();
    (axis, x[axis] > 0.0, u)
}

fn decode(mut flat: usize, m: usize, len: usize) -> Vec<usize> {
    let mut idx = vec![0; len];
    for i in (0..len).rev() {
        idx[i] = flat % m;
        flat /= m;
    }
    idx
}

/// Partition of the unit surface into caps of size about `1/K` (`K >= 1`).
pub fn build_cap_partition(surface: &Surface, k: f64) -> Result<CapPartition> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("cap scale K = {k}")));
    }
    let b = surface.ambient_dim() - 1;
    let mut caps = Vec::new();
    let cells_per_axis;
    match surface {
        Surface::ParaboloidGraph { form, radius } => {
            let m = (2.0 * radius * k).ceil().max(1.0) as usize;
            cells_per_axis = m;
            let width = 2.0 * radius / m as f64;
            for flat in 0..m.pow(b as u32) {
                let idx = decode(flat, m, b);
                let lo: Vec<f64> = idx.iter().map(|&c| -radius + c as f64 * width).collect();
                let hi: Vec<f64> = lo.iter().map(|l| l + width).collect();
                let mut center: Vec<f64> = lo.iter().map(|l| l + width / 2.0).collect();
                center.push(form.eval(&center));
                caps.push(Cap {
                    index: flat,
                    center,
                    scale: 1.0 / k,
                    cell: CellBounds::Base { lo, hi },
                });
            }
        }
        _ => {
            let n = surface.ambient_dim();
            let m = k.ceil() as usize;
            cells_per_axis = m;
            let width = 2.0 / m as f64;
            let per_face = m.pow(b as u32);
            for face in 0..2 * n {
                let axis = face / 2;
                let positive = face % 2 == 0;
                for cell in 0..per_face {
                    let idx = decode(cell, m, b);
                    let lo: Vec<f64> = idx.iter().map(|&c| -1.0 + c as f64 * width).collect();
                    let hi: Vec<f64> = lo.iter().map(|l| l + width).collect();
                    let mut dir = Vec::with_capacity(n);
                    let mut it = lo.iter().map(|l| l + width / 2.0);
                    for i in 0..n {
                        if i == axis {
                            dir.push(if positive { 1.0 } else { -1.0 });
                        } else {
                            dir.push(it.next().unwrap());
                        }
                    }
                    let center = project_to_surface(surface, &dir);
                    caps.push(Cap {
                        index: face * per_face + cell,
                        center,
                        scale: 1.0 / k,
                        cell: CellBounds::CubeFace { axis, positive, lo, hi },
                    });
                }
            }
        }
    }
    Ok(CapPartition {
        surface: surface.clone(),
        k,
        cells_per_axis,
        caps,
    })
}

fn project_to_surface(surface: &Surface, dir: &[f64]) -> Vec<f64> {
    let scale = match surface {
        Surface::QuadricLevel { form } => form.to_real().eval(dir).sqrt(),
        _ => linalg::norm(dir),
    };
    dir.iter().map(|x| x / scale).collect()
}

/// Groups the frequencies of `fs` by the cap containing their unit-surface
/// image. Every frequency lands in exactly one cap.
pub fn assign_points(part: &CapPartition, fs: &FrequencySet) -> Result<BTreeMap<usize, Vec<Frequency>>> {
    if fs.surface().ambient_dim() != part.surface().ambient_dim() || fs.surface().tag() != part.surface().tag() {
        return Err(Error::InvalidParameter(format!(
            "{} set against a {} partition",
            fs.surface().tag(),
            part.surface().tag()
        )));
    }
    let mut out: BTreeMap<usize, Vec<Frequency>> = BTreeMap::new();
    for f in fs.points() {
        let u = fs.unit_point(f);
        let cap = part.assign(&u)?;
        out.entry(cap).or_default().push(f.clone());
    }
    Ok(out)
}

/// `sqrt(det Gram)` of the vectors; zero iff they are linearly dependent.
pub fn wedge_volume(vectors: &[Vec<f64>]) -> f64 {
    linalg::parallelotope_volume(vectors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransversalTuple {
    /// Cap indices, ascending.
    pub indices: Vec<usize>,
    pub wedge: f64,
}

/// Finds `k` of the labelled normals whose wedge volume exceeds `threshold`.
///
/// Greedy pass: repeatedly add the normal that maximizes the wedge with the
/// partial tuple (first maximizer wins). If the greedy tuple fails and there
/// are at most 12 candidates, all `k`-subsets are tried in lexicographic
/// order.
pub fn transversal_tuple_search(normals: &[(usize, Vec<f64>)], k: usize, threshold: f64) -> Option<TransversalTuple> {
    if k == 0 || k > normals.len() {
        return None;
    }
    let finish = |mut picks: Vec<usize>| {
        picks.sort_unstable();
        let vecs: Vec<Vec<f64>> = picks.iter().map(|&i| normals[i].1.clone()).collect();
        let mut indices: Vec<usize> = picks.iter().map(|&i| normals[i].0).collect();
        indices.sort_unstable();
        TransversalTuple {
            indices,
            wedge: wedge_volume(&vecs),
        }
    };

    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut current: Vec<Vec<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for (i, (_, v)) in normals.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            current.push(v.clone());
            let w = wedge_volume(&current);
            current.pop();
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((i, w));
            }
        }
        let (i, _) = best?;
        chosen.push(i);
        current.push(normals[i].1.clone());
    }
    if wedge_volume(&current) > threshold {
        return Some(finish(chosen));
    }
    if normals.len() <= EXHAUSTIVE_LIMIT {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            let vecs: Vec<Vec<f64>> = combo.iter().map(|&i| normals[i].1.clone()).collect();
            if wedge_volume(&vecs) > threshold {
                return Some(finish(combo));
            }
            // next k-combination of 0..len in lexicographic order
            let len = normals.len();
            let mut i = k;
            loop {
                if i == 0 {
                    return None;
                }
                i -= 1;
                if combo[i] < len - k + i {
                    break;
                }
            }
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub wedge_constant: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            wedge_constant: DEFAULT_WEDGE_CONSTANT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    /// `n` caps above the threshold with transversal normals.
    Broad { caps: Vec<usize>, wedge: f64 },
    /// The above-threshold normals cluster near `normal^perp`.
    Narrow { normal: Vec<f64>, witness: f64 },
}

impl Classification {
    pub fn is_broad(&self) -> bool {
        matches!(self, Classification::Broad { .. })
    }

    /// Row `x coords, variant, witness data` for classification dumps.
    pub fn dump_row(&self, x: &[f64]) -> String {
        let xs: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
        match self {
            Classification::Broad { caps, wedge } => {
                let c: Vec<String> = caps.iter().map(|c| c.to_string()).collect();
                format!("{},broad,{} wedge={wedge:?}", xs.join(" "), c.join(" "))
            }
            Classification::Narrow { normal, witness } => {
                let v: Vec<String> = normal.iter().map(|c| format!("{c:?}")).collect();
                format!("{},narrow,{} max={witness:?}", xs.join(" "), v.join(" "))
            }
        }
    }
}

/// Threshold `K^{-(n-1)} max_alpha |c_alpha|` of the broad condition.
pub fn broad_threshold(cap_sums: &BTreeMap<usize, Complex64>, k: f64, n: usize) -> f64 {
    let max = cap_sums.values().map(|c| c.norm()).fold(0.0, f64::max);
    k.powi(-(n as i32 - 1)) * max
}

/// Broad iff some `n` caps have `|c_alpha| > K^{-(n-1)} max |c|` and normals
/// with wedge above `c_w K^{-n}`; otherwise narrow, with the hyperplane
/// normal taken as the least-significant singular direction of the stacked
/// above-threshold normals.
pub fn classify_point(
    cap_sums: &BTreeMap<usize, Complex64>,
    normals: &BTreeMap<usize, Vec<f64>>,
    k: f64,
    n: usize,
    config: &ClassifierConfig,
) -> Result<Classification> {
    let max = cap_sums.values().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::Empty("all cap sums vanish".into()));
    }
    let threshold = broad_threshold(cap_sums, k, n);
    let mut candidates: Vec<(usize, Vec<f64>)> = Vec::new();
    for (&alpha, c) in cap_sums {
        if c.norm() > threshold {
            let v = normals
                .get(&alpha)
                .ok_or_else(|| Error::InvalidParameter(format!("no normal for cap {alpha}")))?;
            if v.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "normal of cap {alpha} is not {n}-dimensional"
                )));
            }
            candidates.push((alpha, v.clone()));
        }
    }
    if candidates.len() >= n {
        let wedge_min = config.wedge_constant * k.powi(-(n as i32));
        if let Some(t) = transversal_tuple_search(&candidates, n, wedge_min) {
            return Ok(Classification::Broad {
                caps: t.indices,
                wedge: t.wedge,
            });
        }
    }
    let mut gram = vec![0.0; n * n];
    for (_, v) in &candidates {
        for i in 0..n {
            for j in 0..n {
                gram[i * n + j] += v[i] * v[j];
            }
        }
    }
    let mut normal = linalg::symmetric_eigen(&gram, n).swap_remove(0).1;
    linalg::canonical_sign(&mut normal);
    Ok(Classification::Narrow { normal, witness: max })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseBound {
    /// `|sum_alpha c_alpha|`.
    pub lhs: f64,
    /// `K^{2n-2} (prod_i |c_{alpha_i}|)^{1/n}`.
    pub rhs: f64,
}

/// Both sides of the broad pointwise bound. `lhs <= rhs` whenever at most
/// `K^{n-1}` caps carry nonzero sums.
pub fn broad_pointwise_bound(
    cap_sums: &BTreeMap<usize, Complex64>,
    classification: &Classification,
    k: f64,
    n: usize,
) -> Result<PointwiseBound> {
    let Classification::Broad { caps, .. } = classification else {
        return Err(Error::NotBroad);
    };
    let lhs = cap_sums.values().sum::<Complex64>().norm();
    let mut log_prod = 0.0;
    for alpha in caps {
        let c = cap_sums
            .get(alpha)
            .ok_or_else(|| Error::InvalidParameter(format!("cap {alpha} has no sum")))?;
        log_prod += c.norm().ln();
    }
    let rhs = k.powi(2 * n as i32 - 2) * (log_prod / n as f64).exp();
    Ok(PointwiseBound { lhs, rhs })
}

/// A cap of a graph mapped to unit scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledCap {
    /// Rescaled graph points `(y', s')`.
    pub points: Vec<Vec<f64>>,
    /// `rho^{(d-1) - (d+1)/p}`, `d` the ambient dimension.
    pub factor: f64,
    pub center: Vec<f64>,
    pub rho: f64,
}

/// Parabolic rescaling of the cap `B(a, rho)` of a graph `s = psi(y)`.
///
/// Base points map to `y' = (y - a) / rho`. Heights absorb the affine part of
/// the phase (the shear of the dual variables) and the anisotropic dilation:
/// `s' = (s - psi(a) - grad psi(a).(y - a)) / rho^2`, so a quadratic graph is
/// mapped onto itself.
pub fn parabolic_rescale(
    surface: &Surface,
    center: &[f64],
    rho: f64,
    points: &[Vec<f64>],
    p: f64,
) -> Result<RescaledCap> {
    let Surface::ParaboloidGraph { form, .. } = surface else {
        return Err(Error::InvalidParameter("parabolic rescaling needs a graph".into()));
    };
    let b = form.dim();
    if center.len() != b || !(rho > 0.0) || !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "center of dimension {}, rho = {rho}, p = {p}",
            center.len()
        )));
    }
    let psi_a = form.eval(center);
    let grad_a = form.gradient(center);
    let mut out = Vec::with_capacity(points.len());
    for pt in points {
        if !surface.contains(pt, MEMBERSHIP_TOL) {
            return Err(Error::OffSurface(format!("{pt:?}")));
        }
        let shift: Vec<f64> = pt[..b].iter().zip(center).map(|(y, a)| y - a).collect();
        if linalg::norm(&shift) > rho * (1.0 + 1e-12) {
            return Err(Error::OutsideCap(format!("{pt:?} not within {rho} of {center:?}")));
        }
        let mut q: Vec<f64> = shift.iter().map(|d| d / rho).collect();
        q.push((pt[b] - psi_a - linalg::dot(&grad_a, &shift)) / (rho * rho));
        out.push(q);
    }
    let d = (b + 1) as f64;
    Ok(RescaledCap {
        points: out,
        factor: rho.powf((d - 1.0) - (d + 1.0) / p),
        center: center.to_vec(),
        rho,
    })
}

/// Inverse of [`parabolic_rescale`].
pub fn inverse_parabolic_rescale(surface: &Surface, cap: &RescaledCap) -> Result<Vec<Vec<f64>>> {
    let Surface::ParaboloidGraph { form, .. } = surface else {
        return Err(Error::InvalidParameter("parabolic rescaling needs a graph".into()));
    };
    let b = form.dim();
    let psi_a = form.eval(&cap.center);
    let grad_a = form.gradient(&cap.center);
    Ok(cap
        .points
        .iter()
        .map(|q| {
            let shift: Vec<f64> = q[..b].iter().map(|v| v * cap.rho).collect();
            let mut y: Vec<f64> = shift.iter().zip(&cap.center).map(|(s, a)| s + a).collect();
            y.push(psi_a + linalg::dot(&grad_a, &shift) + cap.rho * cap.rho * q[b]);
            y
        })
        .collect())
}

/// Frequencies whose unit normal `xi'` satisfies `|<xi', v>| < c / M`.
pub fn near_subspace_filter(fs: &FrequencySet, v: &[f64], c: f64, m: f64) -> Result<FrequencySet> {
    let dim = fs.surface().ambient_dim();
    let len = linalg::norm(v);
    if v.len() != dim || len == 0.0 {
        return Err(Error::InvalidParameter(format!("hyperplane normal {v:?}")));
    }
    let unit: Vec<f64> = v.iter().map(|x| x / len).collect();
    let limit = c / m;
    let mut keep = Vec::with_capacity(fs.len());
    for f in fs.points() {
        let normal = fs.surface().normal_at(&fs.unit_point(f))?;
        keep.push(linalg::dot(&normal, &unit).abs() < limit);
    }
    let mut it = keep.into_iter();
    Ok(fs.filter(|_| it.next().unwrap_or(false)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{enumerate_sphere_lattice, paraboloid_points, ParaboloidForm, RealForm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle_point(theta: f64) -> Vec<f64> {
        vec![theta.cos(), theta.sin()]
    }

    #[test]
    fn circle_partition_has_eight_caps_and_covers() {
        let part = build_cap_partition(&Surface::sphere(2), 2.0).unwrap();
        assert_eq!(part.len(), 8);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut hit = [0usize; 8];
        for _ in 0..10_000 {
            let idx = part
                .assign(&circle_point(rng.random::<f64>() * std::f64::consts::TAU))
                .unwrap();
            hit[idx] += 1;
        }
        assert!(hit.iter().all(|&h| h > 0));
    }

    #[test]
    fn paraboloid_partition_is_uniform_grid() {
        let surface = Surface::paraboloid(RealForm::identity(1), 1.0).unwrap();
        let part = build_cap_partition(&surface, 4.0).unwrap();
        assert_eq!(part.len(), 8);
        for cap in part.caps() {
            let CellBounds::Base { lo, hi } = &cap.cell else {
                panic!()
            };
            assert!((hi[0] - lo[0] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn centers_are_fixed_points() {
        let surfaces = vec![
            Surface::sphere(2),
            Surface::sphere(3),
            Surface::QuadricLevel {
                form: crate::surfaces::IntForm::diagonal(&[1, 2, 3]).unwrap(),
            },
            Surface::paraboloid(RealForm::identity(2), 1.0).unwrap(),
        ];
        for s in surfaces {
            for k in [2.0, 3.5, 8.0] {
                let part = build_cap_partition(&s, k).unwrap();
                for cap in part.caps() {
                    assert_eq!(part.assign(&cap.center).unwrap(), cap.index);
                }
            }
        }
    }

    #[test]
    fn sphere_cells_respect_diameter_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in [2.0, 4.0, 8.0] {
            let part = build_cap_partition(&Surface::sphere(3), k).unwrap();
            let mut by_cap: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
            for _ in 0..20_000 {
                let mut v: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
                let l = linalg::norm(&v);
                v.iter_mut().for_each(|x| *x /= l);
                by_cap.entry(part.assign(&v).unwrap()).or_default().push(v);
            }
            let bound = part.diameter_constant() / k;
            assert!(bound <= 4.0 / k);
            for pts in by_cap.values() {
                for a in pts {
                    for b in pts {
                        let chord: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                        let arc = 2.0 * (chord / 2.0).min(1.0).asin();
                        assert!(arc <= bound + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn assignment_examples() {
        let fs = enumerate_sphere_lattice(2, 25).unwrap();
        let coarse = build_cap_partition(&Surface::sphere(2), 1.0).unwrap();
        assert!(coarse.len() <= 8);
        let groups = assign_points(&coarse, &fs).unwrap();
        assert_eq!(groups.values().map(Vec::len).sum::<usize>(), 12);

        let fine = build_cap_partition(&Surface::sphere(2), 64.0).unwrap();
        let groups = assign_points(&fine, &fs).unwrap();
        assert_eq!(groups.len(), 12);

        let single = fs.filter(|f| f.spatial == vec![3, 4]);
        assert_eq!(assign_points(&fine, &single).unwrap().len(), 1);
    }

    #[test]
    fn assigns_space_time_sets_by_base_point() {
        let fs = paraboloid_points(1, 4, &ParaboloidForm::Unit).unwrap();
        let part = build_cap_partition(fs.surface(), 2.0).unwrap();
        let groups = assign_points(&part, &fs).unwrap();
        assert_eq!(groups.values().map(Vec::len).sum::<usize>(), 7);
        assert_eq!(groups[&0].len(), 1);
    }

    #[test]
    fn wedge_examples() {
        let id3: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        assert!((wedge_volume(&id3) - 1.0).abs() < 1e-15);
        assert_eq!(wedge_volume(&[vec![1.0, 0.0], vec![1.0, 0.0]]), 0.0);
        let h = 0.5f64.sqrt();
        assert!((wedge_volume(&[vec![1.0, 0.0], vec![h, h]]) - h).abs() < 1e-15);
    }

    #[test]
    fn transversal_examples() {
        let basis: Vec<(usize, Vec<f64>)> = (0..3)
            .map(|i| (i, (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect()))
            .collect();
        let t = transversal_tuple_search(&basis, 3, 0.5).unwrap();
        assert_eq!(t.indices, vec![0, 1, 2]);
        assert!((t.wedge - 1.0).abs() < 1e-15);

        let same = vec![(0, vec![1.0, 0.0]), (1, vec![1.0, 0.0]), (2, vec![1.0, 0.0])];
        assert!(transversal_tuple_search(&same, 2, 1e-9).is_none());

        let deg = |d: f64| circle_point(d.to_radians());
        let fan = vec![(10, deg(0.0)), (11, deg(5.0)), (12, deg(90.0))];
        let t = transversal_tuple_search(&fan, 2, 0.9).unwrap();
        assert_eq!(t.indices, vec![10, 12]);
        assert!((t.wedge - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exhaustive_fallback_finds_tuple_missed_by_greedy() {
        // Greedy anchors at 0 deg and adds 60 deg (wedge 0.866); only the
        // pair (60, 150) clears 0.95.
        let deg = |d: f64| circle_point(d.to_radians());
        let normals = vec![(0, deg(0.0)), (1, deg(60.0)), (2, deg(150.0))];
        let t = transversal_tuple_search(&normals, 2, 0.95).unwrap();
        assert_eq!(t.indices, vec![1, 2]);
        assert!((t.wedge - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        let e = |i: usize, n: usize| -> Vec<f64> { (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect() };
        let cfg = ClassifierConfig::default();

        let sums: BTreeMap<usize, Complex64> = [(4, Complex64::new(2.0, 0.0))].into();
        let normals: BTreeMap<usize, Vec<f64>> = [(4, e(0, 3))].into();
        let cls = classify_point(&sums, &normals, 10.0, 3, &cfg).unwrap();
        assert!(!cls.is_broad());

        for n in 2..=4 {
            let sums: BTreeMap<usize, Complex64> = (0..n).map(|i| (i, Complex64::new(1.0, 0.0))).collect();
            let normals: BTreeMap<usize, Vec<f64>> = (0..n).map(|i| (i, e(i, n))).collect();
            match classify_point(&sums, &normals, 10.0, n, &cfg).unwrap() {
                Classification::Broad { caps, wedge } => {
                    assert_eq!(caps, (0..n).collect::<Vec<_>>());
                    assert!((wedge - 1.0).abs() < 1e-15);
                }
                other => panic!("expected broad, got {other:?}"),
            }
        }

        let sums: BTreeMap<usize, Complex64> = [(0, Complex64::new(1.0, 0.0)), (1, Complex64::new(0.0, 1.0))].into();
        let normals: BTreeMap<usize, Vec<f64>> = [(0, vec![1.0, 0.0]), (1, vec![1.0, 0.0])].into();
        match classify_point(&sums, &normals, 10.0, 2, &cfg).unwrap() {
            Classification::Narrow { normal, witness } => {
                assert!(normal[0].abs() < 1e-12 && (normal[1] - 1.0).abs() < 1e-12);
                assert_eq!(witness, 1.0);
            }
            other => panic!("expected narrow, got {other:?}"),
        }

        let zero: BTreeMap<usize, Complex64> = [(0, Complex64::new(0.0, 0.0))].into();
        assert!(matches!(
            classify_point(&zero, &normals, 10.0, 2, &cfg),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn bound_examples() {
        let n = 2;
        let sums: BTreeMap<usize, Complex64> = (0..3).map(|i| (i, Complex64::new(1.0, 0.0))).collect();
        let cls = Classification::Broad {
            caps: vec![0, 1],
            wedge: 1.0,
        };
        let b = broad_pointwise_bound(&sums, &cls, 4.0, n).unwrap();
        assert_eq!(b.lhs, 3.0);
        assert!((b.rhs - 16.0).abs() < 1e-12);

        let doubled: BTreeMap<usize, Complex64> = sums.iter().map(|(k, v)| (*k, v * 2.0)).collect();
        let b2 = broad_pointwise_bound(&doubled, &cls, 4.0, n).unwrap();
        assert!((b2.lhs - 2.0 * b.lhs).abs() < 1e-12 && (b2.rhs - 2.0 * b.rhs).abs() < 1e-12);

        let narrow = Classification::Narrow {
            normal: vec![0.0, 1.0],
            witness: 1.0,
        };
        assert!(matches!(
            broad_pointwise_bound(&sums, &narrow, 4.0, n),
            Err(Error::NotBroad)
        ));
    }

    #[test]
    fn broad_bound_on_random_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let part = build_cap_partition(&Surface::sphere(2), 10.0).unwrap();
        let mut broad = 0;
        for _ in 0..100 {
            let mut ids: Vec<usize> = (0..part.len()).collect();
            for i in 0..10 {
                let j = rng.random_range(i..ids.len());
                ids.swap(i, j);
            }
            let sums: BTreeMap<usize, Complex64> = ids[..10]
                .iter()
                .map(|&i| {
                    (
                        i,
                        Complex64::from_polar(rng.random::<f64>().powi(3), rng.random::<f64>() * 6.3),
                    )
                })
                .collect();
            let normals: BTreeMap<usize, Vec<f64>> =
                ids[..10].iter().map(|&i| (i, part.caps()[i].center.clone())).collect();
            let cls = classify_point(&sums, &normals, 10.0, 2, &ClassifierConfig::default()).unwrap();
            if cls.is_broad() {
                broad += 1;
                let b = broad_pointwise_bound(&sums, &cls, 10.0, 2).unwrap();
                assert!(b.lhs <= b.rhs);
            }
        }
        assert!(broad > 0);
    }

    #[test]
    fn rescale_examples() {
        let s1 = Surface::paraboloid(RealForm::identity(1), 1.0).unwrap();
        let pts = vec![vec![0.3, 0.09], vec![-0.5, 0.25]];
        let id = parabolic_rescale(&s1, &[0.0], 1.0, &pts, 4.0).unwrap();
        assert_eq!(id.points, pts);
        assert_eq!(id.factor, 1.0);

        let rho = 0.2;
        let half = parabolic_rescale(&s1, &[0.0], rho, &[vec![rho / 2.0, rho * rho / 4.0]], 6.0).unwrap();
        assert!((half.points[0][0] - 0.5).abs() < 1e-15);
        assert!((half.points[0][1] - 0.25).abs() < 1e-15);
        // curve in R^2: rho^{(2-1) - 3/p}
        assert!((half.factor - rho.powf(1.0 - 3.0 / 6.0)).abs() < 1e-15);

        assert!(matches!(
            parabolic_rescale(&s1, &[0.0], 0.1, &[vec![0.5, 0.25]], 4.0),
            Err(Error::OutsideCap(_))
        ));
    }

    #[test]
    fn rescale_round_trip_on_random_caps() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let form = RealForm::new(vec![vec![1.0, 0.3], vec![0.3, 2.0]]).unwrap();
        let surface = Surface::paraboloid(form.clone(), 1.0).unwrap();
        for _ in 0..100 {
            let a = vec![rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
            let rho = 0.01 + 0.3 * rng.random::<f64>();
            let pts: Vec<Vec<f64>> = (0..20)
                .map(|_| {
                    let r = rho * rng.random::<f64>().sqrt();
                    let th = rng.random::<f64>() * std::f64::consts::TAU;
                    let y = vec![a[0] + r * th.cos(), a[1] + r * th.sin()];
                    let s = form.eval(&y);
                    vec![y[0], y[1], s]
                })
                .collect();
            let cap = parabolic_rescale(&surface, &a, rho, &pts, 3.0).unwrap();
            for q in &cap.points {
                assert!(linalg::norm(&q[..2]) <= 1.0 + 1e-12);
                assert!((q[2] - form.eval(&q[..2])).abs() < 1e-9);
            }
            let back = inverse_parabolic_rescale(&surface, &cap).unwrap();
            for (x, y) in back.iter().zip(&pts) {
                for (u, v) in x.iter().zip(y) {
                    assert!((u - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn subspace_filter_examples() {
        let fs = enumerate_sphere_lattice(2, 25).unwrap();
        let kept = near_subspace_filter(&fs, &[0.0, 1.0], 0.1, 1.0).unwrap();
        let pts: Vec<Vec<i64>> = kept.points().iter().map(|f| f.spatial.clone()).collect();
        assert_eq!(pts, vec![vec![-5, 0], vec![5, 0]]);

        let equator = enumerate_sphere_lattice(3, 25).unwrap().filter(|f| f.spatial[2] == 0);
        let kept = near_subspace_filter(&equator, &[0.0, 0.0, 1.0], 1e-6, 1.0).unwrap();
        assert_eq!(kept.len(), equator.len());

        let axis = enumerate_sphere_lattice(2, 1)
            .unwrap()
            .filter(|f| f.spatial == vec![1, 0]);
        assert!(near_subspace_filter(&axis, &[1.0, 0.0], 0.9, 1.0).unwrap().is_empty());
    }

    #[test]
    fn dumps() {
        let part = build_cap_partition(&Surface::sphere(2), 1.0).unwrap();
        let d = part.dump();
        assert_eq!(d.lines().count(), 1 + part.len());
        let row = Classification::Narrow {
            normal: vec![0.0, 1.0],
            witness: 2.0,
        }
        .dump_row(&[0.5, 0.25]);
        assert_eq!(row, "0.5 0.25,narrow,0.0 1.0 max=2.0");
    }
}
