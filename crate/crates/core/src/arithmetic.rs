//! Exact lattice counting: representation numbers, pair-sum multiplicities
//! (the additive quantity `K`), and integer points on ellipses.
//!
//! Everything here is integer arithmetic. Pair sums are keyed by packing the
//! coordinates of `xi` into a single `u128`, most significant coordinate
//! first, so key order is lexicographic order on `xi`.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expsum::CoefficientAssignment;
use crate::moments::l4_exact;
use crate::surfaces::{enumerate_quadric_lattice, enumerate_sphere_lattice, FrequencySet, IntForm};
use crate::{Error, Result};

/// Largest point count per level accepted by the growth tables.
pub const MAX_POINTS_PER_LEVEL: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub n: usize,
    pub energy: Option<i64>,
    /// Number of points in the set.
    pub r: usize,
    /// `max_xi #{(z1, z2) : z1 + z2 = xi}` over every `xi`, zero included.
    pub k_all: u64,
    /// Same maximum with `xi = 0` excluded.
    pub k_nonzero: u64,
    /// Lexicographically smallest maximizer for `k_all`.
    pub argmax: Option<Vec<i64>>,
    /// Lexicographically smallest maximizer for `k_nonzero`.
    pub argmax_nonzero: Option<Vec<i64>>,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "n,E,r,K_all,K_nonzero,argmax";

    /// CSV row; the witness column is the nonzero maximizer, space separated.
    pub fn csv_row(&self) -> String {
        let e = self.energy.map(|e| e.to_string()).unwrap_or_default();
        let arg = self
            .argmax_nonzero
            .as_ref()
            .map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        format!("{},{},{},{},{},{}", self.n, e, self.r, self.k_all, self.k_nonzero, arg)
    }
}

/// `r_n(E) = #{z in Z^n : |z|^2 = E}`.
pub fn representation_count(n: usize, energy: i64) -> Result<usize> {
    Ok(enumerate_sphere_lattice(n, energy)?.len())
}

struct Packer {
    offset: i64,
    base: u128,
    dim: usize,
}

impl Packer {
    fn for_sums(points: &[Vec<i64>], dim: usize) -> Result<Packer> {
        let max = points.iter().flatten().map(|x| x.unsigned_abs()).max().unwrap_or(0) as i64;
        let offset = 2 * max;
        let base = (4 * max + 1) as u128;
        let mut cap: u128 = 1;
        for _ in 0..dim {
            cap = cap
                .checked_mul(base)
                .ok_or_else(|| Error::Overflow(format!("pair-sum keys for {dim} coordinates of size {max}")))?;
        }
        Ok(Packer { offset, base, dim })
    }

    fn pack_sum(&self, a: &[i64], b: &[i64]) -> u128 {
        a.iter()
            .zip(b)
            .fold(0u128, |acc, (x, y)| acc * self.base + (x + y + self.offset) as u128)
    }

    fn unpack(&self, mut key: u128) -> Vec<i64> {
        let mut out = vec![0; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = (key % self.base) as i64 - self.offset;
            key /= self.base;
        }
        out
    }
}

fn integer_points(fs: &FrequencySet) -> Result<Vec<Vec<i64>>> {
    fs.points()
        .iter()
        .map(|f| f.integer_coords().ok_or_else(|| Error::NonInteger(format!("{f:?}"))))
        .collect()
}

/// Ordered-pair multiplicities of `z1 + z2` over `fs x fs`, maximized with
/// and without `xi = 0`.
pub fn additive_pairs_k(fs: &FrequencySet) -> Result<EnergyReport> {
    let points = integer_points(fs)?;
    let dim = points.first().map_or(fs.spatial_dim(), Vec::len);
    let packer = Packer::for_sums(&points, dim)?;
    let zero_key = packer.pack_sum(&vec![0; dim], &vec![0; dim]);
    let mut counts: HashMap<u128, u64> = HashMap::with_capacity(points.len() * points.len() / 2 + 1);
    for a in &points {
        for b in &points {
            *counts.entry(packer.pack_sum(a, b)).or_insert(0) += 1;
        }
    }
    let best = |skip_zero: bool| {
        counts
            .iter()
            .filter(|(k, _)| !(skip_zero && **k == zero_key))
            .map(|(k, c)| (*c, std::cmp::Reverse(*k)))
            .max()
    };
    let all = best(false);
    let nonzero = best(true);
    Ok(EnergyReport {
        n: dim,
        energy: fs.level(),
        r: points.len(),
        k_all: all.map_or(0, |b| b.0),
        k_nonzero: nonzero.map_or(0, |b| b.0),
        argmax: all.map(|b| packer.unpack(b.1 .0)),
        argmax_nonzero: nonzero.map(|b| packer.unpack(b.1 .0)),
    })
}

/// `(K_nonzero + 1)^{1/4} ||a||_2` against the exact `||f||_4`.
///
/// `sum_xi |(a*a)(xi)|^2` splits into the `xi = 0` term, at most
/// `||a||_2^4`, and the rest, at most `K_nonzero ||a||_2^4` by Cauchy-Schwarz.
pub fn l4_from_energy(coeffs: &CoefficientAssignment, fs: &FrequencySet) -> Result<(f64, f64)> {
    let support: BTreeSet<_> = fs.points().iter().collect();
    if let Some(f) = coeffs.frequencies().iter().find(|f| !support.contains(f)) {
        return Err(Error::InvalidParameter(format!("coefficient at {f:?} outside the set")));
    }
    let report = additive_pairs_k(fs)?;
    let bound = ((report.k_nonzero + 1) as f64).powf(0.25) * coeffs.l2_norm();
    Ok((bound, l4_exact(coeffs)?))
}

/// `#{z in Z^2 : z^T Q z = E}` for a positive-definite integer 2x2 form.
pub fn ellipse_lattice_count(form: &IntForm, energy: i64) -> Result<usize> {
    if form.dim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "ellipse form has dimension {}",
            form.dim()
        )));
    }
    Ok(enumerate_quadric_lattice(form, energy)?.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthTable {
    pub rows: Vec<EnergyReport>,
    pub max_k_nonzero: u64,
    /// Log-log slope of `K_nonzero` against `E`, rows with `K_nonzero = 0`
    /// skipped; `None` with fewer than two usable rows.
    pub slope: Option<f64>,
}

impl GrowthTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(EnergyReport::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_row());
            out.push('\n');
        }
        out
    }
}

fn build_table(rows: Vec<EnergyReport>) -> Result<GrowthTable> {
    let max_k_nonzero = rows.iter().map(|r| r.k_nonzero).max().unwrap_or(0);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.k_nonzero > 0)
        .filter_map(|r| r.energy.map(|e| (e as f64, r.k_nonzero as f64)))
        .collect();
    let distinct = pts.iter().map(|p| p.0.to_bits()).collect::<BTreeSet<_>>().len();
    let slope = if distinct >= 2 {
        Some(crate::moments::growth_fit(&pts)?.slope)
    } else {
        None
    };
    Ok(GrowthTable {
        rows,
        max_k_nonzero,
        slope,
    })
}

/// Energy reports for every `E` in `energies`, computed by direct pair
/// counting on the enumerated sphere sets.
pub fn k_growth_table(n: usize, energies: impl IntoIterator<Item = i64>) -> Result<GrowthTable> {
    let energies: Vec<i64> = energies.into_iter().collect();
    let rows = energies
        .par_iter()
        .map(|&e| {
            let fs = enumerate_sphere_lattice(n, e)?;
            if fs.len() > MAX_POINTS_PER_LEVEL {
                return Err(Error::Overflow(format!(
                    "{} points at E = {e} exceed the guard {MAX_POINTS_PER_LEVEL}",
                    fs.len()
                )));
            }
            additive_pairs_k(&fs)
        })
        .collect::<Result<Vec<_>>>()?;
    build_table(rows)
}

/// Integer roots of `a y^2 + b y + c = 0` with `a > 0`.
fn integer_roots(a: i128, b: i128, c: i128) -> Vec<i64> {
    let disc = b * b - 4 * a * c;
    if disc < 0 {
        return Vec::new();
    }
    let s = disc.isqrt();
    if s * s != disc {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(2);
    for num in [-b - s, -b + s] {
        if num % (2 * a) == 0 {
            let y = (num / (2 * a)) as i64;
            if !out.contains(&y) {
                out.push(y);
            }
        }
    }
    out
}

/// Points of the 3-sphere `|z|^2 = E` assembled slice by slice: for each
/// last coordinate `t`, the circle `x^2 + y^2 = E - t^2`.
fn sphere3_by_slices(energy: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    let b = energy.isqrt();
    for t in -b..=b {
        let rest = (energy - t * t) as i128;
        for x in -b..=b {
            for y in integer_roots(1, 0, x as i128 * x as i128 - rest) {
                out.push([x, y, t]);
            }
        }
    }
    out
}

/// Number of `z` on `|z|^2 = E` with `|xi - z|^2 = E`, i.e. the sphere
/// intersected with the plane `2 xi.z = |xi|^2`, counted in the coordinate
/// plane orthogonal to the first nonzero axis `k` of `xi`.
///
/// Eliminating `z_k = (c - xi_i z_i - xi_j z_j) / xi_k`, `c = |xi|^2 / 2`,
/// leaves the ellipse
/// `xi_k^2 (z_i^2 + z_j^2) + (c - xi_i z_i - xi_j z_j)^2 = E xi_k^2`
/// together with the divisibility condition on `z_k`.
fn plane_section_count(xi: [i64; 3], energy: i64) -> u64 {
    let norm2: i64 = xi.iter().map(|x| x * x).sum();
    if norm2 % 2 != 0 {
        return 0;
    }
    let k = match xi.iter().position(|&x| x != 0) {
        Some(k) => k,
        None => return 0,
    };
    let (i, j) = match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let c = (norm2 / 2) as i128;
    let (xk, xi_i, xi_j) = (xi[k] as i128, xi[i] as i128, xi[j] as i128);
    let e = energy as i128;
    let b = energy.isqrt();
    let mut count = 0;
    for zi in -b..=b {
        let zi = zi as i128;
        let lin = c - xi_i * zi;
        let qa = xk * xk + xi_j * xi_j;
        let qb = -2 * xi_j * lin;
        let qc = xk * xk * zi * zi + lin * lin - e * xk * xk;
        for zj in integer_roots(qa, qb, qc) {
            if (lin - xi_j * zj as i128) % xk == 0 {
                count += 1;
            }
        }
    }
    count
}

/// Energy report for the 3-sphere of level `E` by the plane-section route:
/// points from circle slices, and the multiplicity of each candidate `xi`
/// from the ellipse count of its plane section. `xi = 0` has multiplicity
/// `r` (every `z` pairs with `-z`).
pub fn sphere3_energy_by_projection(energy: i64) -> Result<EnergyReport> {
    if energy < 0 {
        return Err(Error::InvalidParameter(format!("level {energy} is negative")));
    }
    let points = sphere3_by_slices(energy);
    let r = points.len();
    let mut candidates = BTreeSet::new();
    for a in &points {
        for b in &points {
            let xi = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
            if xi != [0, 0, 0] {
                candidates.insert(xi);
            }
        }
    }
    let mut nonzero: Option<(u64, [i64; 3])> = None;
    for xi in candidates {
        let c = plane_section_count(xi, energy);
        if nonzero.is_none_or(|(best, _)| c > best) {
            nonzero = Some((c, xi));
        }
    }
    let zero = (r > 0).then_some((r as u64, [0i64, 0, 0]));
    let all = match (zero, nonzero) {
        (Some(z), Some(nz)) if nz.0 > z.0 || (nz.0 == z.0 && nz.1 < z.1) => Some(nz),
        (Some(z), _) => Some(z),
        (None, nz) => nz,
    };
    Ok(EnergyReport {
        n: 3,
        energy: Some(energy),
        r,
        k_all: all.map_or(0, |a| a.0),
        k_nonzero: nonzero.map_or(0, |a| a.0),
        argmax: all.map(|a| a.1.to_vec()),
        argmax_nonzero: nonzero.map(|a| a.1.to_vec()),
    })
}

/// [`k_growth_table`] for `n = 3` by the plane-section route.
pub fn k_growth_table_by_projection(energies: impl IntoIterator<Item = i64>) -> Result<GrowthTable> {
    let energies: Vec<i64> = energies.into_iter().collect();
    let rows = energies
        .par_iter()
        .map(|&e| sphere3_energy_by_projection(e))
        .collect::<Result<Vec<_>>>()?;
    build_table(rows)
}
