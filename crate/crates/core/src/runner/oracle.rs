//! Built-in oracle suites: small instances where a library result is compared
//! with an independent computation.

use std::collections::BTreeMap;

use super::{broad_narrow_trials, quadruple_count, OracleCheck};
use crate::arithmetic::{additive_pairs_k, k_growth_table, k_growth_table_by_projection};
use crate::caps::{build_cap_partition, ClassifierConfig};
use crate::expsum::{evaluate_periodic, CoefficientAssignment, CoefficientModel, DispersionForm, TorusGrid};
use crate::moments::{decoupling_defect, l4_exact, lp_norm, GridPolicy};
use crate::strichartz::{epsilon_removal_check, space_time_samples, strichartz_ratio, Dispersion};
use crate::surfaces::{enumerate_sphere_lattice, paraboloid_points, IntForm, ParaboloidForm, Surface};
use crate::{Error, Result};

pub const ORACLE_SUITES: &[&str] = &[
    "parseval",
    "l4",
    "energy",
    "projection",
    "broad-narrow",
    "decoupling",
    "quadruples",
    "split",
];

/// Runs the named suite, or every suite for `"all"`.
pub fn oracle_suite(name: &str) -> Result<Vec<OracleCheck>> {
    if name == "all" {
        let mut out = Vec::new();
        for s in ORACLE_SUITES {
            out.extend(oracle_suite(s)?);
        }
        return Ok(out);
    }
    match name {
        "parseval" => parseval(),
        "l4" => l4(),
        "energy" => energy(),
        "projection" => projection(),
        "broad-narrow" => broad_narrow(),
        "decoupling" => decoupling(),
        "quadruples" => quadruples(),
        "split" => split(),
        other => Err(Error::InvalidParameter(format!(
            "unknown oracle suite {other:?}; known: all, {}",
            ORACLE_SUITES.join(", ")
        ))),
    }
}

fn worst_check(name: &str, worst: f64, tol: f64, what: &str) -> OracleCheck {
    OracleCheck::new(
        name,
        worst <= tol,
        format!("max {what} = {worst:e} (tolerance {tol:e})"),
    )
}

fn parseval() -> Result<Vec<OracleCheck>> {
    let mut worst: f64 = 0.0;
    for (n, e) in [(2, 25), (2, 50), (3, 101)] {
        let fs = enumerate_sphere_lattice(n, e)?;
        for seed in 0..5 {
            let c = CoefficientAssignment::from_model(&fs, &CoefficientModel::Gaussian, seed);
            let grid = TorusGrid::non_aliased(&c.max_abs_per_axis()?, 2.0);
            let l2 = lp_norm(&evaluate_periodic(&c, &grid)?, 2.0)?;
            let direct = c.amplitudes().iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max((l2 - direct).abs());
        }
    }
    Ok(vec![worst_check(
        "parseval",
        worst,
        1e-10,
        "|grid L2 - coefficient l2|",
    )])
}

fn l4() -> Result<Vec<OracleCheck>> {
    let mut worst: f64 = 0.0;
    for (n, e) in [(2, 25), (2, 65), (3, 50)] {
        let fs = enumerate_sphere_lattice(n, e)?;
        for seed in 0..5 {
            let c = CoefficientAssignment::from_model(&fs, &CoefficientModel::RandomPhase, seed);
            let grid = TorusGrid::non_aliased(&c.max_abs_per_axis()?, 4.0);
            let g = lp_norm(&evaluate_periodic(&c, &grid)?, 4.0)?;
            worst = worst.max((l4_exact(&c)? - g).abs());
        }
    }
    Ok(vec![worst_check(
        "l4-dual-path",
        worst,
        1e-9,
        "|pair-sum L4 - grid L4|",
    )])
}

fn energy() -> Result<Vec<OracleCheck>> {
    let mut mismatches = Vec::new();
    for n in [2, 3] {
        for e in 1..=120 {
            let fs = enumerate_sphere_lattice(n, e)?;
            let pts: Vec<Vec<i64>> = fs.points().iter().map(|f| f.spatial.clone()).collect();
            let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
            for a in &pts {
                for b in &pts {
                    *counts.entry(a.iter().zip(b).map(|(x, y)| x + y).collect()).or_default() += 1;
                }
            }
            let zero = vec![0; n];
            let k_all = counts.values().copied().max().unwrap_or(0);
            let k_nz = counts
                .iter()
                .filter(|(k, _)| **k != zero)
                .map(|(_, v)| *v)
                .max()
                .unwrap_or(0);
            let rep = additive_pairs_k(&fs)?;
            if (rep.k_all, rep.k_nonzero) != (k_all, k_nz) {
                mismatches.push(format!("n={n} E={e}"));
            }
        }
    }
    Ok(vec![OracleCheck::new(
        "pair-counts",
        mismatches.is_empty(),
        format!("mismatches: [{}]", mismatches.join(", ")),
    )])
}

fn projection() -> Result<Vec<OracleCheck>> {
    let a = k_growth_table(3, 0..=150)?;
    let b = k_growth_table_by_projection(0..=150)?;
    Ok(vec![OracleCheck::new(
        "projection-route",
        a == b,
        format!("{} rows compared", a.rows.len()),
    )])
}

fn broad_narrow() -> Result<Vec<OracleCheck>> {
    let mut out = Vec::new();
    for n in [2, 3] {
        for k in [4.0, 8.0] {
            let s = broad_narrow_trials(n, k, 100, 7, &ClassifierConfig::default())?;
            out.push(OracleCheck::new(
                &format!("broad-bound-n{n}-K{k}"),
                s.violations == 0 && s.broad + s.narrow == s.trials,
                format!("{} broad, {} narrow, {} violations", s.broad, s.narrow, s.violations),
            ));
        }
    }
    Ok(out)
}

fn decoupling() -> Result<Vec<OracleCheck>> {
    let part = build_cap_partition(&Surface::sphere(2), 8.0)?;
    let mut p2: f64 = 0.0;
    let mut single: f64 = 0.0;
    for e in [25, 50, 65] {
        let fs = enumerate_sphere_lattice(2, e)?;
        let c = CoefficientAssignment::from_model(&fs, &CoefficientModel::RandomPhase, e as u64);
        p2 = p2.max((decoupling_defect(&fs, &c, &part, 2.0, &GridPolicy::Auto)?.defect - 1.0).abs());
        let first = fs.points()[0].clone();
        let one = fs.filter(|f| *f == first);
        let c1 = CoefficientAssignment::from_model(&one, &CoefficientModel::Gaussian, 1);
        single = single.max((decoupling_defect(&one, &c1, &part, 4.0, &GridPolicy::Auto)?.defect - 1.0).abs());
    }
    Ok(vec![
        worst_check("p2-orthogonality", p2, 1e-10, "|defect - 1| at p = 2"),
        worst_check("single-cap", single, 1e-10, "|defect - 1| for one frequency"),
    ])
}

fn quadruples() -> Result<Vec<OracleCheck>> {
    let mut worst: f64 = 0.0;
    for r in [4, 8] {
        let m = strichartz_ratio(
            1,
            r,
            4.0,
            &CoefficientModel::Unit,
            0,
            &Dispersion::Unit,
            &GridPolicy::Auto,
        )?;
        let expected = quadruple_count(r) as f64 / ((2 * r - 1) * (2 * r - 1)) as f64;
        worst = worst.max((m.ratio.powi(4) - expected).abs());
    }
    Ok(vec![worst_check(
        "quadruple-count",
        worst,
        1e-9,
        "|ratio^4 - quadruples / N^2|",
    )])
}

fn split() -> Result<Vec<OracleCheck>> {
    let mut failed = 0;
    let form = DispersionForm::Integer(IntForm::identity(1));
    for r in [4i64, 8] {
        let fs = paraboloid_points(1, r, &ParaboloidForm::Unit)?;
        for seed in 0..3 {
            let c = CoefficientAssignment::from_model(&fs, &CoefficientModel::RandomPhase, seed);
            let s = space_time_samples(&c, &form, &[128, 1024])?;
            if !epsilon_removal_check(&s, 1, r as f64, 10.0, 4.0, 7.0)?.holds {
                failed += 1;
            }
        }
    }
    Ok(vec![OracleCheck::new(
        "split-inequality",
        failed == 0,
        format!("{failed} fields violate the split"),
    )])
}
