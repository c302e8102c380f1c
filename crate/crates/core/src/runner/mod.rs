//! Experiment configs, dispatch, CSV and JSON persistence.
//!
//! A run reads one JSON [`ExperimentConfig`], evaluates every sweep point
//! (in parallel), writes the CSV rows in sweep order, and writes
//! `<stem>.summary.json` next to the CSV with the resolved config, the
//! log-log fit of the primary columns and the oracle checks.

mod oracle;
mod plot;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arithmetic::{k_growth_table, k_growth_table_by_projection, l4_from_energy, EnergyReport};
use crate::caps::{
    assign_points, broad_pointwise_bound, build_cap_partition, classify_point, transversal_tuple_search,
    ClassifierConfig, DEFAULT_WEDGE_CONSTANT,
};
use crate::expsum::{CoefficientAssignment, CoefficientModel, TorusGrid};
use crate::moments::{
    decoupling_defect, growth_fit, l4_exact, moment_ratio, multilinear_average, GridPolicy, GrowthFit,
};
use crate::strichartz::{
    default_lambda_grid, epsilon_removal_check, level_set_distribution, predicted_exponent, sharpness_witness,
    space_time_samples, strichartz_ratio, Dispersion, SharpnessReport,
};
use crate::surfaces::{enumerate_quadric_lattice, enumerate_sphere_lattice, FrequencySet, IntForm, Surface};
use crate::{Complex64, Error, Result};

pub use oracle::{oracle_suite, ORACLE_SUITES};
pub use plot::{emit_plot_data, PlotData};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "CURVEMOMENTS_WORKERS";

pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_RESOLUTION: usize = 32;
pub const DEFAULT_LEVEL_COUNT: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MomentRatio,
    Decoupling,
    Multilinear,
    BroadNarrow,
    EnergyTable,
    Strichartz,
    Sharpness,
    EpsRemoval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SurfaceSpec {
    Sphere {
        n: usize,
    },
    Quadric {
        rows: Vec<Vec<i64>>,
    },
    Paraboloid {
        n: usize,
        #[serde(default)]
        dispersion: Dispersion,
    },
}

/// One experiment. The sweep holds levels `E` (sphere, quadric), radii `N`
/// or `R` (paraboloid), or cube sizes `M` (multilinear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub surface: Option<SurfaceSpec>,
    #[serde(default)]
    pub sweep: Vec<f64>,
    /// Inclusive `[lo, hi]` level range, energy tables only.
    #[serde(default)]
    pub range: Option<[i64; 2]>,
    /// Exponent `p` (or `q` for space-time kinds).
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub q0: Option<f64>,
    #[serde(default)]
    pub q1: Option<f64>,
    #[serde(default)]
    pub model: CoefficientModel,
    #[serde(default)]
    pub seed: u64,
    /// Cap scale `K` (caps of size `1/K`).
    #[serde(default)]
    pub k: Option<f64>,
    /// Cap scales `K_1 << ... << K_m`; broad-narrow runs one row per entry.
    #[serde(default)]
    pub ladder: Vec<f64>,
    #[serde(default)]
    pub wedge_constant: Option<f64>,
    /// Sphere level used by multilinear runs.
    #[serde(default)]
    pub level: Option<i64>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub grid: GridPolicy,
    pub output: PathBuf,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn as_int(v: f64, what: &str) -> Result<i64> {
    if v.fract() != 0.0 || !v.is_finite() || v.abs() > 9.0e15 {
        return Err(invalid(format!("{what} {v} is not an integer")));
    }
    Ok(v as i64)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn need_p(&self) -> Result<f64> {
        match self.p {
            Some(p) if p >= 1.0 && p.is_finite() => Ok(p),
            Some(p) => Err(invalid(format!("exponent p = {p}"))),
            None => Err(invalid(format!("{:?} needs the exponent p", self.kind))),
        }
    }

    fn need_k(&self) -> Result<f64> {
        match self.k {
            Some(k) if k >= 1.0 && k.is_finite() => Ok(k),
            Some(k) => Err(invalid(format!("cap scale K = {k}"))),
            None => Err(invalid(format!("{:?} needs the cap scale k", self.kind))),
        }
    }

    fn need_sweep(&self) -> Result<()> {
        if self.sweep.is_empty() {
            return Err(invalid("sweep is empty"));
        }
        Ok(())
    }

    fn int_sweep(&self, what: &str, min: i64) -> Result<Vec<i64>> {
        self.need_sweep()?;
        self.sweep
            .iter()
            .map(|&v| {
                let i = as_int(v, what)?;
                if i < min {
                    return Err(invalid(format!("{what} {i} < {min}")));
                }
                Ok(i)
            })
            .collect()
    }

    fn sphere_n(&self) -> Result<usize> {
        match &self.surface {
            Some(SurfaceSpec::Sphere { n }) if *n >= 2 => Ok(*n),
            Some(SurfaceSpec::Sphere { n }) => Err(invalid(format!("sphere dimension {n} < 2"))),
            _ => Err(invalid(format!("{:?} needs a sphere surface", self.kind))),
        }
    }

    fn paraboloid(&self) -> Result<(usize, &Dispersion)> {
        match &self.surface {
            Some(SurfaceSpec::Paraboloid { n, dispersion }) if *n >= 1 => Ok((*n, dispersion)),
            _ => Err(invalid(format!(
                "{:?} needs a paraboloid surface with n >= 1",
                self.kind
            ))),
        }
    }

    /// Validates kind-specific fields and fills defaults.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = self.clone();
        match c.kind {
            ExperimentKind::MomentRatio | ExperimentKind::Decoupling => {
                c.need_p()?;
                if c.kind == ExperimentKind::Decoupling {
                    c.need_k()?;
                }
                match &c.surface {
                    Some(SurfaceSpec::Sphere { .. }) => {
                        c.sphere_n()?;
                        c.int_sweep("level", 0)?;
                    }
                    Some(SurfaceSpec::Quadric { rows }) => {
                        IntForm::new(rows.clone())?;
                        c.int_sweep("level", 0)?;
                    }
                    Some(SurfaceSpec::Paraboloid { dispersion, .. }) => {
                        if matches!(dispersion, Dispersion::Alpha { .. }) {
                            return Err(invalid("moment ratios need an integer dispersion"));
                        }
                        c.paraboloid()?;
                        c.int_sweep("radius", 1)?;
                    }
                    None => return Err(invalid("missing surface")),
                }
            }
            ExperimentKind::Multilinear => {
                c.sphere_n()?;
                c.need_k()?;
                if c.level.is_none() {
                    return Err(invalid("multilinear needs a sphere level"));
                }
                c.need_sweep()?;
                if c.sweep.iter().any(|m| !(*m > 0.0)) {
                    return Err(invalid("cube sizes must be positive"));
                }
                if let Some(p) = c.p {
                    if !(p > 0.0) {
                        return Err(invalid(format!("exponent q = {p}")));
                    }
                }
                c.resolution.get_or_insert(DEFAULT_RESOLUTION);
            }
            ExperimentKind::BroadNarrow => {
                c.sphere_n()?;
                if c.ladder.is_empty() {
                    c.ladder = vec![c.need_k()?];
                }
                if c.ladder.iter().any(|k| !(*k >= 1.0)) {
                    return Err(invalid("ladder scales must be >= 1"));
                }
                c.wedge_constant.get_or_insert(DEFAULT_WEDGE_CONSTANT);
                if c.trials.get_or_insert(DEFAULT_TRIALS) == &0 {
                    return Err(invalid("trials must be positive"));
                }
            }
            ExperimentKind::EnergyTable => {
                c.sphere_n()?;
                match c.range {
                    Some([lo, hi]) if lo >= 0 && lo <= hi => {}
                    Some([lo, hi]) => return Err(invalid(format!("level range [{lo}, {hi}]"))),
                    None => {
                        c.int_sweep("level", 0)?;
                    }
                }
            }
            ExperimentKind::Strichartz | ExperimentKind::Sharpness | ExperimentKind::EpsRemoval => {
                let (n, dispersion) = c.paraboloid()?;
                c.need_p()?;
                c.int_sweep("radius", 1)?;
                if c.kind == ExperimentKind::Sharpness && !matches!(dispersion, Dispersion::Unit) {
                    return Err(invalid("sharpness sweeps use the unit dispersion"));
                }
                if c.kind == ExperimentKind::EpsRemoval {
                    if c.q1.is_none() {
                        return Err(invalid("eps-removal needs q1"));
                    }
                    c.q0.get_or_insert(2.0 * (n as f64 + 1.0) / n as f64);
                }
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl OracleCheck {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> OracleCheck {
        OracleCheck {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// In-memory CSV table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &str) -> Table {
        Table {
            header: header.split(',').map(str::to_string).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        self.rows
            .iter()
            .map(|r| {
                r[i].parse::<f64>()
                    .map_err(|_| Error::Parse(format!("{name} = {:?}", r[i])))
            })
            .collect()
    }
}

/// Log-log fit of `y` against `x` over rows with positive `y`; `None` with
/// fewer than two distinct `x` values.
pub fn fit_columns(table: &Table, x: &str, y: &str) -> Result<Option<GrowthFit>> {
    let pts: Vec<(f64, f64)> = table
        .column(x)?
        .into_iter()
        .zip(table.column(y)?)
        .filter(|(_, y)| *y > 0.0)
        .collect();
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Ok(None);
    }
    growth_fit(&pts).map(Some)
}

struct Outcome {
    table: Table,
    fit_columns: Option<(&'static str, &'static str)>,
    checks: Vec<OracleCheck>,
    extra: serde_json::Map<String, serde_json::Value>,
    side_files: Vec<(String, String)>,
}

impl Outcome {
    fn new(table: Table, fit_columns: Option<(&'static str, &'static str)>) -> Outcome {
        Outcome {
            table,
            fit_columns,
            checks: Vec::new(),
            extra: Default::default(),
            side_files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub csv: PathBuf,
    pub rows: usize,
    pub slope_x: Option<String>,
    pub slope_y: Option<String>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub checks: Vec<OracleCheck>,
    pub all_passed: bool,
    pub extra: serde_json::Value,
}

impl RunSummary {
    /// Human-readable list of failed checks.
    pub fn failure_report(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("check {} failed: {}\n", c.name, c.detail))
            .collect()
    }
}

/// Path of the JSON summary for a CSV output path.
pub fn summary_path(csv: &Path) -> PathBuf {
    sibling(csv, "summary.json")
}

fn sibling(csv: &Path, suffix: &str) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.{suffix}"))
}

/// Runs the config file at `path`; relative output paths resolve against the
/// config's directory.
pub fn run_file(path: &Path) -> Result<RunSummary> {
    let config = ExperimentConfig::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    run(&config, base)
}

/// Validates, executes and persists one experiment.
pub fn run(config: &ExperimentConfig, base_dir: &Path) -> Result<RunSummary> {
    let c = config.resolve()?;
    let mut out = match c.kind {
        ExperimentKind::MomentRatio => run_moments(&c)?,
        ExperimentKind::Decoupling => run_decoupling(&c)?,
        ExperimentKind::Multilinear => run_multilinear(&c)?,
        ExperimentKind::BroadNarrow => run_broad_narrow(&c)?,
        ExperimentKind::EnergyTable => run_energy(&c)?,
        ExperimentKind::Strichartz | ExperimentKind::Sharpness => run_strichartz(&c)?,
        ExperimentKind::EpsRemoval => run_eps_removal(&c)?,
    };
    let fit = match out.fit_columns {
        Some((x, y)) => fit_columns(&out.table, x, y)?,
        None => None,
    };
    let csv_path = if c.output.is_absolute() {
        c.output.clone()
    } else {
        base_dir.join(&c.output)
    };
    if let Some(dir) = csv_path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(&csv_path, out.table.to_csv()?)?;
    for (suffix, content) in out.side_files.drain(..) {
        fs::write(sibling(&csv_path, &suffix), content)?;
    }
    let all_passed = out.checks.iter().all(|ch| ch.passed);
    let summary = RunSummary {
        config: c,
        csv: csv_path.clone(),
        rows: out.table.rows.len(),
        slope_x: out.fit_columns.map(|f| f.0.to_string()),
        slope_y: out.fit_columns.map(|f| f.1.to_string()),
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        checks: out.checks,
        all_passed,
        extra: serde_json::Value::Object(out.extra),
    };
    fs::write(summary_path(&csv_path), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

const MOMENT_HEADER: &str = "surface,n,D,p,model,seed,grid,norm_p,norm_2,ratio,defect,exact_flag";

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

fn lattice_set(spec: &SurfaceSpec, scale: i64) -> Result<FrequencySet> {
    match spec {
        SurfaceSpec::Sphere { n } => enumerate_sphere_lattice(*n, scale),
        SurfaceSpec::Quadric { rows } => enumerate_quadric_lattice(&IntForm::new(rows.clone())?, scale),
        SurfaceSpec::Paraboloid { n, dispersion } => dispersion.frequency_set(*n, scale),
    }
}

fn run_moments(c: &ExperimentConfig) -> Result<Outcome> {
    let p = c.need_p()?;
    let spec = c.surface.clone().ok_or_else(|| invalid("missing surface"))?;
    let what = if matches!(spec, SurfaceSpec::Paraboloid { .. }) {
        "radius"
    } else {
        "level"
    };
    let scales = c.int_sweep(what, 0)?;
    let results = scales
        .par_iter()
        .map(|&s| {
            let fs = lattice_set(&spec, s)?;
            let rep = moment_ratio(&fs, &c.model, c.seed, p, &c.grid)?;
            let l4 = if p == 4.0 && fs.is_periodic() {
                Some(l4_exact(&CoefficientAssignment::from_model(&fs, &c.model, c.seed))?)
            } else {
                None
            };
            Ok((rep, l4))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(MOMENT_HEADER);
    let mut parseval_worst: f64 = 0.0;
    let mut l4_worst: Option<f64> = None;
    for (rep, l4) in &results {
        table.push(vec![
            rep.surface.clone(),
            rep.n.to_string(),
            rep.dilation.to_string(),
            rep.p.to_string(),
            rep.model.clone(),
            rep.seed.to_string(),
            rep.grid.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("x"),
            rep.norm_p.to_string(),
            rep.norm_2.to_string(),
            rep.ratio.to_string(),
            String::new(),
            flag(rep.exact),
        ]);
        parseval_worst = parseval_worst.max((rep.ratio - 1.0).abs());
        if let Some(l4) = l4 {
            let rel = (l4 - rep.norm_p).abs() / l4;
            l4_worst = Some(l4_worst.unwrap_or(0.0).max(rel));
        }
    }
    let mut out = Outcome::new(table, Some(("D", "ratio")));
    if p == 2.0 {
        out.checks.push(OracleCheck::new(
            "parseval",
            parseval_worst <= 1e-10,
            format!("max |ratio - 1| = {parseval_worst:e}"),
        ));
    }
    if let Some(w) = l4_worst {
        out.checks.push(OracleCheck::new(
            "l4-dual-path",
            w <= 1e-9,
            format!("max relative gap between grid and pair-sum L4 norms = {w:e}"),
        ));
    }
    Ok(out)
}

fn run_decoupling(c: &ExperimentConfig) -> Result<Outcome> {
    let p = c.need_p()?;
    let k = c.need_k()?;
    let spec = c.surface.clone().ok_or_else(|| invalid("missing surface"))?;
    let what = if matches!(spec, SurfaceSpec::Paraboloid { .. }) {
        "radius"
    } else {
        "level"
    };
    let scales = c.int_sweep(what, 0)?;
    let results = scales
        .par_iter()
        .map(|&s| {
            let fs = lattice_set(&spec, s)?;
            let part = build_cap_partition(fs.surface(), k)?;
            let coeffs = CoefficientAssignment::from_model(&fs, &c.model, c.seed);
            let rep = decoupling_defect(&fs, &coeffs, &part, p, &c.grid)?;
            Ok((fs, coeffs, rep))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(MOMENT_HEADER);
    let mut single_worst: Option<f64> = None;
    let mut p2_worst: f64 = 0.0;
    for (fs, coeffs, rep) in &results {
        let norm_2 = coeffs.l2_norm();
        table.push(vec![
            fs.surface().tag().to_string(),
            fs.spatial_dim().to_string(),
            fs.dilation().to_string(),
            p.to_string(),
            coeffs.model().to_string(),
            coeffs.seed().to_string(),
            rep.grid.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("x"),
            rep.lhs.to_string(),
            norm_2.to_string(),
            (rep.lhs / norm_2).to_string(),
            rep.defect.to_string(),
            flag(rep.exact),
        ]);
        p2_worst = p2_worst.max((rep.defect - 1.0).abs());
        if rep.caps == 1 {
            single_worst = Some(single_worst.unwrap_or(0.0).max((rep.defect - 1.0).abs()));
        }
    }
    let mut out = Outcome::new(table, Some(("D", "defect")));
    if p == 2.0 {
        out.checks.push(OracleCheck::new(
            "p2-orthogonality",
            p2_worst <= 1e-10,
            format!("max |defect - 1| = {p2_worst:e}"),
        ));
    }
    if let Some(w) = single_worst {
        out.checks.push(OracleCheck::new(
            "single-cap",
            w <= 1e-10,
            format!("max |defect - 1| over single-cap rows = {w:e}"),
        ));
    }
    out.extra.insert("delta".into(), (1.0 / k).into());
    Ok(out)
}

fn run_multilinear(c: &ExperimentConfig) -> Result<Outcome> {
    let n = c.sphere_n()?;
    let k = c.need_k()?;
    let level = c.level.ok_or_else(|| invalid("missing level"))?;
    let resolution = c.resolution.unwrap_or(DEFAULT_RESOLUTION);
    let fs = enumerate_sphere_lattice(n, level)?;
    let part = build_cap_partition(fs.surface(), k)?;
    let groups = assign_points(&part, &fs)?;
    let normals: Vec<(usize, Vec<f64>)> = groups.keys().map(|&a| (a, part.caps()[a].center.clone())).collect();
    let tuple = transversal_tuple_search(&normals, n, 0.0)
        .ok_or_else(|| invalid(format!("no {n} transversal occupied caps at K = {k}")))?;
    let coeffs = CoefficientAssignment::from_model(&fs, &c.model, c.seed);
    let amp: BTreeMap<_, _> = coeffs.iter().map(|(f, a)| (f.clone(), *a)).collect();
    let mut sets = Vec::new();
    let mut amps = Vec::new();
    for alpha in &tuple.indices {
        let members = &groups[alpha];
        sets.push(members.iter().map(|f| fs.unit_point(f)).collect::<Vec<_>>());
        amps.push(
            members
                .iter()
                .map(|f| amp.get(f).copied().unwrap_or_default())
                .collect::<Vec<Complex64>>(),
        );
    }
    let reports = c
        .sweep
        .par_iter()
        .map(|&m| multilinear_average(&sets, &amps, m, resolution, c.p))
        .collect::<Result<Vec<_>>>()?;
    let caps_label = tuple
        .indices
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    let mut table = Table::new("n,M,q,caps,lhs,rhs,ratio");
    for (m, r) in c.sweep.iter().zip(&reports) {
        table.push(vec![
            n.to_string(),
            m.to_string(),
            r.q.to_string(),
            caps_label.clone(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.ratio.to_string(),
        ]);
    }
    let finite = reports.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0);
    let mut out = Outcome::new(table, Some(("M", "ratio")));
    out.checks.push(OracleCheck::new(
        "finite-ratio",
        finite,
        "every ratio finite and positive",
    ));
    out.extra.insert("wedge".into(), tuple.wedge.into());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroadNarrowStats {
    pub n: usize,
    pub k: f64,
    pub trials: usize,
    pub broad: usize,
    pub narrow: usize,
    /// Broad trials with `lhs > rhs`.
    pub violations: usize,
    /// Largest `lhs / rhs` over broad trials.
    pub max_ratio: f64,
}

/// Random cap-sum configurations on the unit sphere at scale `K`: at most
/// `K^{n-1}` caps carry a nonzero sum, with magnitudes `u^3` and uniform
/// phases. Each one is classified, and broad ones are checked against the
/// pointwise bound.
pub fn broad_narrow_trials(
    n: usize,
    k: f64,
    trials: usize,
    seed: u64,
    config: &ClassifierConfig,
) -> Result<BroadNarrowStats> {
    let part = build_cap_partition(&Surface::sphere(n), k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k.to_bits());
    let limit = (k.powi(n as i32 - 1).floor() as usize).clamp(1, part.len());
    let mut ids: Vec<usize> = (0..part.len()).collect();
    let mut stats = BroadNarrowStats {
        n,
        k,
        trials,
        broad: 0,
        narrow: 0,
        violations: 0,
        max_ratio: 0.0,
    };
    for _ in 0..trials {
        let count = rng.random_range(1..=limit);
        for i in 0..count {
            let j = rng.random_range(i..ids.len());
            ids.swap(i, j);
        }
        let mut sums = BTreeMap::new();
        let mut normals = BTreeMap::new();
        for &alpha in &ids[..count] {
            let mag = rng.random::<f64>().powi(3) + f64::MIN_POSITIVE;
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            sums.insert(alpha, Complex64::from_polar(mag, phase));
            normals.insert(alpha, part.caps()[alpha].center.clone());
        }
        let cls = classify_point(&sums, &normals, k, n, config)?;
        if cls.is_broad() {
            stats.broad += 1;
            let b = broad_pointwise_bound(&sums, &cls, k, n)?;
            if b.lhs > b.rhs {
                stats.violations += 1;
            }
            stats.max_ratio = stats.max_ratio.max(b.lhs / b.rhs);
        } else {
            stats.narrow += 1;
        }
    }
    Ok(stats)
}

fn run_broad_narrow(c: &ExperimentConfig) -> Result<Outcome> {
    let n = c.sphere_n()?;
    let cfg = ClassifierConfig {
        wedge_constant: c.wedge_constant.unwrap_or(DEFAULT_WEDGE_CONSTANT),
    };
    let trials = c.trials.unwrap_or(DEFAULT_TRIALS);
    let stats = c
        .ladder
        .par_iter()
        .map(|&k| broad_narrow_trials(n, k, trials, c.seed, &cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new("n,K,trials,broad,narrow,violations,max_lhs_over_rhs");
    for s in &stats {
        table.push(vec![
            s.n.to_string(),
            s.k.to_string(),
            s.trials.to_string(),
            s.broad.to_string(),
            s.narrow.to_string(),
            s.violations.to_string(),
            s.max_ratio.to_string(),
        ]);
    }
    let exclusive = stats.iter().all(|s| s.broad + s.narrow == s.trials);
    let violations: usize = stats.iter().map(|s| s.violations).sum();
    let mut out = Outcome::new(table, None);
    out.checks.push(OracleCheck::new(
        "total-exclusive",
        exclusive,
        "broad + narrow = trials",
    ));
    out.checks.push(OracleCheck::new(
        "broad-bound",
        violations == 0,
        format!("{violations} broad trials exceed the pointwise bound"),
    ));
    Ok(out)
}

/// Largest level for which energy tables are re-derived by the plane-section route.
const PROJECTION_CHECK_MAX_LEVEL: i64 = 2000;
/// Largest point count for which the `L^4` energy bound is checked per row.
const L4_CHECK_MAX_POINTS: usize = 2000;

fn run_energy(c: &ExperimentConfig) -> Result<Outcome> {
    let n = c.sphere_n()?;
    let levels: Vec<i64> = match c.range {
        Some([lo, hi]) => (lo..=hi).collect(),
        None => c.int_sweep("level", 0)?,
    };
    let table = k_growth_table(n, levels.iter().copied())?;
    let mut rows = Table::new(EnergyReport::CSV_HEADER);
    for r in &table.rows {
        let arg = r
            .argmax_nonzero
            .as_ref()
            .map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
        rows.push(vec![
            r.n.to_string(),
            r.energy.map(|e| e.to_string()).unwrap_or_default(),
            r.r.to_string(),
            r.k_all.to_string(),
            r.k_nonzero.to_string(),
            arg.unwrap_or_default(),
        ]);
    }
    let mut out = Outcome::new(rows, Some(("E", "K_nonzero")));
    out.extra.insert("max_k_nonzero".into(), table.max_k_nonzero.into());
    if n == 2 {
        out.checks.push(OracleCheck::new(
            "two-circle-bound",
            table.max_k_nonzero <= 2,
            format!("max K_nonzero = {}", table.max_k_nonzero),
        ));
    }
    if n == 3 && levels.iter().all(|&e| e <= PROJECTION_CHECK_MAX_LEVEL) {
        let other = k_growth_table_by_projection(levels.iter().copied())?;
        let mismatches: Vec<String> = table
            .rows
            .iter()
            .zip(&other.rows)
            .filter(|(a, b)| a != b)
            .map(|(a, b)| format!("E={:?}: pairs {} vs sections {}", a.energy, a.csv_row(), b.csv_row()))
            .collect();
        out.checks.push(OracleCheck::new(
            "projection-route",
            mismatches.is_empty(),
            if mismatches.is_empty() {
                "tables identical".to_string()
            } else {
                mismatches.join("; ")
            },
        ));
    }
    let violations = levels
        .par_iter()
        .map(|&e| {
            let fs = enumerate_sphere_lattice(n, e)?;
            if fs.is_empty() || fs.len() > L4_CHECK_MAX_POINTS {
                return Ok(0);
            }
            let coeffs = CoefficientAssignment::from_model(&fs, &CoefficientModel::RandomPhase, c.seed ^ e as u64);
            let (bound, actual) = l4_from_energy(&coeffs, &fs)?;
            Ok(usize::from(actual > bound * (1.0 + 1e-9)))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();
    out.checks.push(OracleCheck::new(
        "l4-energy-bound",
        violations == 0,
        format!("{violations} random-phase draws exceed (K_nonzero + 1)^(1/4) ||a||_2"),
    ));
    Ok(out)
}

fn quadruple_count(r: i64) -> u64 {
    let mut count = 0;
    for a in -(r - 1)..r {
        for b in -(r - 1)..r {
            for c in -(r - 1)..r {
                let d = a + b - c;
                if d.abs() < r && a * a + b * b == c * c + d * d {
                    count += 1;
                }
            }
        }
    }
    count
}

fn run_strichartz(c: &ExperimentConfig) -> Result<Outcome> {
    let (n, dispersion) = c.paraboloid()?;
    let q = c.need_p()?;
    let radii = c.int_sweep("radius", 1)?;
    let (rows, model) = if c.kind == ExperimentKind::Sharpness {
        (sharpness_witness(n, &radii, q, &c.grid)?.rows, CoefficientModel::Unit)
    } else {
        let rows = radii
            .par_iter()
            .map(|&r| strichartz_ratio(n, r, q, &c.model, c.seed, dispersion, &c.grid))
            .collect::<Result<Vec<_>>>()?;
        (rows, c.model.clone())
    };
    let predicted = predicted_exponent(n, q);
    let mut table = Table::new(SharpnessReport::CSV_HEADER);
    for row in &rows {
        table.push(vec![
            n.to_string(),
            row.dilation.to_string(),
            q.to_string(),
            row.model.clone(),
            row.seed.to_string(),
            row.ratio.to_string(),
            predicted.to_string(),
            String::new(),
        ]);
    }
    let fit = fit_columns(&table, "R", "ratio")?;
    let slope = fit.map(|f| f.slope.to_string()).unwrap_or_default();
    for row in &mut table.rows {
        row[7] = slope.clone();
    }
    let mut out = Outcome::new(table, Some(("R", "ratio")));
    out.extra.insert("predicted_exponent".into(), predicted.into());
    let integer = !matches!(dispersion, Dispersion::Alpha { .. });
    if q == 2.0 && integer {
        let worst = rows.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
        out.checks.push(OracleCheck::new(
            "space-time-parseval",
            worst <= 1e-10,
            format!("max |ratio - 1| = {worst:e}"),
        ));
    }
    if n == 1 && q == 4.0 && matches!(dispersion, Dispersion::Unit) && model == CoefficientModel::Unit {
        let mut worst: f64 = 0.0;
        for (row, &r) in rows.iter().zip(&radii) {
            if r <= 32 {
                let expected = quadruple_count(r) as f64 / ((2 * r - 1) * (2 * r - 1)) as f64;
                worst = worst.max((row.ratio.powi(4) - expected).abs());
            }
        }
        out.checks.push(OracleCheck::new(
            "quadruple-count",
            worst <= 1e-9,
            format!("max |ratio^4 - quadruples / N^2| = {worst:e}"),
        ));
    }
    Ok(out)
}

fn run_eps_removal(c: &ExperimentConfig) -> Result<Outcome> {
    let (n, dispersion) = c.paraboloid()?;
    let q = c.need_p()?;
    let q1 = c.q1.ok_or_else(|| invalid("missing q1"))?;
    let q0 = c.q0.unwrap_or(2.0 * (n as f64 + 1.0) / n as f64);
    let radii = c.int_sweep("radius", 1)?;
    let form = dispersion.form(n)?;
    let results = radii
        .par_iter()
        .map(|&r| {
            let fs = dispersion.frequency_set(n, r)?;
            let coeffs = CoefficientAssignment::from_model(&fs, &c.model, c.seed);
            let qmax = coeffs
                .frequencies()
                .iter()
                .map(|f| form.eval(&f.spatial).abs().ceil() as i64)
                .max()
                .unwrap_or(0);
            let mut max_abs = vec![r - 1; n];
            max_abs.push(qmax);
            let dims = match &c.grid {
                GridPolicy::Explicit(d) => d.clone(),
                GridPolicy::Auto => TorusGrid::non_aliased(&max_abs, q.max(2.0)).dims().to_vec(),
            };
            let samples = space_time_samples(&coeffs, &form, &dims)?;
            let rec = epsilon_removal_check(&samples, n, r as f64, q, q0, q1)?;
            let lambdas = default_lambda_grid(&samples, r as f64, n, DEFAULT_LEVEL_COUNT);
            let levels = level_set_distribution(&samples, &lambdas, r as f64, n, q1)?;
            Ok((rec, levels))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new("n,R,q,q0,q1,theta,lhs,term1,term2,holds");
    let mut out_files = Vec::new();
    for (r, (rec, levels)) in radii.iter().zip(&results) {
        table.push(vec![
            n.to_string(),
            r.to_string(),
            q.to_string(),
            q0.to_string(),
            q1.to_string(),
            rec.theta.to_string(),
            rec.lhs.to_string(),
            rec.term1.to_string(),
            rec.term2.to_string(),
            flag(rec.holds),
        ]);
        out_files.push((format!("levels-R{r}.csv"), levels.to_csv()));
    }
    let failed = results.iter().filter(|(rec, _)| !rec.holds).count();
    let mut out = Outcome::new(table, None);
    out.side_files = out_files;
    out.checks.push(OracleCheck::new(
        "split-inequality",
        failed == 0,
        format!("{failed} fields violate lhs <= term1 + term2"),
    ));
    let constants: Vec<serde_json::Value> = results.iter().map(|(_, l)| l.fitted_constant.into()).collect();
    out.extra.insert("level_set_constants".into(), constants.into());
    Ok(out)
}
