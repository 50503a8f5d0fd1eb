//! Config-driven analyses behind the `ffwb` command-line tool.
//!
//! A run reads one JSON config, builds the model on its bounding box, runs a
//! named analysis and writes `<analysis>.csv` plus `<analysis>.json` (a
//! summary `{analysis, ok, headline}`) into the output directory.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boundary::{boundary_dim_scan, commutant_structure_check, cuntz_trace_estimate};
use crate::error::{Error, Result};
use crate::ffsys::{check_ff, improper_windows, FfSystem};
use crate::hamiltonian::{assemble, assemble_from_system, is_ff_model, spectral_gap};
use crate::linalg::{CMatrix, RankPolicy, ONE, ZERO};
use crate::models::{fixture, fixtures, ModelSpec};
use crate::region::{HalfLatticeRegion, Region};
use crate::serial;
use crate::settings::Settings;
use crate::states::{greedy_ladder, localized_unit, ltqo_scan, property_f_residual, WindowState};
use crate::subspace::LocalOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    VerifyFf,
    Spectra,
    Ltqo,
    Boundary,
    Trace,
    Hereditary,
}

impl Analysis {
    pub const ALL: [Analysis; 6] =
        [Analysis::VerifyFf, Analysis::Spectra, Analysis::Ltqo, Analysis::Boundary, Analysis::Trace, Analysis::Hereditary];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::VerifyFf => "verify-ff",
            Analysis::Spectra => "spectra",
            Analysis::Ltqo => "ltqo",
            Analysis::Boundary => "boundary",
            Analysis::Trace => "trace",
            Analysis::Hereditary => "hereditary",
        }
    }

    /// CSV header of the analysis.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Analysis::VerifyFf => &["inner", "outer", "residual"],
            Analysis::Spectra => &["window", "epsilon", "min", "gap", "corank"],
            Analysis::Ltqo => &["window", "window_size", "observable_id", "norm", "corank"],
            Analysis::Boundary => &[
                "n",
                "gamma_size",
                "boundary_dim",
                "stabilized",
                "trace_estimate",
                "lower_bound",
                "lto4_injective",
                "consistent",
                "invariant_dim",
                "softest_constraint",
                "commutant_dim",
                "commutant_expected",
            ],
            Analysis::Trace => &["window", "n", "trace_estimate", "lower_bound"],
            Analysis::Hereditary => &["depth", "window", "unit_rank", "system_distance", "property_f_residual"],
        }
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Analysis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Analysis::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let known: Vec<&str> = Analysis::ALL.iter().map(|a| a.name()).collect();
            Error::Config(format!("unknown analysis '{s}' (known: {})", known.join(", ")))
        })
    }
}

/// A window written either as an explicit site list or as a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    Box { origin: Vec<i64>, extents: Vec<usize> },
    Sites(Region),
}

impl WindowSpec {
    pub fn region(&self) -> Result<Region> {
        match self {
            WindowSpec::Sites(r) => Ok(r.clone()),
            WindowSpec::Box { origin, extents } => {
                if origin.len() != extents.len() || origin.is_empty() || extents.contains(&0) {
                    return Err(Error::Config(format!("bad box origin {origin:?} extents {extents:?}")));
                }
                Ok(Region::rectangle(origin, extents))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RungSpec {
    pub window: WindowSpec,
    pub ambient: WindowSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    pub id: String,
    pub region: WindowSpec,
    #[serde(with = "serial::matrix")]
    pub matrix: CMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub analysis: Option<Analysis>,
    /// Defaults to the fixture's box when `model` names a fixture.
    #[serde(default)]
    pub bbox: Option<WindowSpec>,
    /// Windows for `ltqo`, `spectra`, `trace` and `hereditary`.
    #[serde(default)]
    pub ladder: Option<Vec<WindowSpec>>,
    /// `(Λ, Γ)` pairs for `boundary`.
    #[serde(default)]
    pub rungs: Option<Vec<RungSpec>>,
    #[serde(default)]
    pub observables: Option<Vec<ObservableSpec>>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub rank: Option<RankPolicy>,
    #[serde(default)]
    pub max_dim: Option<usize>,
    /// Seed for the random corner elements of the commutant check.
    #[serde(default)]
    pub seed: u64,
    /// Output directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn for_model(model: ModelSpec) -> Self {
        RunConfig {
            model,
            analysis: None,
            bbox: None,
            ladder: None,
            rungs: None,
            observables: None,
            tol: None,
            rank: None,
            max_dim: None,
            seed: 0,
            output: None,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn settings(&self) -> Result<Settings> {
        let mut s = Settings::default();
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("tol must be positive, got {t}")));
            }
            s.tol = t;
        }
        if let Some(r) = self.rank {
            s.rank = r;
        }
        if let Some(m) = self.max_dim {
            s.max_dim = m;
        }
        Ok(s)
    }

    pub fn bbox(&self) -> Result<Region> {
        if let Some(b) = &self.bbox {
            return b.region();
        }
        match &self.model {
            ModelSpec::Fixture { name } => Ok(fixture(name)?.bbox),
            _ => Err(Error::Config("bbox is required unless the model is a fixture".into())),
        }
    }
}

/// Command-line overrides applied on top of a config.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub analysis: Option<Analysis>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    /// Omit the `# generated …` header line of the CSV.
    pub no_timestamp: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub analysis: Analysis,
    pub ok: bool,
    pub headline: BTreeMap<String, Value>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

struct Table {
    rows: Vec<Vec<String>>,
    ok: bool,
    headline: BTreeMap<String, Value>,
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Compact window key: `[a,b)` for a chain interval, `lo..hi` corners for a
/// box and `;`-joined sites otherwise.
pub fn window_key(r: &Region) -> String {
    let site = |s: &[i64]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(":");
    match r.bounding_box() {
        None => String::new(),
        Some((lo, hi)) if r.is_box() => {
            if lo.len() == 1 {
                format!("[{},{})", lo[0], hi[0] + 1)
            } else {
                format!("{}..{}", site(&lo), site(&hi))
            }
        }
        Some(_) => r.sites().iter().map(|s| site(s)).collect::<Vec<_>>().join(";"),
    }
}

fn fitting_ladder(sys: &FfSystem, ladder: Option<&Vec<WindowSpec>>) -> Result<Vec<Region>> {
    match ladder {
        Some(l) => {
            let regions = l.iter().map(WindowSpec::region).collect::<Result<Vec<_>>>()?;
            for pair in regions.windows(2) {
                if !(pair[0].is_subset(&pair[1]) && pair[0] != pair[1]) {
                    return Err(Error::Config(format!("ladder is not increasing at {}", window_key(&pair[1]))));
                }
            }
            for w in &regions {
                sys.projector(w)?;
            }
            Ok(regions)
        }
        None => Ok(greedy_ladder(sys.windows())),
    }
}

/// Boxes of `bbox` shrunk by `k` on every side, for decreasing `k`, that are
/// stored windows with a nonzero kernel.
fn shrinking_ladder(sys: &FfSystem, bbox: &Region) -> Vec<Region> {
    let Some((lo, hi)) = bbox.bounding_box() else { return Vec::new() };
    let kmax = lo.iter().zip(&hi).map(|(a, b)| (b - a) / 2).min().unwrap_or(0);
    (0..=kmax)
        .rev()
        .filter_map(|k| {
            let origin: Vec<i64> = lo.iter().map(|a| a + k).collect();
            let extents: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1 - 2 * k) as usize).collect();
            let w = Region::rectangle(&origin, &extents);
            sys.get(&w).filter(|p| p.corank() > 0).map(|_| w)
        })
        .collect()
}

/// Rungs `Λ_n = {x ∈ bbox : x₀ < n}`, `Γ_n = {x ∈ bbox : x₀ < n + 2}` whose
/// windows are both stored.
fn default_rungs(sys: &FfSystem, bbox: &Region) -> Result<Vec<(HalfLatticeRegion, HalfLatticeRegion)>> {
    let (lo, hi) = bbox.bounding_box().ok_or_else(|| Error::Config("empty bbox".into()))?;
    if lo[0] != 0 {
        return Err(Error::Config("boundary scans need a bbox whose first coordinate starts at 0".into()));
    }
    let slab = |n: i64| {
        let mut extents: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).collect();
        extents[0] = n as usize;
        Region::rectangle(&lo, &extents)
    };
    (1..=hi[0] - 1)
        .filter(|&n| sys.get(&slab(n)).is_some() && sys.get(&slab(n + 2)).is_some())
        .map(|n| Ok((HalfLatticeRegion::new(slab(n))?, HalfLatticeRegion::new(slab(n + 2))?)))
        .collect()
}

fn default_observables(site_dim: usize, lattice_dim: usize) -> Result<Vec<(String, LocalOperator)>> {
    let site = Region::rectangle(&vec![0; lattice_dim], &vec![1; lattice_dim]);
    (0..site_dim)
        .map(|i| {
            let m = CMatrix::from_fn(site_dim, site_dim, |a, b| if a == i && b == i { ONE } else { ZERO });
            Ok((format!("proj-{i}"), LocalOperator::new(m, &site, site_dim)?))
        })
        .collect()
}

fn verify_ff(config: &RunConfig, sys: &FfSystem, bbox: &Region, settings: &Settings) -> Result<Table> {
    let report = check_ff(sys, settings.tol);
    let improper = improper_windows(sys);
    let mut headline = BTreeMap::new();
    headline.insert("windows".into(), json!(sys.len()));
    headline.insert("pairs".into(), json!(report.residuals.len()));
    headline.insert("worst_residual".into(), json!(report.worst_residual));
    headline.insert("worst_pair".into(), json!(report.worst_pair.as_ref().map(|(a, b)| [window_key(a), window_key(b)])));
    headline.insert("improper_windows".into(), json!(improper.iter().map(window_key).collect::<Vec<_>>()));
    let mut ok = report.ok;
    if let Some(q) = config.model.interaction(settings)? {
        let windows: Vec<Region> = bbox.sub_boxes();
        let model = is_ff_model(&q, &windows, settings)?;
        headline.insert("ff_model".into(), json!(model.ok));
        headline.insert("epsilon_violations".into(), json!(model.violations.iter().map(window_key).collect::<Vec<_>>()));
        ok &= model.ok;
    }
    headline.insert("tol".into(), json!(settings.tol));
    let rows = report
        .residuals
        .iter()
        .map(|r| vec![window_key(&r.pair.0), window_key(&r.pair.1), num(r.value)])
        .collect();
    Ok(Table { rows, ok, headline })
}

fn spectra(config: &RunConfig, sys: &FfSystem, settings: &Settings) -> Result<Table> {
    let ladder = fitting_ladder(sys, config.ladder.as_ref())?;
    let interaction = config.model.interaction(settings)?;
    let delta = ladder.first().cloned().ok_or_else(|| Error::Config("empty ladder".into()))?;
    let hams = ladder
        .par_iter()
        .map(|w| match &interaction {
            Some(q) => assemble(q, w, settings),
            None => assemble_from_system(sys, &delta, w, settings),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ok = true;
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    for (w, h) in ladder.iter().zip(&hams) {
        let gap = spectral_gap(h);
        ok &= h.min_eigenvalue().abs() <= h.zero_threshold();
        gaps.push(gap);
        rows.push(vec![window_key(w), num(h.epsilon()), num(h.min_eigenvalue()), num(gap), h.ground_dim().to_string()]);
    }
    let mut headline = BTreeMap::new();
    if let Some(q) = &interaction {
        let model = is_ff_model(q, &ladder, settings)?;
        headline.insert("ff_model".into(), json!(model.ok));
        headline.insert("min_spec_q".into(), json!(model.min_spec_q));
        ok &= model.ok;
    } else {
        headline.insert("generator_window".into(), json!(window_key(&delta)));
    }
    headline.insert("windows".into(), json!(ladder.len()));
    headline.insert("smallest_gap".into(), json!(gaps.iter().copied().fold(f64::INFINITY, f64::min)));
    headline.insert("ground_dims".into(), json!(hams.iter().map(|h| h.ground_dim()).collect::<Vec<_>>()));
    Ok(Table { rows, ok, headline })
}

fn ltqo(config: &RunConfig, sys: &FfSystem, bbox: &Region) -> Result<Table> {
    let ladder = match &config.ladder {
        Some(_) => fitting_ladder(sys, config.ladder.as_ref())?,
        None => shrinking_ladder(sys, bbox),
    };
    if ladder.is_empty() {
        return Err(Error::Config("no window with a nonzero kernel for the LTQO ladder".into()));
    }
    let lattice_dim = bbox.dim().unwrap_or(1);
    let observables = match &config.observables {
        Some(list) => list
            .iter()
            .map(|o| Ok((o.id.clone(), LocalOperator::new(o.matrix.clone(), &o.region.region()?, sys.site_dim())?)))
            .collect::<Result<Vec<_>>>()?,
        None => default_observables(sys.site_dim(), lattice_dim)?,
    };
    let table = ltqo_scan(sys, &observables, &ladder)?;
    let rows = table
        .rows
        .iter()
        .map(|r| vec![window_key(&r.window), r.window_size.to_string(), r.observable_id.clone(), num(r.norm), r.corank.to_string()])
        .collect();
    let last = ladder.last().expect("nonempty");
    let worst_last = table.rows.iter().filter(|r| &r.window == last).map(|r| r.norm).fold(0.0, f64::max);
    let mut headline = BTreeMap::new();
    headline.insert("largest_window".into(), json!(window_key(last)));
    headline.insert("worst_norm_largest_window".into(), json!(worst_last));
    headline.insert("coranks".into(), json!(table.coranks));
    headline.insert("unique_state_indicator".into(), json!(table.unique_state_indicator));
    Ok(Table { rows, ok: true, headline })
}

fn boundary(config: &RunConfig, sys: &FfSystem, bbox: &Region, settings: &Settings) -> Result<Table> {
    let rungs = match &config.rungs {
        Some(list) => list
            .iter()
            .map(|r| Ok((HalfLatticeRegion::new(r.window.region()?)?, HalfLatticeRegion::new(r.ambient.region()?)?)))
            .collect::<Result<Vec<_>>>()?,
        None => default_rungs(sys, bbox)?,
    };
    if rungs.is_empty() {
        return Err(Error::Config("no boundary rungs fit inside the bbox".into()));
    }
    let scan = boundary_dim_scan(sys, &rungs, settings)?;
    let commutants = rungs
        .par_iter()
        .map(|(l, _)| commutant_structure_check(sys, l.region(), config.seed, settings))
        .collect::<Result<Vec<_>>>()?;
    let mut ok = true;
    let mut rows = Vec::new();
    for (row, c) in scan.iter().zip(&commutants) {
        ok &= row.consistent && row.lto4_injective && (c.matches || c.degenerate);
        rows.push(vec![
            row.n.to_string(),
            row.gamma_size.to_string(),
            row.boundary_dim.to_string(),
            row.stabilized.to_string(),
            num(row.trace_estimate),
            num(row.lower_bound),
            row.lto4_injective.to_string(),
            row.consistent.to_string(),
            row.invariant_dim.to_string(),
            row.softest_constraint.map_or_else(String::new, num),
            c.dim.to_string(),
            c.expected.to_string(),
        ]);
    }
    let last = scan.last().expect("nonempty");
    let mut headline = BTreeMap::new();
    headline.insert("boundary_dims".into(), json!(scan.iter().map(|r| r.boundary_dim).collect::<Vec<_>>()));
    headline.insert("invariant_dims".into(), json!(scan.iter().map(|r| r.invariant_dim).collect::<Vec<_>>()));
    headline.insert("stabilized".into(), json!(last.stabilized));
    headline.insert("commutant_matches".into(), json!(commutants.iter().all(|c| c.matches || c.degenerate)));
    Ok(Table { rows, ok, headline })
}

fn trace(config: &RunConfig, sys: &FfSystem, settings: &Settings) -> Result<Table> {
    let ladder = fitting_ladder(sys, config.ladder.as_ref())?;
    let est = cuntz_trace_estimate(sys, &ladder)?;
    let ok = est.iter().all(|e| e.trace_estimate >= e.lower_bound - settings.tol && e.trace_estimate < 1.0);
    let rows = est
        .iter()
        .map(|e| vec![window_key(&e.window), e.n.to_string(), num(e.trace_estimate), num(e.lower_bound)])
        .collect();
    let mut headline = BTreeMap::new();
    headline.insert("largest_window".into(), json!(est.last().map(|e| window_key(&e.window))));
    headline.insert("trace_estimate".into(), json!(est.last().map(|e| e.trace_estimate)));
    headline.insert("lower_bound".into(), json!(est.last().map(|e| e.lower_bound)));
    Ok(Table { rows, ok, headline })
}

fn hereditary(config: &RunConfig, sys: &FfSystem, settings: &Settings) -> Result<Table> {
    let omega = WindowState::uniform_ground_state(sys)?;
    let t = localized_unit(&omega, settings)?;
    let presentation: BTreeMap<Region, _> = sys.windows().map(|w| (w.clone(), sys.projector(w).unwrap().clone())).collect();
    let ladder: Vec<Region> = match &config.ladder {
        Some(_) => fitting_ladder(sys, config.ladder.as_ref())?,
        None => t.ladder().to_vec(),
    };
    if ladder != t.ladder()[..ladder.len().min(t.ladder().len())] {
        return Err(Error::Config("hereditary ladders must be a prefix of the greedy window chain".into()));
    }
    let mut worst_distance = 0.0f64;
    for w in sys.windows() {
        worst_distance = worst_distance.max(t.unit(w)?.distance(sys.projector(w)?)?);
    }
    let residuals = (1..=ladder.len())
        .into_par_iter()
        .map(|depth| property_f_residual(&t, &presentation, depth, settings))
        .collect::<Result<Vec<f64>>>()?;
    let mut rows = Vec::new();
    for (i, w) in ladder.iter().enumerate() {
        let unit = t.unit(w)?;
        rows.push(vec![
            (i + 1).to_string(),
            window_key(w),
            unit.rank().to_string(),
            num(unit.distance(sys.projector(w)?)?),
            num(residuals[i]),
        ]);
    }
    let worst_f = residuals.iter().copied().fold(0.0, f64::max);
    let ok = t.monotone() && worst_distance <= settings.tol && worst_f <= settings.tol.sqrt();
    let mut headline = BTreeMap::new();
    headline.insert("monotone".into(), json!(t.monotone()));
    headline.insert("monotonicity_residual".into(), json!(t.monotonicity_residual()));
    headline.insert("worst_system_distance".into(), json!(worst_distance));
    headline.insert("worst_property_f_residual".into(), json!(worst_f));
    Ok(Table { rows, ok, headline })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn render_csv(analysis: Analysis, rows: &[Vec<String>], timestamp: bool) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    if timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        out.extend_from_slice(
            format!("# generated by ffwb {} at unix time {secs}\n", env!("CARGO_PKG_VERSION")).as_bytes(),
        );
    }
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(analysis.columns()).map_err(to_err)?;
    for r in rows {
        w.write_record(r).map_err(to_err)?;
    }
    w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))
}

/// Run the configured analysis and write its CSV and JSON summary.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<RunOutcome> {
    let analysis = options
        .analysis
        .or(config.analysis)
        .ok_or_else(|| Error::Config("no analysis given in the config or on the command line".into()))?;
    let mut settings = config.settings()?;
    if let Some(t) = options.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("tol must be positive, got {t}")));
        }
        settings.tol = t;
    }
    let bbox = config.bbox()?;
    let sys = config.model.build(&bbox, &settings)?;
    let table = match analysis {
        Analysis::VerifyFf => verify_ff(config, &sys, &bbox, &settings)?,
        Analysis::Spectra => spectra(config, &sys, &settings)?,
        Analysis::Ltqo => ltqo(config, &sys, &bbox)?,
        Analysis::Boundary => boundary(config, &sys, &bbox, &settings)?,
        Analysis::Trace => trace(config, &sys, &settings)?,
        Analysis::Hereditary => hereditary(config, &sys, &settings)?,
    };
    let dir = options.out.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("ffwb-out"));
    fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
    let csv_path = dir.join(format!("{analysis}.csv"));
    let json_path = dir.join(format!("{analysis}.json"));
    write_file(&csv_path, &render_csv(analysis, &table.rows, !options.no_timestamp)?)?;
    let summary = Summary { analysis, ok: table.ok, headline: table.headline };
    let mut text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Invalid(e.to_string()))?;
    text.push('\n');
    write_file(&json_path, text.as_bytes())?;
    Ok(RunOutcome { summary, csv_path, json_path })
}

/// Run inside a thread pool of the given size.
pub fn run_with_jobs(config: &RunConfig, options: &RunOptions, jobs: Option<usize>) -> Result<RunOutcome> {
    match jobs {
        None => run(config, options),
        Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?
            .install(|| run(config, options)),
    }
}

/// Human-readable fixture table.
pub fn list_fixtures() -> String {
    let mut out = String::new();
    for f in fixtures() {
        out.push_str(&format!("{:<18} bbox {:<10} {}\n", f.name, window_key(&f.bbox), f.description));
        for (k, v) in &f.metadata {
            out.push_str(&format!("{:<18}   {k} = {v}\n", ""));
        }
    }
    out
}

/// Exit status for a finished run or an error: 0 ok, 1 verification failure,
/// 2 anything else.
pub fn exit_code(result: &Result<RunOutcome>) -> i32 {
    match result {
        Ok(o) if o.summary.ok => 0,
        Ok(_) => 1,
        Err(_) => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_config(name: &str, analysis: Analysis) -> RunConfig {
        let mut c = RunConfig::for_model(ModelSpec::Fixture { name: name.into() });
        c.analysis = Some(analysis);
        c
    }

    fn quiet(dir: &Path) -> RunOptions {
        RunOptions { out: Some(dir.to_path_buf()), no_timestamp: true, ..Default::default() }
    }

    #[test]
    fn analysis_names_round_trip() {
        for a in Analysis::ALL {
            assert_eq!(a.name().parse::<Analysis>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{a}\""));
        }
        assert!(matches!("nope".parse::<Analysis>(), Err(Error::Config(_))));
    }

    #[test]
    fn window_keys() {
        assert_eq!(window_key(&Region::interval(2, 3)), "[2,5)");
        assert_eq!(window_key(&Region::rectangle(&[0, 1], &[2, 2])), "0:1..1:2");
        let odd = Region::new(vec![vec![0], vec![2]]).unwrap();
        assert_eq!(window_key(&odd), "0;2");
    }

    #[test]
    fn window_specs_parse_both_forms() {
        let a: WindowSpec = serde_json::from_str(r#"{"origin": [0], "extents": [3]}"#).unwrap();
        let b: WindowSpec = serde_json::from_str("[[0],[1],[2]]").unwrap();
        assert_eq!(a.region().unwrap(), b.region().unwrap());
        let bad: WindowSpec = serde_json::from_str(r#"{"origin": [0], "extents": [0]}"#).unwrap();
        assert!(bad.region().is_err());
    }

    #[test]
    fn config_errors_carry_positions() {
        let err = RunConfig::from_json_str("{\n  \"model\": {\"kind\": \"fixture\", \"name\": \"aklt\"},\n  \"tol\": \"x\"\n}")
            .unwrap_err();
        let text = err.to_string();
        assert!(text.contains("line 3"), "{text}");
        let err = RunConfig::from_json_str(r#"{"model": {"kind": "fixture", "name": "aklt"}, "bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn verify_ff_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let ok = run(&fixture_config("aklt", Analysis::VerifyFf), &quiet(dir.path()));
        assert_eq!(exit_code(&ok), 0);
        let bad = run(&fixture_config("frustrated-random", Analysis::VerifyFf), &quiet(dir.path()));
        assert_eq!(exit_code(&bad), 1);
        let missing = run(&RunConfig::for_model(ModelSpec::Fixture { name: "aklt".into() }), &quiet(dir.path()));
        assert_eq!(exit_code(&missing), 2);
        let text = fs::read_to_string(ok.unwrap().csv_path).unwrap();
        assert!(text.starts_with("inner,outer,residual\n"));
    }

    #[test]
    fn every_analysis_runs_on_aklt_and_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        for a in Analysis::ALL {
            let c = fixture_config("aklt", a);
            let first = run(&c, &quiet(dir.path())).unwrap();
            let csv1 = fs::read(&first.csv_path).unwrap();
            let json1 = fs::read(&first.json_path).unwrap();
            let second = run(&c, &quiet(dir.path())).unwrap();
            assert_eq!(csv1, fs::read(&second.csv_path).unwrap(), "{a}");
            assert_eq!(json1, fs::read(&second.json_path).unwrap(), "{a}");
            assert!(first.summary.ok, "{a}: {:?}", first.summary.headline);
        }
    }

    #[test]
    fn timestamp_header_is_optional() {
        let dir = tempfile::tempdir().unwrap();
        let c = fixture_config("product", Analysis::Trace);
        let stamped = run(&c, &RunOptions { out: Some(dir.path().into()), ..Default::default() }).unwrap();
        assert!(fs::read_to_string(stamped.csv_path).unwrap().starts_with("# generated"));
    }

    #[test]
    fn default_boundary_rungs_cover_the_box() {
        let s = Settings::default();
        let prod = crate::models::product_system(
            &crate::CVector::from_vec(vec![ONE, ZERO]),
            &Region::interval(0, 6),
            &s,
        )
        .unwrap();
        let rungs = default_rungs(&prod, &Region::interval(0, 6)).unwrap();
        assert_eq!(rungs.len(), 4);
        assert_eq!(rungs[0].0.region(), &Region::interval(0, 1));
        assert_eq!(rungs[3].1.region(), &Region::interval(0, 6));
        assert!(default_rungs(&prod, &Region::interval(1, 4)).is_err());
        let aklt = crate::models::mps_system(6, &crate::models::aklt_spec(), &s).unwrap();
        let rungs = default_rungs(&aklt, &Region::interval(0, 6)).unwrap();
        assert_eq!(rungs.first().unwrap().0.region(), &Region::interval(0, 2));
    }

    #[test]
    fn ltqo_on_two_product_meet_reports_half() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&fixture_config("two-product-meet", Analysis::Ltqo), &quiet(dir.path())).unwrap();
        let worst = out.summary.headline["worst_norm_largest_window"].as_f64().unwrap();
        assert!((worst - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fixture_listing_names_all_fixtures() {
        let text = list_fixtures();
        for f in fixtures() {
            assert!(text.contains(&f.name));
        }
        assert!(text.contains("injectivity_length = 2"));
    }
}
