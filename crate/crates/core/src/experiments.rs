//! Scenario runners behind the command-line front end.
//!
//! Each runner builds its meshes, assembles and solves them, and, when
//! [`RunConfig::out_dir`] is set, writes its artifacts there:
//!
//! | scenario         | files                                                        |
//! |------------------|--------------------------------------------------------------|
//! | `parallel-plate` | `parallel_plate_<tier>.csv`, `charge_map.csv`, `summary.json` |
//! | `cube`           | `cube_<tier>.csv`, `charge_map.csv`, `summary.json`           |
//! | `square`         | `charge_map.csv`, `summary.json`                              |
//! | `custom`         | `charge_map.csv`, `summary.json`                              |
//! | `verify`         | `verify_report.json`, `summary.json`                          |
//!
//! Every artifact except the timing columns is a pure function of the
//! configuration and seed.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_cube, build_parallel_plate, build_square, GeometryFile, Mesh, Point3};
use crate::kernels::{KernelTier, PhysicalConstants};
use crate::oracle::{verify_kernels_with, CaseGroup, VerificationReport, VerifyOptions, RNG_ALGORITHM};
use crate::par::Execution;
use crate::solver::{
    assemble_with, charge_map, solve_with, AssemblyOptions, ChargeRecord, SolveOptions, SolveResult,
    DEFAULT_MEMORY_CAP,
};

/// Best available normalized capacitance of the unit cube.
pub const CUBE_REFERENCE: f64 = 0.660_678;

/// Number of coarse point-tier rows flagged as out of accuracy.
pub const FLAGGED_POINT_ROWS: usize = 5;

pub const DEFAULT_VERIFY_TRIALS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    ParallelPlate,
    Cube,
    Square,
    Custom,
    Verify,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::ParallelPlate => "parallel-plate",
            Scenario::Cube => "cube",
            Scenario::Square => "square",
            Scenario::Custom => "custom",
            Scenario::Verify => "verify",
        }
    }

    /// Sweep used when none is given.
    pub fn default_sweep(self) -> Vec<usize> {
        match self {
            Scenario::ParallelPlate => vec![4, 8, 16, 24],
            Scenario::Cube => vec![1, 2, 4, 8, 16],
            Scenario::Square => vec![6],
            Scenario::Custom | Scenario::Verify => Vec::new(),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Scenario> {
        [
            Scenario::ParallelPlate,
            Scenario::Cube,
            Scenario::Square,
            Scenario::Custom,
            Scenario::Verify,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Tiles per side for each run; strictly increasing.
    pub n_sweep: Vec<usize>,
    /// Parallel-plate sweeps run every listed tier; other scenarios use the first.
    pub tiers: Vec<KernelTier>,
    pub width: f64,
    pub depth: f64,
    pub gap: f64,
    /// Cube edge or square side.
    pub edge: f64,
    pub geometry: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub memory_cap_bytes: u64,
    pub verify_trials: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl RunConfig {
    pub fn new(scenario: Scenario) -> RunConfig {
        let tiers = if scenario == Scenario::ParallelPlate {
            KernelTier::ALL.to_vec()
        } else {
            vec![KernelTier::GalerkinQuadruple]
        };
        RunConfig {
            scenario,
            n_sweep: scenario.default_sweep(),
            tiers,
            width: 1.0,
            depth: 1.0,
            gap: 0.1,
            edge: 1.0,
            geometry: None,
            out_dir: None,
            seed: 0,
            memory_cap_bytes: DEFAULT_MEMORY_CAP,
            verify_trials: DEFAULT_VERIFY_TRIALS,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let needs_sweep = matches!(
            self.scenario,
            Scenario::ParallelPlate | Scenario::Cube | Scenario::Square
        );
        if needs_sweep && self.n_sweep.is_empty() {
            return bad("n sweep is empty".into());
        }
        if self.n_sweep.contains(&0) {
            return bad("n values must be positive".into());
        }
        if self.n_sweep.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n sweep {:?} is not strictly increasing", self.n_sweep));
        }
        if self.tiers.is_empty() {
            return bad("no kernel tier selected".into());
        }
        for (name, v) in [
            ("width", self.width),
            ("depth", self.depth),
            ("gap", self.gap),
            ("edge", self.edge),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.scenario == Scenario::Custom && self.geometry.is_none() {
            return bad("custom scenario requires a geometry file".into());
        }
        if self.scenario == Scenario::Verify && self.verify_trials == 0 {
            return bad("verify trial count must be positive".into());
        }
        Ok(())
    }

    fn tier(&self) -> KernelTier {
        self.tiers.first().copied().unwrap_or_default()
    }

    fn assembly_options(&self) -> AssemblyOptions {
        AssemblyOptions {
            constants: PhysicalConstants::default(),
            memory_cap_bytes: self.memory_cap_bytes,
            execution: self.execution,
        }
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            execution: self.execution,
            ..SolveOptions::default()
        }
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub n: usize,
    #[serde(rename = "tiles")]
    pub tile_count: usize,
    #[serde(rename = "capacitance_F")]
    pub capacitance_farads: f64,
    #[serde(rename = "capacitance_4pie0")]
    pub capacitance_normalized: f64,
    #[serde(rename = "assembly_s")]
    pub assembly_seconds: f64,
    #[serde(rename = "solve_s")]
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TierSweep {
    pub tier: KernelTier,
    pub records: Vec<ConvergenceRecord>,
}

impl TierSweep {
    pub fn at(&self, n: usize) -> Option<&ConvergenceRecord> {
        self.records.iter().find(|r| r.n == n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlateReport {
    pub sweeps: Vec<TierSweep>,
    /// `eps0 * A / gap`.
    pub ideal_capacitance_farads: f64,
    /// `n` of the point-tier rows flagged as out of accuracy.
    pub flagged_point_n: Vec<usize>,
}

impl PlateReport {
    pub fn sweep(&self, tier: KernelTier) -> Option<&TierSweep> {
        self.sweeps.iter().find(|s| s.tier == tier)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubeReport {
    pub sweep: TierSweep,
    pub reference_normalized: f64,
    /// `(C(n) - reference) / reference` per record.
    pub relative_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChargeGroup {
    pub label: String,
    pub population: usize,
    pub mean_charge: f64,
    pub mean_density: f64,
    /// `(max - min) / |mean|` of the member charges.
    pub relative_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareReport {
    pub n: usize,
    pub tier: KernelTier,
    pub capacitance_farads: f64,
    pub capacitance_normalized: f64,
    pub groups: Vec<ChargeGroup>,
    /// Number of clusters among all tile charges at relative tolerance [`DISTINCT_TOLERANCE`].
    pub distinct_values: usize,
}

/// Relative gap separating two distinct charge values.
pub const DISTINCT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CustomReport {
    pub tiles: usize,
    pub tier: KernelTier,
    pub conductors: BTreeMap<u32, f64>,
    pub conductor_charges: BTreeMap<u32, f64>,
    pub capacitance_farads: f64,
    pub capacitance_normalized: f64,
    pub residual: f64,
    pub condition_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: CaseGroup,
    pub passed: usize,
    pub total: usize,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    ParallelPlate(PlateReport),
    Cube(CubeReport),
    Square(SquareReport),
    Custom(CustomReport),
    Verify(VerificationReport),
}

impl Outcome {
    /// False only for a verification run with failing cases.
    pub fn passed(&self) -> bool {
        match self {
            Outcome::Verify(r) => r.passed(),
            _ => true,
        }
    }
}

/// Validates `config` and dispatches on its scenario.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    Ok(match config.scenario {
        Scenario::ParallelPlate => Outcome::ParallelPlate(run_parallel_plate_sweep(config)?),
        Scenario::Cube => Outcome::Cube(run_cube(config)?),
        Scenario::Square => Outcome::Square(run_maxwell_square(config)?),
        Scenario::Custom => {
            let path = config.geometry.as_deref().expect("validated");
            Outcome::Custom(run_custom(config, path)?)
        }
        Scenario::Verify => Outcome::Verify(run_verify(config)?),
    })
}

struct Solved {
    record: ConvergenceRecord,
    result: SolveResult,
}

fn solve_mesh(config: &RunConfig, mesh: &Mesh, n: usize, tier: KernelTier) -> Result<Solved> {
    let start = Instant::now();
    let matrix = assemble_with(mesh, tier, &config.assembly_options())?;
    let assembly_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let result = solve_with(matrix, mesh, &config.solve_options())?;
    let solve_seconds = start.elapsed().as_secs_f64();
    Ok(Solved {
        record: ConvergenceRecord {
            n,
            tile_count: mesh.len(),
            capacitance_farads: result.capacitance_farads,
            capacitance_normalized: result.capacitance_normalized,
            assembly_seconds,
            solve_seconds,
        },
        result,
    })
}

/// Sweeps the two-plate capacitor over `n_sweep` for every configured tier.
pub fn run_parallel_plate_sweep(config: &RunConfig) -> Result<PlateReport> {
    config.validate()?;
    let mut sweeps = Vec::with_capacity(config.tiers.len());
    let mut last_map = None;
    for &tier in &config.tiers {
        let mut records = Vec::with_capacity(config.n_sweep.len());
        for &n in &config.n_sweep {
            let mesh = build_parallel_plate(config.width, config.depth, config.gap, n)?;
            let solved = solve_mesh(config, &mesh, n, tier)?;
            records.push(solved.record);
            if tier == config.tier() {
                last_map = Some(charge_map(&solved.result, &mesh));
            }
        }
        sweeps.push(TierSweep { tier, records });
    }
    let flagged_point_n = sweeps
        .iter()
        .filter(|s| s.tier == KernelTier::PointCharge)
        .flat_map(|s| s.records.iter().take(FLAGGED_POINT_ROWS).map(|r| r.n))
        .collect();
    let report = PlateReport {
        sweeps,
        ideal_capacitance_farads: PhysicalConstants::default().epsilon_0 * config.width * config.depth
            / config.gap,
        flagged_point_n,
    };
    if let Some(dir) = &config.out_dir {
        for s in &report.sweeps {
            write_convergence_csv(&dir.join(format!("parallel_plate_{}.csv", s.tier)), &s.records)?;
        }
        if let Some(map) = &last_map {
            write_charge_map_csv(&dir.join("charge_map.csv"), map)?;
        }
        write_summary(dir, config, &report)?;
    }
    Ok(report)
}

/// Self-capacitance of the cube over `n_sweep`.
pub fn run_cube(config: &RunConfig) -> Result<CubeReport> {
    config.validate()?;
    let tier = config.tier();
    let mut records = Vec::with_capacity(config.n_sweep.len());
    let mut last_map = None;
    for &n in &config.n_sweep {
        let mesh = build_cube(config.edge, n)?;
        let solved = solve_mesh(config, &mesh, n, tier)?;
        records.push(solved.record);
        if config.out_dir.is_some() {
            last_map = Some(charge_map(&solved.result, &mesh));
        }
    }
    let relative_errors = records
        .iter()
        .map(|r| (r.capacitance_normalized / config.edge - CUBE_REFERENCE) / CUBE_REFERENCE)
        .collect();
    let report = CubeReport {
        sweep: TierSweep { tier, records },
        reference_normalized: CUBE_REFERENCE * config.edge,
        relative_errors,
    };
    if let Some(dir) = &config.out_dir {
        write_convergence_csv(&dir.join(format!("cube_{tier}.csv")), &report.sweep.records)?;
        if let Some(map) = &last_map {
            write_charge_map_csv(&dir.join("charge_map.csv"), map)?;
        }
        write_summary(dir, config, &report)?;
    }
    Ok(report)
}

/// Symmetry class of tile `(i, j)` on an `n x n` grid: distances to the
/// nearest edge in each direction, sorted.
pub fn square_symmetry_class(i: usize, j: usize, n: usize) -> (usize, usize) {
    let a = i.min(n - 1 - i);
    let b = j.min(n - 1 - j);
    (a.min(b), a.max(b))
}

fn group_label(index: usize) -> String {
    let mut s = String::new();
    let mut k = index;
    loop {
        s.insert(0, (b'A' + (k % 26) as u8) as char);
        if k < 26 {
            break s;
        }
        k = k / 26 - 1;
    }
}

/// Sorts and clusters values; a new cluster starts where consecutive
/// values differ by more than `tol` relative to the larger magnitude.
pub fn count_distinct(values: &[f64], tol: f64) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return 0;
    }
    1 + v
        .windows(2)
        .filter(|w| (w[1] - w[0]) > tol * w[0].abs().max(w[1].abs()))
        .count()
}

/// Square of side `edge` at 1 V, `n x n` tiles (first sweep entry),
/// charges grouped by symmetry class.
pub fn run_maxwell_square(config: &RunConfig) -> Result<SquareReport> {
    config.validate()?;
    let n = config.n_sweep[0];
    let tier = config.tier();
    let mesh = build_square(config.edge, n, 1.0)?;
    let solved = solve_mesh(config, &mesh, n, tier)?;
    let result = &solved.result;

    // tiles are row-major with the first in-plane index fastest
    let mut classes: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for j in 0..n {
        for i in 0..n {
            classes.entry(square_symmetry_class(i, j, n)).or_default().push(j * n + i);
        }
    }
    let groups = classes
        .values()
        .enumerate()
        .map(|(g, members)| {
            let q: Vec<f64> = members.iter().map(|&k| result.charges[k]).collect();
            let mean = q.iter().sum::<f64>() / q.len() as f64;
            let (lo, hi) = q
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            let density = members.iter().map(|&k| result.charge_densities[k]).sum::<f64>() / q.len() as f64;
            ChargeGroup {
                label: group_label(g),
                population: q.len(),
                mean_charge: mean,
                mean_density: density,
                relative_spread: (hi - lo) / mean.abs(),
            }
        })
        .collect();
    let report = SquareReport {
        n,
        tier,
        capacitance_farads: result.capacitance_farads,
        capacitance_normalized: result.capacitance_normalized,
        groups,
        distinct_values: count_distinct(&result.charges, DISTINCT_TOLERANCE),
    };
    if let Some(dir) = &config.out_dir {
        write_charge_map_csv(&dir.join("charge_map.csv"), &charge_map(result, &mesh))?;
        write_summary(dir, config, &report)?;
    }
    Ok(report)
}

/// Solves a user geometry. The conductor count is checked before assembly.
pub fn run_custom(config: &RunConfig, geometry: &Path) -> Result<CustomReport> {
    let mesh = GeometryFile::read(geometry)?.to_mesh()?;
    let found = mesh.conductors().len();
    if found > 2 {
        return Err(Error::ConductorCount { found });
    }
    let tier = config.tier();
    let solved = solve_mesh(config, &mesh, 0, tier)?;
    let result = &solved.result;
    let report = CustomReport {
        tiles: mesh.len(),
        tier,
        conductors: mesh.conductors().clone(),
        conductor_charges: result.conductor_charges.clone(),
        capacitance_farads: result.capacitance_farads,
        capacitance_normalized: result.capacitance_normalized,
        residual: result.residual,
        condition_estimate: result.condition_estimate,
    };
    if let Some(dir) = &config.out_dir {
        write_charge_map_csv(&dir.join("charge_map.csv"), &charge_map(result, &mesh))?;
        write_summary(dir, config, &report)?;
    }
    Ok(report)
}

pub fn verify_options(config: &RunConfig) -> VerifyOptions {
    VerifyOptions::new(config.verify_trials, config.seed)
}

/// Runs the kernel verification harness with `verify_trials` and `seed`.
pub fn run_verify(config: &RunConfig) -> Result<VerificationReport> {
    run_verify_with(config, &verify_options(config))
}

pub fn run_verify_with(config: &RunConfig, opts: &VerifyOptions) -> Result<VerificationReport> {
    let report = verify_kernels_with(opts);
    if let Some(dir) = &config.out_dir {
        write_json(&dir.join("verify_report.json"), &report.cases)?;
        let groups: Vec<GroupSummary> = [
            CaseGroup::SeparatedParallel,
            CaseGroup::SeparatedCoplanar,
            CaseGroup::SeparatedPerpendicular,
            CaseGroup::TouchingOrSelf,
        ]
        .into_iter()
        .map(|group| {
            let (passed, total) = report.count(group);
            GroupSummary {
                group,
                passed,
                total,
                max_relative_error: report.max_relative_error(group),
            }
        })
        .collect();
        #[derive(Serialize)]
        struct VerifySummary<'a> {
            rng: &'a str,
            seed: u64,
            options: &'a VerifyOptions,
            passed: bool,
            groups: Vec<GroupSummary>,
        }
        let summary = VerifySummary {
            rng: RNG_ALGORITHM,
            seed: report.seed,
            options: opts,
            passed: report.passed(),
            groups,
        };
        write_summary(dir, config, &summary)?;
    }
    Ok(report)
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(io_error(dir)),
        _ => Ok(()),
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_error(path))
}

fn write_summary<T: Serialize>(dir: &Path, config: &RunConfig, results: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Summary<'a, T> {
        scenario: &'a RunConfig,
        results: &'a T,
    }
    write_json(
        &dir.join("summary.json"),
        &Summary {
            scenario: config,
            results,
        },
    )
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    ensure_parent(path)?;
    let csv_error = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush().map_err(io_error(path))
}

/// Header `n,tiles,capacitance_F,capacitance_4pie0,assembly_s,solve_s`.
pub fn write_convergence_csv(path: &Path, records: &[ConvergenceRecord]) -> Result<()> {
    write_rows(path, records)
}

#[derive(Serialize)]
struct ChargeRow {
    cx: f64,
    cy: f64,
    cz: f64,
    area: f64,
    #[serde(rename = "charge_C")]
    charge: f64,
    #[serde(rename = "density_C_per_m2")]
    density: f64,
}

/// Header `cx,cy,cz,area,charge_C,density_C_per_m2`, one row per tile.
pub fn write_charge_map_csv(path: &Path, records: &[ChargeRecord]) -> Result<()> {
    write_rows(
        path,
        records.iter().map(|r| {
            let [cx, cy, cz]: Point3 = r.center;
            ChargeRow {
                cx,
                cy,
                cz,
                area: r.area,
                charge: r.charge,
                density: r.density,
            }
        }),
    )
}
