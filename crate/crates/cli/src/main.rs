//! `capmom`: capacitance of rectangular-panel conductors by the method of moments.
//!
//! Exit status: 0 success, 1 usage or input error, 2 numerical failure,
//! 3 kernel verification failure.

use std::path::PathBuf;
use std::process::ExitCode;

use capmom::experiments::{run, Outcome, RunConfig, Scenario};
use capmom::kernels::KernelTier;
use capmom::oracle::CaseGroup;
use capmom::Error;
use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    ParallelPlate,
    Cube,
    Square,
    Custom,
    Verify,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Scenario {
        match s {
            ScenarioArg::ParallelPlate => Scenario::ParallelPlate,
            ScenarioArg::Cube => Scenario::Cube,
            ScenarioArg::Square => Scenario::Square,
            ScenarioArg::Custom => Scenario::Custom,
            ScenarioArg::Verify => Scenario::Verify,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TierArg {
    Point,
    Double,
    Quad,
}

impl From<TierArg> for KernelTier {
    fn from(t: TierArg) -> KernelTier {
        match t {
            TierArg::Point => KernelTier::PointCharge,
            TierArg::Double => KernelTier::CenterCollocation,
            TierArg::Quad => KernelTier::GalerkinQuadruple,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "capmom", version, about = "Method-of-moments capacitance solver")]
struct Cli {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,

    /// Tiles per side for a single run.
    #[arg(long, conflicts_with = "n_sweep")]
    n: Option<usize>,

    /// Comma-separated, strictly increasing tiles-per-side values.
    #[arg(long, value_delimiter = ',')]
    n_sweep: Option<Vec<usize>>,

    /// Coupling tier; parallel-plate runs all three when omitted.
    #[arg(long, value_enum)]
    tier: Option<TierArg>,

    /// Plate width (m).
    #[arg(long)]
    width: Option<f64>,

    /// Plate depth (m).
    #[arg(long)]
    depth: Option<f64>,

    /// Plate separation (m).
    #[arg(long)]
    gap: Option<f64>,

    /// Cube edge or square side (m).
    #[arg(long)]
    edge: Option<f64>,

    /// Geometry JSON for the custom scenario.
    #[arg(long)]
    geometry: Option<PathBuf>,

    /// Directory for CSV and JSON artifacts.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Memory allowed for the dense system.
    #[arg(long, default_value_t = 4.0)]
    memory_cap_gib: f64,
}

impl Cli {
    fn into_config(self) -> Result<RunConfig, Error> {
        let mut c = RunConfig::new(self.scenario.into());
        if let Some(n) = self.n {
            c.n_sweep = vec![n];
        }
        if let Some(sweep) = self.n_sweep {
            c.n_sweep = sweep;
        }
        if let Some(t) = self.tier {
            c.tiers = vec![t.into()];
        }
        c.width = self.width.unwrap_or(c.width);
        c.depth = self.depth.unwrap_or(c.depth);
        c.gap = self.gap.unwrap_or(c.gap);
        c.edge = self.edge.unwrap_or(c.edge);
        c.geometry = self.geometry;
        c.out_dir = self.out;
        c.seed = self.seed;
        if !(self.memory_cap_gib > 0.0 && self.memory_cap_gib.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "memory cap must be positive, got {} GiB",
                self.memory_cap_gib
            )));
        }
        c.memory_cap_bytes = (self.memory_cap_gib * (1u64 << 30) as f64) as u64;
        c.validate()?;
        Ok(c)
    }
}

fn report(outcome: &Outcome) {
    match outcome {
        Outcome::ParallelPlate(r) => {
            println!("ideal eps0*A/d = {:.6e} F", r.ideal_capacitance_farads);
            for s in &r.sweeps {
                for rec in &s.records {
                    let flag = if s.tier == KernelTier::PointCharge && r.flagged_point_n.contains(&rec.n) {
                        " (flagged)"
                    } else {
                        ""
                    };
                    println!(
                        "{:>6} n={:<4} tiles={:<6} C={:.9e} F{flag}",
                        s.tier, rec.n, rec.tile_count, rec.capacitance_farads
                    );
                }
            }
        }
        Outcome::Cube(r) => {
            for (rec, err) in r.sweep.records.iter().zip(&r.relative_errors) {
                println!(
                    "n={:<4} tiles={:<6} C={:.9e} F  C/4pi eps0={:.6}  vs {:.6}: {:+.3}%",
                    rec.n,
                    rec.tile_count,
                    rec.capacitance_farads,
                    rec.capacitance_normalized,
                    r.reference_normalized,
                    err * 100.0
                );
            }
        }
        Outcome::Square(r) => {
            println!(
                "{}x{} square, {} tier: C={:.9e} F  C/4pi eps0={:.6}, {} distinct charge values",
                r.n, r.n, r.tier, r.capacitance_farads, r.capacitance_normalized, r.distinct_values
            );
            for g in &r.groups {
                println!(
                    "  {:>2}: {:>2} tiles  q={:.9e} C  spread={:.1e}",
                    g.label, g.population, g.mean_charge, g.relative_spread
                );
            }
        }
        Outcome::Custom(r) => {
            println!(
                "{} tiles, {} tier: C={:.9e} F  C/4pi eps0={:.6}  residual={:.1e}",
                r.tiles, r.tier, r.capacitance_farads, r.capacitance_normalized, r.residual
            );
        }
        Outcome::Verify(r) => {
            for group in [
                CaseGroup::SeparatedParallel,
                CaseGroup::SeparatedCoplanar,
                CaseGroup::SeparatedPerpendicular,
                CaseGroup::TouchingOrSelf,
            ] {
                let (passed, total) = r.count(group);
                println!(
                    "{:<24} {passed}/{total} passed, max relative error {:.2e}",
                    serde_json::to_value(group).unwrap().as_str().unwrap_or_default(),
                    r.max_relative_error(group)
                );
            }
            for c in r.failures() {
                eprintln!(
                    "FAIL case {} ({:?}): analytic {:.15e} oracle {:.15e} bound {:.1e}",
                    c.case_id, c.relation, c.analytic, c.oracle, c.error_bound
                );
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let config = match cli.into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(&config) {
        Ok(outcome) => {
            report(&outcome);
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: kernel verification failed");
                ExitCode::from(EXIT_VERIFICATION)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE })
        }
    }
}
