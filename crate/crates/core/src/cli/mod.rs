//! The `qcausal` experiment runner.
//!
//! `qcausal <experiment> --config path.json [--out-dir d] [--verbose]`
//! reads a JSON config, runs the experiment and writes
//! `<out-dir>/<experiment>.json` (and `<experiment>.csv` where the
//! experiment produces rows). Exit status: 0 when every assertion in the
//! report passed, 1 for unreadable or invalid input, 2 when an experiment
//! assertion failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};

pub mod config;
pub mod experiments;
pub mod report;

pub use config::ExperimentConfig;
pub use experiments::check_channel;
pub use report::{emit_csv, Assertion, CsvRow, Report, SCHEMA_VERSION, TOOL_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// Schmidt, defect and sampled-Sorkin verdicts for one channel.
    CheckCausal,
    /// Second operator-Schmidt values of Haar samples.
    SampleHaar,
    /// Nearest product unitaries.
    NearestProduct,
    /// Mixtures of a causal channel with an acausal one.
    PerturbBall,
    /// The field-conjugation identity on the lattice.
    LatticeSorkin,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::CheckCausal => "check-causal",
            Experiment::SampleHaar => "sample-haar",
            Experiment::NearestProduct => "nearest-product",
            Experiment::PerturbBall => "perturb-ball",
            Experiment::LatticeSorkin => "lattice-sorkin",
        }
    }
}

#[derive(Clone, Debug, Parser)]
#[command(
    name = "qcausal",
    version,
    about = "Causality experiments for quantum channels and a lattice scalar field"
)]
pub struct Args {
    pub experiment: Experiment,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub verbose: bool,
}

/// Files written by [`run`] and whether every assertion passed.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub report: PathBuf,
    pub csv: Option<PathBuf>,
    pub passed: bool,
}

fn resolve(out_dir: &Path, explicit: Option<&Path>, default: String) -> PathBuf {
    match explicit {
        Some(p) if p.is_absolute() => p.to_path_buf(),
        Some(p) => out_dir.join(p),
        None => out_dir.join(default),
    }
}

struct Sink<'a> {
    kind: Experiment,
    out_dir: &'a Path,
    config: &'a ExperimentConfig,
    verbose: bool,
    start: Instant,
}

impl Sink<'_> {
    fn with_csv<R: Serialize, Row: CsvRow>(
        self,
        out: experiments::Outcome<R, Row>,
    ) -> Result<RunOutcome> {
        let name = self.kind.name();
        let path = resolve(
            self.out_dir,
            self.config.output_paths().1,
            format!("{name}.csv"),
        );
        emit_csv(&out.rows, &path)?;
        self.report(out.results, out.assertions, Some(path))
    }

    fn report<R: Serialize>(
        self,
        results: R,
        assertions: Vec<Assertion>,
        csv: Option<PathBuf>,
    ) -> Result<RunOutcome> {
        let name = self.kind.name();
        let path = resolve(
            self.out_dir,
            self.config.output_paths().0,
            format!("{name}.json"),
        );
        let passed = assertions.iter().all(|a| a.passed);
        if self.verbose {
            for a in &assertions {
                eprintln!(
                    "[{}] {}: {}",
                    if a.passed { "pass" } else { "FAIL" },
                    a.name,
                    a.detail
                );
            }
        }
        let report = Report {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            experiment: name,
            config: self.config,
            results,
            assertions,
            passed,
            wall_time_s: self.start.elapsed().as_secs_f64(),
        };
        report::write_json(&report, &path)?;
        Ok(RunOutcome {
            report: path,
            csv,
            passed,
        })
    }
}

/// Runs one experiment from an already parsed config.
pub fn run(
    kind: Experiment,
    config: &ExperimentConfig,
    out_dir: &Path,
    verbose: bool,
) -> Result<RunOutcome> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    if verbose {
        eprintln!("running {} with seed {}", kind.name(), config.seed());
    }
    let sink = Sink {
        kind,
        out_dir,
        config,
        verbose,
        start,
    };
    match config {
        ExperimentConfig::CheckCausal(c) => {
            let out = experiments::check_causal(c)?;
            sink.report(out.results, out.assertions, None)
        }
        ExperimentConfig::SampleHaar(c) => sink.with_csv(experiments::sample_haar(c)?),
        ExperimentConfig::NearestProduct(c) => sink.with_csv(experiments::nearest_product(c)?),
        ExperimentConfig::PerturbBall(c) => sink.with_csv(experiments::perturb_ball(c)?),
        ExperimentConfig::LatticeSorkin(c) => sink.with_csv(experiments::lattice_sorkin(c)?),
    }
}

/// Entry point behind the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = ExperimentConfig::load(args.experiment, &args.config)
        .and_then(|cfg| run(args.experiment, &cfg, &args.out_dir, args.verbose));
    match outcome {
        Ok(o) => {
            if args.verbose {
                eprintln!("report written to {}", o.report.display());
            }
            if o.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!(
                    "error: experiment assertion failed; see {}",
                    o.report.display()
                );
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
