mod commands;
mod config;
mod error;
mod manifest;
mod plot;
mod reports;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::commands::Run;
use crate::config::Config;
use crate::error::CliError;
use crate::manifest::{resolve_manifest, Artifacts, ExperimentManifest, FileDigest, TOOL};

#[derive(Parser, Debug)]
#[command(name = "snls", version, about = "Stochastic NLS experiments on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Experiment configuration; omitted sections take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `model.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Exit with status 4 when an acceptance predicate fails.
    #[arg(long)]
    check: bool,
    /// Measure descriptor (`<stem>.json` next to `<stem>.pack`) to analyse
    /// instead of sampling a fresh measure.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment.
    #[command(flatten)]
    Experiment(Experiment),
    /// Render SVG plots of JSON reports.
    Plot {
        reports: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-run the experiment recorded in a manifest and compare outputs.
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = "replay")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Deterministic truncated flow with norm tracking.
    Simulate(Common),
    /// Itô balance checks of the damped, forced equation.
    Sde(Common),
    /// Krylov–Bogoliubov stationary measure.
    Sample(Common),
    /// Inviscid sweep over decreasing α.
    Sweep(Common),
    /// Push-forward invariance of a sampled measure.
    Invariance(Common),
    /// Σ-ensemble certificates.
    Sigma(Common),
    /// Viscous-to-inviscid coupling errors.
    Coupling(Common),
    /// Laws of M and E with density bounds.
    Density(Common),
    /// Small-ball probabilities near the origin.
    Smallball(Common),
    /// Forcing-scaled measures μ^Λ.
    Scale(Common),
    /// Cumulative measure Σ 2^{-n} μ^n.
    Cumulative(Common),
    /// Galerkin convergence rate.
    Convergence(Common),
    /// Closed-form self-tests.
    Oracle(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Simulate,
    Sde,
    Sample,
    Sweep,
    Invariance,
    Sigma,
    Coupling,
    Density,
    Smallball,
    Scale,
    Cumulative,
    Convergence,
    Oracle,
}

impl Kind {
    const ALL: [Kind; 13] = [
        Kind::Simulate,
        Kind::Sde,
        Kind::Sample,
        Kind::Sweep,
        Kind::Invariance,
        Kind::Sigma,
        Kind::Coupling,
        Kind::Density,
        Kind::Smallball,
        Kind::Scale,
        Kind::Cumulative,
        Kind::Convergence,
        Kind::Oracle,
    ];

    fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Sde => "sde",
            Kind::Sample => "sample",
            Kind::Sweep => "sweep",
            Kind::Invariance => "invariance",
            Kind::Sigma => "sigma",
            Kind::Coupling => "coupling",
            Kind::Density => "density",
            Kind::Smallball => "smallball",
            Kind::Scale => "scale",
            Kind::Cumulative => "cumulative",
            Kind::Convergence => "convergence",
            Kind::Oracle => "oracle",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == s)
    }

    fn execute(self, run: &mut Run) -> Result<(), CliError> {
        match self {
            Kind::Simulate => commands::simulate(run),
            Kind::Sde => commands::sde(run),
            Kind::Sample => commands::sample(run),
            Kind::Sweep => commands::sweep(run),
            Kind::Invariance => commands::invariance(run),
            Kind::Sigma => commands::sigma(run),
            Kind::Coupling => commands::coupling(run),
            Kind::Density => commands::density(run),
            Kind::Smallball => commands::smallball(run),
            Kind::Scale => commands::scale(run),
            Kind::Cumulative => commands::cumulative(run),
            Kind::Convergence => commands::convergence(run),
            Kind::Oracle => commands::oracle(run),
        }
    }
}

impl Experiment {
    fn split(&self) -> (Kind, &Common) {
        use Experiment as E;
        match self {
            E::Simulate(c) => (Kind::Simulate, c),
            E::Sde(c) => (Kind::Sde, c),
            E::Sample(c) => (Kind::Sample, c),
            E::Sweep(c) => (Kind::Sweep, c),
            E::Invariance(c) => (Kind::Invariance, c),
            E::Sigma(c) => (Kind::Sigma, c),
            E::Coupling(c) => (Kind::Coupling, c),
            E::Density(c) => (Kind::Density, c),
            E::Smallball(c) => (Kind::Smallball, c),
            E::Scale(c) => (Kind::Scale, c),
            E::Cumulative(c) => (Kind::Cumulative, c),
            E::Convergence(c) => (Kind::Convergence, c),
            E::Oracle(c) => (Kind::Oracle, c),
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

/// Run one experiment and write its manifest. Predicate failures are only
/// errors when `check` is set (always for `oracle`).
fn execute(kind: Kind, cfg: &Config, out: &Path, input: Option<&Path>, threads: usize, check: bool) -> Result<ExperimentManifest, CliError> {
    let started = Instant::now();
    let art = Artifacts::new(out, kind.name())?;
    let mut run = Run::new(cfg, input, art);
    kind.execute(&mut run)?;
    let Run { art, inputs, steps, predicates, .. } = run;
    let manifest = ExperimentManifest {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: kind.name().into(),
        config: cfg.to_text(),
        seeds: vec![cfg.model.seed],
        threads,
        inputs,
        outputs: Vec::new(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        steps,
        predicates,
    };
    let manifest = art.finish(manifest)?;
    for p in &manifest.predicates {
        println!("{:<4} {} = {:.4e} ({})", if p.pass { "ok" } else { "FAIL" }, p.name, p.value, p.rule);
    }
    if (check || kind == Kind::Oracle) && !manifest.passed() {
        let failed: Vec<&str> = manifest.predicates.iter().filter(|p| !p.pass).map(|p| p.name.as_str()).collect();
        return Err(CliError::Check(failed.join("; ")));
    }
    Ok(manifest)
}

fn experiment(kind: Kind, c: &Common) -> Result<(), CliError> {
    let text = match &c.config {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut cfg = Config::from_env(&text)?;
    if let Some(seed) = c.seed {
        cfg.model.seed = seed;
    }
    let threads = init_threads(c.threads)?;
    let m = execute(kind, &cfg, &c.out, c.input.as_deref(), threads, c.check)?;
    println!("{} artifacts written to {}", m.outputs.len(), c.out.display());
    Ok(())
}

fn plot(reports: &[PathBuf], out: &Path) -> Result<(), CliError> {
    if reports.is_empty() {
        return Ok(());
    }
    let started = Instant::now();
    let mut art = Artifacts::new(out, "plot")?;
    let mut inputs = Vec::new();
    for path in reports {
        let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_slice(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let named = value
            .get("manifest")
            .and_then(|v| v.as_str())
            .ok_or_else(|| CliError::Input(format!("{}: report names no manifest", path.display())))?;
        resolve_manifest(path, named)?;
        inputs.push(FileDigest::of(path.display().to_string(), &bytes));
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
        for (suffix, svg) in plot::render(&value).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))? {
            art.svg(&format!("{stem}{suffix}.svg"), &svg)?;
        }
    }
    let m = art.finish(ExperimentManifest {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "plot".into(),
        config: String::new(),
        seeds: Vec::new(),
        threads: 1,
        inputs,
        outputs: Vec::new(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        steps: 0,
        predicates: Vec::new(),
    })?;
    println!("{} plots written to {}", m.outputs.len(), out.display());
    Ok(())
}

/// Environment overrides are not applied: the manifest's config is complete.
fn replay(path: &Path, out: &Path, threads: Option<usize>) -> Result<(), CliError> {
    let original = ExperimentManifest::load(path)?;
    let kind = Kind::parse(&original.command)
        .ok_or_else(|| CliError::Input(format!("{}: `{}` cannot be replayed", path.display(), original.command)))?;
    let cfg = Config::parse(&original.config, Vec::new())?;
    let input = original.inputs.iter().find(|i| i.path.ends_with(".json")).map(|i| PathBuf::from(&i.path));
    let threads = init_threads(threads)?;
    let again = execute(kind, &cfg, out, input.as_deref(), threads, false)?;
    let mismatched: Vec<&str> = original
        .outputs
        .iter()
        .filter(|o| !again.outputs.iter().any(|a| a == *o))
        .map(|o| o.path.as_str())
        .collect();
    if !mismatched.is_empty() {
        return Err(CliError::Check(format!("outputs differ from the manifest: {}", mismatched.join(", "))));
    }
    println!("replay reproduced all {} outputs byte for byte", original.outputs.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Experiment(e) => {
            let (kind, common) = e.split();
            experiment(kind, common)
        }
        Command::Plot { reports, out } => plot(reports, out),
        Command::Replay { manifest, out, threads } => replay(manifest, out, *threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
