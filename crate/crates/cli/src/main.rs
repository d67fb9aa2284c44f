use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hamosc::criteria::SChoice;
use hamosc::hamsys::SystemSpec;
use hamosc::matexpr::parse_scalar_expr;
use hamosc::presets::{build_preset, PresetOptions};
use hamosc::report::{
    preset_gauge, run_check, run_example, run_oracle, Artifact, Bundle, CheckRequest, CriterionId, ExampleOptions,
    InitChoice, OracleRequest, Span,
};
use hamosc::scalarosc::ScalarMode;
use hamosc::{Error, Tolerances};

/// Oscillation criteria and numerical oracles for linear Hamiltonian systems.
#[derive(Parser)]
#[command(name = "hamosc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run criterion checks on a system.
    Check(CheckArgs),
    /// Integrate prepared solutions and record det Φ zeros.
    Oracle(OracleArgs),
    /// Run a preset's criteria together with its oracle.
    Example(ExampleArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// System spec file (JSON).
    #[arg(long, conflicts_with = "example")]
    system: Option<PathBuf>,
    /// Preset id.
    #[arg(long)]
    example: Option<String>,
    #[command(flatten)]
    preset: PresetArgs,
}

#[derive(Args)]
struct PresetArgs {
    /// ν for ex2.3.
    #[arg(long)]
    nu: Option<f64>,
    /// Dimension for ex2.3 and remark2.6.
    #[arg(long)]
    n: Option<usize>,
    /// μ(t) for ex2.4 and the Lyapunov path.
    #[arg(long)]
    mu: Option<String>,
    /// α for ex2.2.
    #[arg(long)]
    alpha: Option<f64>,
    /// β for ex2.2.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct CommonArgs {
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "KEY=VAL")]
    tol: Vec<String>,
    /// Directory for report.json and trace files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Criterion id, repeatable; default runs every criterion for the span.
    #[arg(long)]
    criterion: Vec<String>,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true, conflicts_with = "horizon")]
    interval: Option<Vec<f64>>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value = "criterion")]
    scalar_mode: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true, required = true)]
    interval: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial data: random (I, H) or identity (I, 0).
    #[arg(long, default_value = "random")]
    init: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ExampleArgs {
    /// Preset id.
    id: String,
    #[command(flatten)]
    preset: PresetArgs,
    #[arg(long)]
    scalar_mode: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    horizon: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

enum Failure {
    Config(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

impl From<String> for Failure {
    fn from(msg: String) -> Self {
        Failure::Config(msg)
    }
}

type Outcome<T> = Result<T, Failure>;

impl PresetArgs {
    fn options(&self) -> PresetOptions {
        PresetOptions {
            nu: self.nu,
            n: self.n,
            mu: self.mu.clone(),
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

fn tolerances(overrides: &[String]) -> Outcome<Tolerances> {
    let mut tol = Tolerances::default();
    for item in overrides {
        let (key, val) = item
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("--tol expects KEY=VAL, got '{item}'")))?;
        let v: f64 = val
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("--tol {key}: '{val}' is not a number")))?;
        tol.set(key.trim(), v)?;
    }
    Ok(tol)
}

fn load_system(args: &SystemArgs) -> Outcome<(SystemSpec, Option<String>)> {
    match (&args.system, &args.example) {
        (Some(path), None) => {
            let src = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let spec = SystemSpec::from_json(&src).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            Ok((spec, None))
        }
        (None, Some(id)) => Ok((build_preset(id, &args.preset.options())?, Some(id.clone()))),
        _ => Err(Failure::Config("give exactly one of --system FILE or --example ID".into())),
    }
}

fn interval(v: &[f64]) -> Outcome<[f64; 2]> {
    match v {
        [a, b] if a.is_finite() && b.is_finite() && a < b => Ok([*a, *b]),
        [a, b] => Err(Failure::Config(format!("invalid interval [{a}, {b}]: need finite a < b"))),
        _ => Err(Failure::Config("--interval takes two values".into())),
    }
}

fn cmd_check(args: &CheckArgs) -> Outcome<Bundle> {
    let tol = tolerances(&args.common.tol)?;
    let (spec, preset) = load_system(&args.system)?;
    let mode: ScalarMode = args.scalar_mode.parse()?;
    let criteria = args
        .criterion
        .iter()
        .map(|c| c.parse::<CriterionId>())
        .collect::<Result<Vec<_>, _>>()?;
    let span = match (&args.interval, args.horizon) {
        (Some(v), None) => Span::Interval(interval(v)?),
        (None, Some(h)) => Span::Horizon(h),
        (None, None) if criteria.iter().all(|c| c.is_half_line()) && !criteria.is_empty() => Span::Horizon(tol.horizon),
        _ => return Err(Failure::Config("give --interval A B or --horizon T".into())),
    };
    let gauge: Option<SChoice> = match &preset {
        Some(id) => preset_gauge(id)?,
        None => None,
    };
    let mu = args.system.preset.mu.as_deref().map(parse_scalar_expr).transpose().map_err(Error::from)?;
    let req = CheckRequest {
        criteria,
        span,
        mode,
        gauge,
        mu,
    };
    Ok(Bundle {
        report: run_check(&spec, &req, &tol)?,
        artifacts: Vec::new(),
    })
}

fn cmd_oracle(args: &OracleArgs) -> Outcome<Bundle> {
    let tol = tolerances(&args.common.tol)?;
    let (spec, _) = load_system(&args.system)?;
    let req = OracleRequest {
        interval: interval(&args.interval)?,
        trials: args.trials,
        seed: args.seed,
        init: args.init.parse::<InitChoice>()?,
    };
    Ok(run_oracle(&spec, &req, &tol)?)
}

fn cmd_example(args: &ExampleArgs) -> Outcome<Bundle> {
    let tol = tolerances(&args.common.tol)?;
    let opts = ExampleOptions {
        preset: args.preset.options(),
        mode: args.scalar_mode.as_deref().map(str::parse).transpose()?,
        trials: args.trials,
        seed: args.seed,
        horizon: args.horizon,
    };
    Ok(run_example(&args.id, &opts, &tol)?)
}

/// Write each file to a temporary name in `dir`, then rename it into place.
fn write_atomic(dir: &Path, files: &[Artifact]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for f in files {
        let tmp = dir.join(format!(".{}.tmp-{}", f.name, std::process::id()));
        {
            let mut h = fs::File::create(&tmp)?;
            h.write_all(f.contents.as_bytes())?;
            h.sync_all()?;
        }
        fs::rename(&tmp, dir.join(&f.name))?;
    }
    Ok(())
}

fn emit(bundle: Bundle, out: Option<&Path>) -> Outcome<()> {
    let files = bundle.files()?;
    print!("{}", files[0].contents);
    if let Some(dir) = out {
        write_atomic(dir, &files).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, out) = match &cli.command {
        Command::Check(a) => (cmd_check(a), a.common.out.as_deref()),
        Command::Oracle(a) => (cmd_oracle(a), a.common.out.as_deref()),
        Command::Example(a) => (cmd_example(a), a.common.out.as_deref()),
    };
    match result.and_then(|b| emit(b, out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
