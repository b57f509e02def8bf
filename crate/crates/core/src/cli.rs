//! Command-line front end.
//!
//! Every flag may also be given in a TOML file passed with `--config`, using
//! the flag name with dashes replaced by underscores; the command line wins.
//! Exit codes: 0 success, 1 a verification check failed, 2 usage or
//! configuration error, 3 unreadable or malformed input, 4 numerical failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::cross_section::{CrossSection, GeometryReport};
use crate::error::{Error, Result};
use crate::estimates::{compactness_convergent, compactness_divergent, optimality_scan};
use crate::families::{boosted_round, inverse_harmonic, random_section, rng_for, RandomSpec};
use crate::flow::{self, FlowConfig};
use crate::io::{read_section, to_json, write_text, SectionFile};
use crate::lorentz::{apply_to_section, balance, boost_toward, LorentzMatrix};
use crate::suites::{run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "lightcone", version, about = "Spacelike cross sections of the Minkowski lightcone")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file supplying values for any flag
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Also write the main result to stdout
    #[arg(long, global = true)]
    pub print: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a section file from one of the built-in families
    Generate(GenerateArgs),
    /// Report the geometry of a section
    Analyze(AnalyzeArgs),
    /// Apply a Lorentz transformation to a section
    Boost(BoostArgs),
    /// Boost a section until its first moments vanish
    Balance(IoArgs),
    /// Run the null mean curvature flow
    Flow(FlowArgs),
    /// Run a seeded verification suite
    Verify(VerifyArgs),
    /// Sample F_C along ω_s = 1/(1 + s Y_l^m)
    Optimality(OptimalityArgs),
    /// Convergent or divergent sequence of nearly round sections
    Compactness(CompactnessArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Round,
    BoostedRound,
    Perturbed,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Convergent,
    Divergent,
}

#[derive(Debug, Args)]
pub struct IoArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    #[arg(long)]
    pub bandlimit: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// radius ρ of the (boosted) round sphere
    #[arg(long)]
    pub rho: Option<f64>,
    /// boost vector a⃗ as `x,y,z`
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub boost: Option<Vec<f64>>,
    /// degree of the perturbing harmonic
    #[arg(long)]
    pub l: Option<usize>,
    /// order of the perturbing harmonic
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<i64>,
    /// perturbation size in `1/(1 + s Y_l^m)`
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// amplitude c of random sections `exp(c u)`
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// section to measure the W^{2,2} distance against, instead of ω_Z
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoostArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// boost vector a⃗ as `x,y,z`
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub boost: Option<Vec<f64>>,
    /// rotation applied before the boost, as `axis_x,axis_y,axis_z,angle`
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rotate: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// final section
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// time series
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub normalized: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_parser = ["identities", "inequalities", "equivariance", "all"])]
    pub suite: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bandlimit: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimalityArgs {
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<i64>,
    #[arg(long)]
    pub s_max: Option<f64>,
    /// number of samples of s
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompactnessArgs {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bandlimit: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Values a config file may supply.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub kind: Option<Kind>,
    pub bandlimit: Option<usize>,
    pub seed: Option<u64>,
    pub rho: Option<f64>,
    pub boost: Option<Vec<f64>>,
    pub rotate: Option<Vec<f64>>,
    pub l: Option<usize>,
    pub m: Option<i64>,
    pub s: Option<f64>,
    pub amplitude: Option<f64>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub normalized: Option<bool>,
    pub suite: Option<String>,
    pub n: Option<usize>,
    pub c: Option<f64>,
    pub s_max: Option<f64>,
    pub mode: Option<Mode>,
    pub print: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

fn pick<T>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}

fn required<T>(cli: Option<T>, file: Option<T>, name: &str) -> Result<T> {
    cli.or(file).ok_or_else(|| Error::Config(format!("--{name} is required")))
}

fn vec3(v: Vec<f64>, name: &str) -> Result<[f64; 3]> {
    <[f64; 3]>::try_from(v).map_err(|_| Error::Config(format!("--{name} takes three components")))
}

/// Where a command's result goes.
struct Sink {
    output: Option<PathBuf>,
    print: bool,
}

impl Sink {
    fn new(output: Option<PathBuf>, print: bool) -> Result<Self> {
        if output.is_none() && !print {
            return Err(Error::Config("nothing to do: give --output or --print".into()));
        }
        if let Some(p) = &output {
            check_writable(p)?;
        }
        Ok(Self { output, print })
    }

    fn emit(&self, text: &str) -> Result<()> {
        if let Some(p) = &self.output {
            write_text(p, text)?;
            info!("wrote {}", p.display());
        }
        if self.print {
            print!("{text}");
        }
        Ok(())
    }
}

fn check_readable(p: &Path) -> Result<()> {
    if !p.is_file() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("input file {} does not exist", p.display()),
        )));
    }
    Ok(())
}

fn check_writable(p: &Path) -> Result<()> {
    let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("output directory {} does not exist", parent.display()),
        )));
    }
    Ok(())
}

fn json_line<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = to_json(value)?;
    s.push('\n');
    Ok(s)
}

fn seed_of(file: &SectionFile) -> Value {
    file.meta.get("seed").cloned().unwrap_or(Value::Null)
}

fn read_input(cli: Option<PathBuf>, cfg: &mut ConfigFile) -> Result<(CrossSection, SectionFile)> {
    let path = required(cli, cfg.input.take(), "input")?;
    check_readable(&path)?;
    info!("reading {}", path.display());
    read_section(&path)
}

fn generate(a: GenerateArgs, cfg: ConfigFile, print: bool) -> Result<i32> {
    let sink = Sink::new(a.output.or(cfg.output), print)?;
    let kind = pick(a.kind, cfg.kind, Kind::Round);
    let bandlimit = pick(a.bandlimit, cfg.bandlimit, 48);
    let seed = pick(a.seed, cfg.seed, 0);
    let mut meta = Map::new();
    meta.insert("kind".into(), serde_json::to_value(kind).expect("plain enum"));
    meta.insert("seed".into(), json!(seed));
    let section = match kind {
        Kind::Round => {
            let rho = pick(a.rho, cfg.rho, 1.0);
            if !(rho > 0.0) {
                return Err(Error::GenerationFailed(format!("radius must be positive, got {rho}")));
            }
            meta.insert("rho".into(), json!(rho));
            CrossSection::round(bandlimit, rho)?
        }
        Kind::BoostedRound => {
            let rho = pick(a.rho, cfg.rho, 1.0);
            let boost = vec3(pick(a.boost, cfg.boost, vec![0.0; 3]), "boost")?;
            if !boost.iter().all(|x| x.is_finite()) {
                return Err(Error::GenerationFailed("boost vector must be finite".into()));
            }
            meta.insert("rho".into(), json!(rho));
            meta.insert("boost".into(), json!(boost));
            boosted_round(bandlimit, rho, boost)?
        }
        Kind::Perturbed => {
            let l = pick(a.l, cfg.l, 2);
            let m = pick(a.m, cfg.m, 0);
            let s = pick(a.s, cfg.s, 0.05);
            meta.insert("l".into(), json!(l));
            meta.insert("m".into(), json!(m));
            meta.insert("s".into(), json!(s));
            inverse_harmonic(bandlimit, l, m, s).map_err(|e| match e {
                Error::SRangeTooLarge(min) => {
                    Error::GenerationFailed(format!("1 + s Y_l^m is not positive (min {min:e})"))
                }
                e => e,
            })?
        }
        Kind::Random => {
            let spec = RandomSpec {
                bandlimit,
                amplitude: pick(a.amplitude, cfg.amplitude, RandomSpec::default().amplitude),
                ..RandomSpec::default()
            };
            meta.insert("amplitude".into(), json!(spec.amplitude));
            meta.insert("l_gen".into(), json!(spec.l_gen));
            random_section(&spec, &mut rng_for(seed, 0))?
        }
    };
    info!("generated {kind:?} section at bandlimit {bandlimit}");
    sink.emit(&SectionFile::new(&section, meta).to_json()?)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Echo<T> {
    seed: Value,
    #[serde(flatten)]
    body: T,
}

fn analyze(a: AnalyzeArgs, mut cfg: ConfigFile, print: bool) -> Result<i32> {
    let sink = Sink::new(a.output.or(cfg.output.take()), print)?;
    let reference = a.reference.or(cfg.reference.take());
    if let Some(r) = &reference {
        check_readable(r)?;
    }
    let (section, file) = read_input(a.input, &mut cfg)?;
    let reference = reference.map(|p| read_section(&p).map(|(s, _)| s)).transpose()?;
    let report = GeometryReport::of(&section, reference.as_ref())?;
    sink.emit(&json_line(&Echo {
        seed: seed_of(&file),
        body: report,
    })?)?;
    Ok(EXIT_OK)
}

fn lorentz_from(boost: Option<Vec<f64>>, rotate: Option<Vec<f64>>) -> Result<LorentzMatrix> {
    let mut lambda = LorentzMatrix::identity();
    if let Some(r) = rotate {
        if r.len() != 4 {
            return Err(Error::Config("--rotate takes axis_x,axis_y,axis_z,angle".into()));
        }
        lambda = LorentzMatrix::rotation([r[0], r[1], r[2]], r[3])?;
    }
    if let Some(b) = boost {
        lambda = boost_toward(vec3(b, "boost")?) * lambda;
    }
    Ok(lambda)
}

fn boost(a: BoostArgs, mut cfg: ConfigFile, print: bool) -> Result<i32> {
    let sink = Sink::new(a.output.or(cfg.output.take()), print)?;
    let lambda = lorentz_from(a.boost.or(cfg.boost.take()), a.rotate.or(cfg.rotate.take()))?;
    let (section, file) = read_input(a.input, &mut cfg)?;
    let mapped = apply_to_section(&lambda, &section)?;
    let mut meta = Map::new();
    meta.insert("seed".into(), seed_of(&file));
    meta.insert("lambda".into(), json!(lambda.row_major()));
    sink.emit(&SectionFile::new(&mapped, meta).to_json()?)?;
    Ok(EXIT_OK)
}

fn balance_cmd(a: IoArgs, mut cfg: ConfigFile, print: bool) -> Result<i32> {
    let sink = Sink::new(a.output.or(cfg.output.take()), print)?;
    let (section, file) = read_input(a.input, &mut cfg)?;
    let b = balance(&section)?;
    info!("balanced in {} iterations, residual {:e}", b.iterations, b.residual);
    let mut meta = Map::new();
    meta.insert("seed".into(), seed_of(&file));
    meta.insert("lambda".into(), json!(b.lambda.row_major()));
    meta.insert("iterations".into(), json!(b.iterations));
    meta.insert("residual".into(), json!(b.residual));
    sink.emit(&SectionFile::new(&b.section, meta).to_json()?)?;
    Ok(EXIT_OK)
}

fn flow_cmd(a: FlowArgs, mut cfg: ConfigFile, print: bool) -> Result<i32> {
    let output = a.output.or(cfg.output.take());
    let csv = a.csv.or(cfg.csv.take());
    if output.is_none() && csv.is_none() && !print {
        return Err(Error::Config("nothing to do: give --output, --csv or --print".into()));
    }
    for p in output.iter().chain(csv.iter()) {
        check_writable(p)?;
    }
    let defaults = FlowConfig::default();
    let config = FlowConfig {
        dt_initial: pick(a.dt, cfg.dt, defaults.dt_initial),
        t_max: pick(a.t_max, cfg.t_max, defaults.t_max),
        normalized: a.normalized || cfg.normalized.unwrap_or(false),
        ..defaults
    };
    config.validate()?;
    let (section, file) = read_input(a.input, &mut cfg)?;
    let run = flow::run(&section, &config)?;
    info!("flow stopped at t = {} after {} steps: {:?}", run.last().t, run.samples.len() - 1, run.outcome);
    let mut series = Vec::new();
    flow::write_csv(&run.samples, &mut series)?;
    let series = String::from_utf8(series).expect("CSV is ASCII");
    if let Some(p) = &csv {
        write_text(p, &series)?;
        info!("wrote {}", p.display());
    }
    if let Some(p) = &output {
        let mut meta = Map::new();
        meta.insert("seed".into(), seed_of(&file));
        meta.insert("t".into(), json!(run.last().t));
        meta.insert("outcome".into(), json!(format!("{:?}", run.outcome)));
        write_text(p, &SectionFile::new(&run.last().section, meta).to_json()?)?;
        info!("wrote {}", p.display());
    }
    if print {
        print!("{series}");
    }
    Ok(EXIT_OK)
}

fn verify(a: VerifyArgs, cfg: ConfigFile, print: bool) -> Result<i32> {
    let sink = Sink::new(a.output.or(cfg.output), print)?;
    let suite: Suite = pick(a.suite, cfg.suite, "all".into()).parse()?;
    let n = pick(a.n, cfg.n, 50);
    let seed = pick(a.seed, cfg.seed, 1);
    let spec = RandomSpec {
        bandlimit: pick(a.bandlimit, cfg.bandlimit, 48),
        amplitude: cfg.amplitude.unwrap_or(RandomSpec::default().amplitude),
        ..RandomSpec::default()
    };
    info!("running {suite:?} on {n} sections, seed {seed}");
    let out = run_suite(suite, n, seed, &spec)?;
    let s = &out.summary;
    info!("{} passed, {} failed, {} flagged, max ratio {}", s.n_pass, s.n_fail, s.n_flagged, s.max_ratio);
    for c in out.checks.iter().filter(|c| c.is_failure()) {
        warn!("section {}: {} = {:e} exceeds {:e}", c.section, c.name, c.value, c.tolerance);
    }
    sink.emit(&json_line(&out)?)?;
    Ok(if out.all_passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn optimality(a: OptimalityArgs, cfg: ConfigFile, print: bool) -> Result<i32> {
    let sink = Sink::new(a.output.or(cfg.output), print)?;
    let scan = optimality_scan(
        pick(a.c, cfg.c, 2.0),
        pick(a.l, cfg.l, 2),
        pick(a.m, cfg.m, 0),
        pick(a.s_max, cfg.s_max, 1e-2),
        pick(a.n, cfg.n, 5),
    )?;
    info!(
        "F_C''(0): finite difference {}, closed form {}",
        scan.second_derivative_fd, scan.second_derivative_formula
    );
    sink.emit(&json_line(&Echo {
        seed: Value::Null,
        body: scan,
    })?)?;
    Ok(EXIT_OK)
}

fn compactness(a: CompactnessArgs, cfg: ConfigFile, print: bool) -> Result<i32> {
    let sink = Sink::new(a.output.or(cfg.output), print)?;
    let n = pick(a.n, cfg.n, 6);
    let series = match pick(a.mode, cfg.mode, Mode::Convergent) {
        Mode::Convergent => compactness_convergent(n, pick(a.seed, cfg.seed, 1), pick(a.bandlimit, cfg.bandlimit, 32))?,
        Mode::Divergent => compactness_divergent(n)?,
    };
    sink.emit(&json_line(&series)?)?;
    Ok(EXIT_OK)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Io(_) | Error::Parse(_) => EXIT_INPUT,
        _ => EXIT_NUMERICAL,
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let print = cli.print || cfg.print.take().unwrap_or(false);
    match cli.command {
        Command::Generate(a) => generate(a, cfg, print),
        Command::Analyze(a) => analyze(a, cfg, print),
        Command::Boost(a) => boost(a, cfg, print),
        Command::Balance(a) => balance_cmd(a, cfg, print),
        Command::Flow(a) => flow_cmd(a, cfg, print),
        Command::Verify(a) => verify(a, cfg, print),
        Command::Optimality(a) => optimality(a, cfg, print),
        Command::Compactness(a) => compactness(a, cfg, print),
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            exit_code(&e)
        }
    }
}
