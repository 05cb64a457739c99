//! `quadrascope`: convexity certificates, estimates and sampling oracles for
//! quadratic maps given as problem JSON.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use quadrascope::convexity::{certify, CertificateStatus, CertifyConfig, ConvexityCertificate, ScanTolerances, ZmaxConfig};
use quadrascope::definiteness::{check_direction, find_positive_direction, DefinitenessConfig};
use quadrascope::estimates::{estimate_chain, Divisor, EstimateConfig, EstimateMode};
use quadrascope::io::{self, ParsedProblem, Problem};
use quadrascope::jnr::{certify_random_lifts, certify_reduction, JnrConfig};
use quadrascope::oracle::{convexity_probe, sample_image, ProbeConfig, ProbeVerdict, Region};
use quadrascope::{seeds, support_frame, Error, QuadraticMap, SupportFrame};

#[derive(Parser, Debug)]
#[command(name = "quadrascope", version, about = "Convexity certificates for images of quadratic maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify convexity of the full image or of a slab above a supporting hyperplane.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Positive-definite direction to use instead of searching for one.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        cplus: Option<Vec<f64>>,
        /// Also report the convex-ball radius around the support point.
        #[arg(long)]
        epsilon_max: bool,
    },
    /// Cheap lower bounds on the slab convexity radius.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        cplus: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = ModeArg::Derived)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = DivisorArg::N)]
        divisor: DivisorArg,
    },
    /// Convexity of a joint numerical range by reduction or random lifts.
    JnrCertify {
        #[command(flatten)]
        common: Common,
        /// Direction whose bottom eigenvalue has multiplicity n - 1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        e: Option<Vec<f64>>,
        /// Check this many random inhomogeneous lifts instead.
        #[arg(long)]
        lifts: Option<usize>,
    },
    /// Sample image points of a region as CSV.
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        region: RegionArgs,
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// Midpoint convexity probe; exits with code 4 on a non-convexity witness.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        region: RegionArgs,
        #[arg(long, default_value_t = 500)]
        pairs: usize,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Problem JSON file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tolerance override, repeatable: kernel_tol, residual_tol,
    /// definiteness_tol, multiplicity_tol, tau.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RegionArgs {
    /// Preimage region; `jnr` is the unit sphere of a joint numerical range.
    #[arg(long, value_enum)]
    region: Option<RegionArg>,
    /// Ball radius for `full`, height for `slab` and `sphere`.
    #[arg(long)]
    z: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    cplus: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RegionArg {
    Full,
    Slab,
    Sphere,
    Jnr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Derived,
    Printed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DivisorArg {
    N,
    M,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Core(Error::NotPositiveDefinite { .. } | Error::NotPsd { .. } | Error::NotDefiniteDirection { .. }) => 3,
            Self::Numerical(_) => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Debug)]
struct Tolerances {
    scan: ScanTolerances,
    definiteness: f64,
    multiplicity: f64,
    tau: f64,
}

impl Tolerances {
    fn parse(overrides: &[String]) -> CliResult<Self> {
        let mut t = Self { scan: ScanTolerances::default(), definiteness: DefinitenessConfig::default().tol, multiplicity: 1e-8, tau: 1e-5 };
        for item in overrides {
            let (name, value) = item.split_once('=').ok_or_else(|| CliError::Usage(format!("--tol expects NAME=VALUE, got {item:?}")))?;
            let value: f64 = value.parse().ok().filter(|v: &f64| v.is_finite() && *v > 0.0).ok_or_else(|| CliError::Usage(format!("tolerance {name} needs a positive number, got {value:?}")))?;
            match name {
                "kernel_tol" => t.scan.kernel_tol = value,
                "residual_tol" => t.scan.residual_tol = value,
                "definiteness_tol" => t.definiteness = value,
                "multiplicity_tol" => t.multiplicity = value,
                "tau" => t.tau = value,
                other => return Err(CliError::Usage(format!("unknown tolerance {other:?}"))),
            }
        }
        Ok(t)
    }

    fn zmax(&self, seed: u64) -> ZmaxConfig {
        ZmaxConfig { tolerances: self.scan, seed, ..ZmaxConfig::default() }
    }

    fn certify(&self, seed: u64, c_plus: Option<Vec<f64>>, epsilon_max: bool) -> CertifyConfig {
        CertifyConfig {
            c_plus,
            definiteness: DefinitenessConfig { tol: self.definiteness, ..DefinitenessConfig::default() },
            zmax: self.zmax(seed),
            epsilon_max,
        }
    }
}

fn load(common: &Common) -> CliResult<ParsedProblem> {
    let text = std::fs::read_to_string(&common.input).map_err(|source| CliError::Read { path: common.input.clone(), source })?;
    let parsed = io::parse_problem(&text)?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed)
}

fn emit(common: &Common, text: &str) -> CliResult<()> {
    match &common.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Write { path: path.clone(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(common: &Common, value: &Value) -> CliResult<()> {
    if common.format == Some(Format::Csv) {
        return Err(CliError::Usage("this command only writes JSON".into()));
    }
    let mut text = serde_json::to_string(value).expect("JSON values serialize");
    text.push('\n');
    emit(common, &text)
}

fn frame_for(map: &QuadraticMap, c_plus: Option<&[f64]>, tols: &Tolerances, seed: u64) -> CliResult<SupportFrame> {
    let report = match c_plus {
        Some(c) => {
            if c.len() != map.m() {
                return Err(CliError::Usage(format!("--cplus has {} entries, expected {}", c.len(), map.m())));
            }
            check_direction(map.a(), c)
        }
        None => {
            let config = DefinitenessConfig { tol: tols.definiteness, ..DefinitenessConfig::default() };
            find_positive_direction(map.a(), &config, &mut seeds::rng(seed, "definiteness"))
        }
    };
    if !report.found {
        return Err(CliError::Numerical(format!("no positive-definite combination c_plus (lambda_min = {:e})", report.lambda_min_at_c)));
    }
    Ok(support_frame(map, &report.c_plus)?)
}

fn analyze(map: &QuadraticMap, tols: &Tolerances, seed: u64, c_plus: Option<Vec<f64>>, epsilon_max: bool) -> CliResult<ConvexityCertificate> {
    Ok(certify(map, &tols.certify(seed, c_plus, epsilon_max))?)
}

fn region_for(map: &QuadraticMap, problem: &Problem, args: &RegionArgs, tols: &Tolerances, seed: u64) -> CliResult<(Region, f64)> {
    let kind = args.region.unwrap_or(match problem {
        Problem::Tuple(_) => RegionArg::Jnr,
        Problem::Map(_) => RegionArg::Full,
    });
    if let Some(z) = args.z {
        if !z.is_finite() || z < 0.0 {
            return Err(CliError::Usage(format!("--z must be finite and non-negative, got {z}")));
        }
    }
    match kind {
        RegionArg::Full => {
            let r = args.z.unwrap_or(1.0);
            Ok((Region::FullSpace { radius: r }, r))
        }
        RegionArg::Jnr => Ok((Region::UnitSphere, 1.0)),
        RegionArg::Slab | RegionArg::Sphere => {
            let (frame, z) = match args.z {
                Some(z) => (frame_for(map, args.cplus.as_deref(), tols, seed)?, z),
                None => {
                    // Default height: 95% of the certified radius.
                    let cert = analyze(map, tols, seed, args.cplus.clone(), false)?;
                    let z = match cert.status {
                        CertificateStatus::SlabConvex { z_max } => 0.95 * z_max,
                        CertificateStatus::FullImageConvex => 1.0,
                        CertificateStatus::Inconclusive { reason } => return Err(CliError::Numerical(reason)),
                    };
                    (cert.frame.expect("frame of a conclusive certificate"), z)
                }
            };
            let region = if kind == RegionArg::Slab { Region::Slab { frame, z } } else { Region::Sphere { frame, z } };
            Ok((region, z))
        }
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Analyze { common, cplus, epsilon_max } => {
            let tols = Tolerances::parse(&common.tol)?;
            let parsed = load(&common)?;
            let map = parsed.problem.to_map();
            let cert = analyze(&map, &tols, common.seed, cplus, epsilon_max)?;
            emit_json(&common, &io::certificate_json(&map, &cert, common.seed, &parsed.warnings))?;
            // No positive direction means z_max could not be computed.
            Ok(if matches!(cert.status, CertificateStatus::Inconclusive { .. }) { 3 } else { 0 })
        }
        Command::Estimate { common, cplus, mode, divisor } => {
            let tols = Tolerances::parse(&common.tol)?;
            let parsed = load(&common)?;
            let map = parsed.problem.to_map();
            let frame = frame_for(&map, cplus.as_deref(), &tols, common.seed)?;
            let config = EstimateConfig {
                mode: if mode == ModeArg::Derived { EstimateMode::Derived } else { EstimateMode::Printed },
                divisor: if divisor == DivisorArg::N { Divisor::N } else { Divisor::M },
                seed: common.seed,
                ..EstimateConfig::default()
            };
            let report = estimate_chain(&map, &frame, &config);
            let zmax = quadrascope::convexity::compute_zmax(&map, &frame, &tols.zmax(common.seed))?;
            let used = [("kernel_tol", tols.scan.kernel_tol), ("residual_tol", tols.scan.residual_tol), ("definiteness_tol", tols.definiteness)];
            emit_json(&common, &io::estimate_json(&map, &frame.c_plus, &report, &config, Some(&zmax.value), &used, &parsed.warnings))?;
            Ok(0)
        }
        Command::JnrCertify { common, e, lifts } => {
            let tols = Tolerances::parse(&common.tol)?;
            let parsed = load(&common)?;
            let tuple = parsed.problem.to_tuple()?;
            let config = JnrConfig { tol: tols.multiplicity, seed: common.seed, zmax: tols.zmax(common.seed), ..JnrConfig::default() };
            let cert = match lifts {
                Some(k) => certify_random_lifts(&tuple, k, &config)?,
                None => certify_reduction(&tuple, e.as_deref(), &config)?,
            };
            let used = [("kernel_tol", tols.scan.kernel_tol), ("residual_tol", tols.scan.residual_tol), ("multiplicity_tol", tols.multiplicity)];
            emit_json(&common, &io::jnr_json(&tuple, &cert, common.seed, &used, &parsed.warnings))?;
            Ok(0)
        }
        Command::Sample { common, region, count } => {
            let tols = Tolerances::parse(&common.tol)?;
            let parsed = load(&common)?;
            let map = parsed.problem.to_map();
            let (region, _) = region_for(&map, &parsed.problem, &region, &tols, common.seed)?;
            let cloud = sample_image(&map, &region, count, common.seed)?;
            if common.format == Some(Format::Json) {
                let mut doc = serde_json::Map::new();
                doc.insert("schema".into(), io::SCHEMA.into());
                doc.insert("command".into(), "sample".into());
                doc.insert("provenance".into(), serde_json::to_value(&cloud.provenance).expect("plain struct"));
                doc.insert("points".into(), serde_json::to_value(&cloud.points).expect("finite points"));
                emit_json(&Common { format: None, ..common }, &Value::Object(doc))?;
            } else {
                emit(&common, &cloud.to_csv())?;
            }
            Ok(0)
        }
        Command::OracleCheck { common, region, pairs } => {
            let tols = Tolerances::parse(&common.tol)?;
            let parsed = load(&common)?;
            let map = parsed.problem.to_map();
            let (region, param) = region_for(&map, &parsed.problem, &region, &tols, common.seed)?;
            let config = ProbeConfig { pairs, tau: tols.tau, seed: common.seed, ..ProbeConfig::default() };
            let report = convexity_probe(&map, &region, &config)?;
            let used = [("kernel_tol", tols.scan.kernel_tol), ("residual_tol", tols.scan.residual_tol), ("definiteness_tol", tols.definiteness)];
            emit_json(&common, &io::probe_json(&report, &region, param, common.seed, &used, &parsed.warnings))?;
            Ok(if report.verdict == ProbeVerdict::NonConvexWitness { 4 } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
