//! `archvar`: analytical and Monte Carlo multivariate VaR under Archimedean copulas.
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
//! failure, 4 statistical failure (empty level sets).

mod config;
mod report;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use archvar::calibration::{joe_calibration_check, theta_from_tau};
use archvar::mc::{
    format_table, run_study, McConfig, TableRow, TABLE1_CASES, TABLE1_DIM, TABLE1_H,
    TABLE1_N_GRID,
};
use archvar::sampler::{sample_copula, write_sample};
use archvar::var::var_closed_form;
use archvar::{CopulaSpec, Error, ErrorKind, FamilyId, Seed};
use clap::{Args, Parser, Subcommand};

use config::{parse_count, ConfigError, Dependence, MarginSpec, RunConfig};
use report::{Report, Style};

const DEFAULT_REPLICATIONS: usize = 100;

#[derive(Parser, Debug)]
#[command(name = "archvar", version, about = "Multivariate VaR under Archimedean copulas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytical VaR components by quadrature.
    Var {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        copula: CopulaArgs,
        #[arg(long)]
        alpha: Option<f64>,
        /// `uniform`, a two-column (u, quantile) file, or one entry per component.
        #[arg(long)]
        margins: Option<String>,
    },
    /// Dependence parameter for a target Kendall's tau; prints `family,tau,theta`.
    Calibrate {
        family: String,
        tau: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Draw a seeded sample and write it as delimited text.
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        copula: CopulaArgs,
        #[arg(short, long)]
        n: Option<String>,
    },
    /// Monte Carlo replication study for one copula.
    Mc {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        copula: CopulaArgs,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        margins: Option<String>,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Convergence table over copulas and sample sizes.
    Table1 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
        /// Copulas as `family:theta` pairs, e.g. `clayton:2,joe:2.4`.
        #[arg(long)]
        cases: Option<String>,
        #[command(flatten)]
        study: StudyArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the generation time so reports are byte-identical across runs.
    #[arg(long)]
    no_timestamp: bool,
    /// Print shortest round-trip values instead of six decimals.
    #[arg(long)]
    full_precision: bool,
}

#[derive(Args, Debug, Clone)]
struct CopulaArgs {
    #[arg(long)]
    family: Option<String>,
    #[arg(long, conflicts_with = "tau")]
    theta: Option<f64>,
    /// Target Kendall's tau; theta is calibrated from it.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct StudyArgs {
    /// Sample sizes, comma separated (e.g. `5e4,1e6`).
    #[arg(short, long)]
    n: Option<String>,
    /// Replication count M.
    #[arg(short = 'M', long)]
    replications: Option<usize>,
    /// Level-set tolerance.
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Core(Error),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 2,
            Failure::Core(e) => match e.kind() {
                ErrorKind::Invalid => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Statistical => 4,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => e.fmt(f),
            Failure::Core(e) => e.fmt(f),
            Failure::Io(e) => f.write_str(e),
        }
    }
}

type Outcome = Result<(), Failure>;

fn base_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    cfg.full_precision |= common.full_precision;
    cfg.timestamp &= !common.no_timestamp;
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(ConfigError::new("--jobs", "must be at least 1").into());
        }
        // the global pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    Ok(cfg)
}

fn apply_copula(cfg: &mut RunConfig, args: &CopulaArgs) -> Result<(), Failure> {
    if let Some(f) = &args.family {
        cfg.family = Some(
            f.parse::<FamilyId>()
                .map_err(|e| ConfigError::new("--family", e.to_string()))?,
        );
    }
    if let Some(t) = args.theta {
        cfg.theta = Some(t);
        cfg.target_tau = None;
    }
    if let Some(t) = args.tau {
        cfg.target_tau = Some(t);
        cfg.theta = None;
    }
    if let Some(d) = args.dim {
        cfg.dim = d;
    }
    Ok(())
}

fn apply_margins(cfg: &mut RunConfig, alpha: Option<f64>, margins: &Option<String>) {
    if let Some(a) = alpha {
        cfg.alpha = a;
    }
    if let Some(m) = margins {
        cfg.margins = m
            .split(',')
            .map(str::trim)
            .map(|s| {
                if s.eq_ignore_ascii_case("uniform") {
                    MarginSpec::Uniform
                } else {
                    MarginSpec::Tabulated(PathBuf::from(s))
                }
            })
            .collect();
    }
}

fn parse_counts(field: &str, raw: &str) -> Result<Vec<usize>, Failure> {
    raw.split(',')
        .map(|s| parse_count(field, s).map_err(Failure::from))
        .collect()
}

fn apply_study(cfg: &mut RunConfig, args: &StudyArgs) -> Result<(), Failure> {
    if let Some(n) = &args.n {
        cfg.n = parse_counts("--n", n)?;
    }
    if args.replications.is_some() {
        cfg.replications = args.replications;
    }
    if args.h.is_some() {
        cfg.h = args.h;
    }
    Ok(())
}

/// Family, resolved theta (calibrated when a target tau was given) and spec.
fn resolve_spec(cfg: &RunConfig) -> Result<CopulaSpec, Failure> {
    let family = cfg.require_family()?;
    let theta = match cfg.dependence()? {
        Dependence::Theta(t) => t,
        Dependence::Tau(tau) => theta_from_tau(family, tau)?,
    };
    Ok(CopulaSpec::new(family, theta, cfg.dim)?)
}

fn style(cfg: &RunConfig) -> Style {
    Style {
        full_precision: cfg.full_precision,
        timestamp: cfg.timestamp,
    }
}

fn describe(spec: &CopulaSpec, report: &mut Report) {
    report.meta("family", spec.family().key());
    report.meta("theta", spec.theta());
    report.meta("dim", spec.dim());
}

/// Write the report to `--out` and print `summary`, or print the report.
fn emit(cfg: &RunConfig, text: &str, summary: &str) -> Outcome {
    match &cfg.out {
        Some(path) => {
            fs::write(path, text)
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
            println!("{summary} -> {}", path.display());
        }
        None => {
            io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Io(e.to_string()))?;
        }
    }
    Ok(())
}

fn cmd_var(cfg: RunConfig) -> Outcome {
    let spec = resolve_spec(&cfg)?;
    let margins = cfg.load_margins()?;
    let result = var_closed_form(&spec, &margins, cfg.alpha, &cfg.quad)?;

    let mut report = Report::new("var", style(&cfg));
    describe(&spec, &mut report);
    if let Some(tau) = cfg.target_tau {
        report.meta("target_tau", tau);
    }
    report.meta("alpha", cfg.alpha);
    report.meta("margins", cfg.margins_label());
    report.meta(
        "quadrature",
        format!(
            "abs_tol:{},rel_tol:{},max_subdivisions:{}",
            cfg.quad.abs_tol, cfg.quad.rel_tol, cfg.quad.max_subdivisions
        ),
    );
    report.line("component,var,abs_error");
    let st = report.style();
    for (i, (v, e)) in result
        .components
        .iter()
        .zip(&result.abs_error_estimate)
        .enumerate()
    {
        report.line(&format!("{},{},{}", i + 1, st.num(*v), st.sci(*e)));
    }
    let values: Vec<String> = result.components.iter().map(|v| st.num(*v)).collect();
    let summary = format!(
        "{} theta={} d={} alpha={}: VaR = ({})",
        spec.family().key(),
        spec.theta(),
        spec.dim(),
        cfg.alpha,
        values.join(", ")
    );
    emit(&cfg, &report.into_string(), &summary)
}

fn cmd_calibrate(cfg: RunConfig, family: &str, tau: f64) -> Outcome {
    let family: FamilyId = family
        .parse()
        .map_err(|e: Error| ConfigError::new("family", e.to_string()))?;
    let theta = theta_from_tau(family, tau)?;
    let st = style(&cfg);
    let line = format!("{},{},{}\n", family.key(), tau, st.num(theta));
    eprintln!("{family}: theta = {theta} gives Kendall's tau = {tau}");
    match &cfg.out {
        Some(path) => fs::write(path, &line)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{line}"),
    }
    Ok(())
}

fn cmd_sample(cfg: RunConfig) -> Outcome {
    let spec = resolve_spec(&cfg)?;
    let n = match cfg.n.as_slice() {
        [n] => *n,
        [] => return Err(ConfigError::new("mc.n", "missing sample size (use --n)").into()),
        _ => return Err(ConfigError::new("mc.n", "sample takes a single size").into()),
    };
    let seed = Seed::new(cfg.seed, 0);
    let sample = sample_copula(&spec, n, seed)?;
    let mut buf = Report::new("sample", style(&cfg)).into_string().into_bytes();
    write_sample(&sample, &mut buf)?;
    let text = String::from_utf8(buf).expect("sample text is ascii");
    let summary = format!(
        "{} theta={} d={}: {n} rows, seed {}",
        spec.family().key(),
        spec.theta(),
        spec.dim(),
        cfg.seed
    );
    emit(&cfg, &text, &summary)
}

fn study_knobs(cfg: &RunConfig, default_n: &[usize], default_h: f64) -> (Vec<usize>, usize, f64) {
    let n = if cfg.n.is_empty() {
        default_n.to_vec()
    } else {
        cfg.n.clone()
    };
    (
        n,
        cfg.replications.unwrap_or(DEFAULT_REPLICATIONS),
        cfg.h.unwrap_or(default_h),
    )
}

fn cmd_mc(cfg: RunConfig) -> Outcome {
    let spec = resolve_spec(&cfg)?;
    let margins = cfg.load_margins()?;
    if cfg.n.is_empty() {
        return Err(ConfigError::new("mc.n", "missing sample size(s) (use --n)").into());
    }
    let (grid, m, h) = study_knobs(&cfg, &[], TABLE1_H);

    let mut report = Report::new("mc", style(&cfg));
    describe(&spec, &mut report);
    report.meta("alpha", cfg.alpha);
    report.meta("h", h);
    report.meta("replications", m);
    report.meta("seed", cfg.seed);
    report.meta("margins", cfg.margins_label());
    report.line(
        "n,component,mean,std_dev,bias,rmse,theoretical,std_error,mean_selected,failed_replications",
    );
    let st = report.style();
    let mut summary = Vec::new();
    for &n in &grid {
        let mut mc = McConfig::new(spec, n, m, h, cfg.alpha, Seed::new(cfg.seed, 0));
        mc.margins = margins.clone();
        mc.quad = cfg.quad;
        let s = run_study(&mc)?;
        for i in 0..spec.dim() {
            report.line(&format!(
                "{n},{},{},{},{},{},{},{},{},{}",
                i + 1,
                st.num(s.mean[i]),
                st.num(s.std_dev[i]),
                st.num(s.bias[i]),
                st.num(s.rmse[i]),
                st.num(s.theoretical[i]),
                st.num(s.std_error[i]),
                st.num(s.mean_selected_count),
                s.failed_replications
            ));
        }
        summary.push(format!("n={n}: rmse {}", st.num(s.rmse[0])));
    }
    let summary = format!("{} M={m}: {}", spec.family().key(), summary.join(", "));
    emit(&cfg, &report.into_string(), &summary)
}

fn cmd_table1(cfg: RunConfig) -> Outcome {
    let cases = cfg.cases.clone().unwrap_or_else(|| TABLE1_CASES.to_vec());
    let (grid, m, h) = study_knobs(&cfg, &TABLE1_N_GRID, TABLE1_H);
    let alpha = cfg.alpha;
    let joe = joe_calibration_check()?;

    let mut report = Report::new("table1", style(&cfg));
    report.meta("dim", TABLE1_DIM);
    report.meta("alpha", alpha);
    report.meta("h", h);
    report.meta("replications", m);
    report.meta("seed", cfg.seed);
    report.meta("margins", "uniform");
    report.meta("component", 1);
    report.meta(
        "cases",
        cases
            .iter()
            .map(|(f, t)| format!("{}:{t}", f.key()))
            .collect::<Vec<_>>()
            .join(","),
    );
    report.meta("joe_printed_theta", joe.printed_theta);
    report.meta("joe_tau_at_printed_theta", joe.tau_at_printed_theta);
    report.meta("joe_target_tau", joe.target_tau);
    report.meta("joe_theta_for_target_tau", joe.calibrated_theta);
    report.meta("joe_printed_theta_consistent_with_target_tau", joe.consistent);
    if !joe.consistent {
        eprintln!(
            "note: Joe theta = {} gives Kendall's tau = {:.6}, not {}; tau = {} needs theta = {:.6}",
            joe.printed_theta,
            joe.tau_at_printed_theta,
            joe.target_tau,
            joe.target_tau,
            joe.calibrated_theta
        );
    }

    let mut rows = Vec::new();
    for &(family, theta) in &cases {
        let spec = CopulaSpec::new(family, theta, TABLE1_DIM)?;
        for &n in &grid {
            let mc = McConfig::new(spec, n, m, h, alpha, Seed::new(cfg.seed, 0));
            let stats = run_study(&mc)?;
            eprintln!(
                "{} n={n}: mean {:.6} rmse {:.6}",
                family.key(),
                stats.mean[0],
                stats.rmse[0]
            );
            rows.push(TableRow { n, family, stats });
        }
    }
    let decimals = (!cfg.full_precision).then_some(report::DECIMALS);
    report.line(&format_table(&rows, 0, decimals));
    let summary = format!("{} rows, M={m}", rows.len());
    emit(&cfg, &report.into_string(), &summary)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Var {
            common,
            copula,
            alpha,
            margins,
        } => {
            let mut cfg = base_config(&common)?;
            apply_copula(&mut cfg, &copula)?;
            apply_margins(&mut cfg, alpha, &margins);
            cmd_var(cfg)
        }
        Command::Calibrate {
            family,
            tau,
            common,
        } => cmd_calibrate(base_config(&common)?, &family, tau),
        Command::Sample { common, copula, n } => {
            let mut cfg = base_config(&common)?;
            apply_copula(&mut cfg, &copula)?;
            if let Some(n) = n {
                cfg.n = parse_counts("--n", &n)?;
            }
            cmd_sample(cfg)
        }
        Command::Mc {
            common,
            copula,
            alpha,
            margins,
            study,
        } => {
            let mut cfg = base_config(&common)?;
            apply_copula(&mut cfg, &copula)?;
            apply_margins(&mut cfg, alpha, &margins);
            apply_study(&mut cfg, &study)?;
            cmd_mc(cfg)
        }
        Command::Table1 {
            common,
            alpha,
            cases,
            study,
        } => {
            let mut cfg = base_config(&common)?;
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            if let Some(c) = cases {
                cfg.cases = Some(config::parse_cases("--cases", &c)?);
            }
            apply_study(&mut cfg, &study)?;
            cmd_table1(cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
