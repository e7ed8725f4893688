//! Level-set Monte Carlo estimator of the multivariate VaR and replication
//! studies around it.
//!
//! For a sample `U^(1..n)` the estimator keeps the rows with
//! `|C(U^(k)) - alpha| <= h`, evaluated with the known parametric copula, and
//! averages their images `X_i = q_i(U_i)` under the marginal quantiles.
//!
//! Replication `r` draws from stream `r` of the study seed. Within a
//! replication, sums are formed over fixed blocks of rows and combined in
//! block order, so results do not depend on the number of threads.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::copula::{check_alpha, CopulaSpec, FamilyId};
use crate::error::{Error, Result};
use crate::quadrature::QuadConfig;
use crate::rng::Seed;
use crate::sampler::{RowSampler, Sample};
use crate::var::{var_closed_form, var_generic, QuantileFn, VarResult};

/// Rows per summation block.
const BLOCK_ROWS: usize = 1 << 16;

/// Copulas and parameters of the convergence table; each calibrated to tau = 0.5
/// except Joe (see [`crate::calibration::joe_calibration_check`]).
pub const TABLE1_CASES: [(FamilyId, f64); 4] = [
    (FamilyId::Clayton, 2.0),
    (FamilyId::Frank, 5.74),
    (FamilyId::GumbelHougaard, 2.0),
    (FamilyId::Joe, 2.4),
];
pub const TABLE1_N_GRID: [usize; 4] = [50_000, 100_000, 500_000, 1_000_000];
pub const TABLE1_DIM: usize = 3;
pub const TABLE1_ALPHA: f64 = 0.05;
pub const TABLE1_H: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct McConfig {
    pub n: usize,
    pub replications: usize,
    pub h: f64,
    pub alpha: f64,
    pub seed: Seed,
    pub spec: CopulaSpec,
    pub margins: Vec<QuantileFn>,
    /// Tolerances for the theoretical value.
    pub quad: QuadConfig,
}

impl McConfig {
    /// Uniform margins and default quadrature tolerances.
    pub fn new(spec: CopulaSpec, n: usize, replications: usize, h: f64, alpha: f64, seed: Seed) -> Self {
        McConfig {
            n,
            replications,
            h,
            alpha,
            seed,
            margins: crate::var::uniform_margins(spec.dim()),
            spec,
            quad: QuadConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Argument("sample size n must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::Argument("replication count M must be at least 1".into()));
        }
        check_band(self.alpha, self.h)?;
        if self.margins.len() != self.spec.dim() {
            return Err(Error::Dimension {
                expected: self.spec.dim(),
                got: self.margins.len(),
            });
        }
        self.quad.validate()
    }
}

fn check_band(alpha: f64, h: f64) -> Result<()> {
    check_alpha(alpha)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Argument(format!(
            "level-set tolerance h must be positive, got {h}"
        )));
    }
    Ok(())
}

/// Across-replication summary per component.
#[derive(Debug, Clone, PartialEq)]
pub struct McStats {
    pub mean: Vec<f64>,
    /// Across-replication standard deviation (denominator `M - 1`).
    pub std_dev: Vec<f64>,
    /// Standard error of `mean`, `std_dev / sqrt(M)`.
    pub std_error: Vec<f64>,
    pub bias: Vec<f64>,
    pub rmse: Vec<f64>,
    pub theoretical: Vec<f64>,
    /// Average number of selected rows per successful replication.
    pub mean_selected_count: f64,
    pub failed_replications: usize,
    /// Per-replication estimates in replication order; `None` for empty level sets.
    pub estimates: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Clone)]
struct Partial {
    sums: Vec<f64>,
    count: usize,
}

impl Partial {
    fn new(d: usize) -> Self {
        Partial {
            sums: vec![0.0; d],
            count: 0,
        }
    }

    fn offer(&mut self, spec: &CopulaSpec, row: &[f64], alpha: f64, h: f64, margins: &[QuantileFn]) {
        if (spec.cdf_unchecked(row) - alpha).abs() <= h {
            for ((s, &u), q) in self.sums.iter_mut().zip(row).zip(margins) {
                *s += q.eval(u);
            }
            self.count += 1;
        }
    }

    fn absorb(mut self, other: Partial) -> Partial {
        for (a, b) in self.sums.iter_mut().zip(other.sums) {
            *a += b;
        }
        self.count += other.count;
        self
    }

    fn finish(self, alpha: f64, h: f64, n: usize) -> Result<(Vec<f64>, usize)> {
        if self.count == 0 {
            return Err(Error::EmptyLevelSet { alpha, h, n });
        }
        let k = self.count as f64;
        Ok((self.sums.into_iter().map(|s| s / k).collect(), self.count))
    }
}

fn combine(parts: Vec<Partial>, d: usize) -> Partial {
    parts.into_iter().fold(Partial::new(d), Partial::absorb)
}

/// Estimate from an existing sample: componentwise mean of `q_i(U_i)` over
/// rows with `|C(U) - alpha| <= h`, and the number of such rows.
pub fn estimate_var_once(
    sample: &Sample,
    spec: &CopulaSpec,
    alpha: f64,
    h: f64,
    margins: &[QuantileFn],
) -> Result<(Vec<f64>, usize)> {
    check_band(alpha, h)?;
    let d = spec.dim();
    if sample.dim() != d || margins.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: if sample.dim() != d { sample.dim() } else { margins.len() },
        });
    }
    let parts: Vec<Partial> = sample
        .data()
        .par_chunks(BLOCK_ROWS * d)
        .map(|block| {
            let mut p = Partial::new(d);
            for row in block.chunks_exact(d) {
                p.offer(spec, row, alpha, h, margins);
            }
            p
        })
        .collect();
    combine(parts, d).finish(alpha, h, sample.rows())
}

/// One replication without storing the sample; identical to
/// `estimate_var_once(sample_copula(spec, n, seed))`.
fn replicate(
    sampler: &RowSampler,
    cfg: &McConfig,
    seed: Seed,
) -> Result<(Vec<f64>, usize)> {
    let d = cfg.spec.dim();
    let blocks = cfg.n.div_ceil(BLOCK_ROWS);
    let parts: Vec<Partial> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut p = Partial::new(d);
            let mut row = vec![0.0; d];
            let end = ((b + 1) * BLOCK_ROWS).min(cfg.n);
            for k in b * BLOCK_ROWS..end {
                sampler.fill(&mut seed.substream(k as u64), &mut row);
                p.offer(&cfg.spec, &row, cfg.alpha, cfg.h, &cfg.margins);
            }
            p
        })
        .collect();
    combine(parts, d).finish(cfg.alpha, cfg.h, cfg.n)
}

/// Analytical VaR used as the reference of a study.
pub fn theoretical_var(spec: &CopulaSpec, margins: &[QuantileFn], alpha: f64, quad: &QuadConfig) -> Result<VarResult> {
    if spec.family() == FamilyId::Frank && spec.theta() < 0.0 {
        // the closed form is written for theta > 0
        var_generic(spec, margins, alpha, quad)
    } else {
        var_closed_form(spec, margins, alpha, quad)
    }
}

/// Run `M` independent replications and summarise them against the
/// analytical value. Replications with an empty level set are excluded and
/// counted.
pub fn run_study(cfg: &McConfig) -> Result<McStats> {
    cfg.validate()?;
    let theoretical = theoretical_var(&cfg.spec, &cfg.margins, cfg.alpha, &cfg.quad)?.components;
    let sampler = RowSampler::new(&cfg.spec)?;

    let outcomes: Vec<Result<(Vec<f64>, usize)>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| replicate(&sampler, cfg, cfg.seed.with_stream(r as u64)))
        .collect();

    let mut estimates = Vec::with_capacity(outcomes.len());
    let mut successes: Vec<Vec<f64>> = Vec::new();
    let mut selected = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok((est, count)) => {
                selected += count;
                successes.push(est.clone());
                estimates.push(Some(est));
            }
            Err(Error::EmptyLevelSet { .. }) => estimates.push(None),
            Err(e) => return Err(e),
        }
    }
    if successes.is_empty() {
        return Err(Error::StudyFailed {
            replications: cfg.replications,
        });
    }

    let m = successes.len() as f64;
    let d = cfg.spec.dim();
    let mut mean = vec![0.0; d];
    let mut std_dev = vec![0.0; d];
    for i in 0..d {
        mean[i] = successes.iter().map(|e| e[i]).sum::<f64>() / m;
        if successes.len() > 1 {
            let ss: f64 = successes.iter().map(|e| (e[i] - mean[i]).powi(2)).sum();
            std_dev[i] = (ss / (m - 1.0)).sqrt();
        }
    }
    let bias: Vec<f64> = mean.iter().zip(&theoretical).map(|(a, b)| (a - b).abs()).collect();
    let rmse = bias.iter().zip(&std_dev).map(|(b, s)| b.hypot(*s)).collect();
    let std_error = std_dev.iter().map(|s| s / m.sqrt()).collect();
    Ok(McStats {
        mean,
        std_dev,
        std_error,
        bias,
        rmse,
        theoretical,
        mean_selected_count: selected as f64 / m,
        failed_replications: cfg.replications - successes.len(),
        estimates,
    })
}

/// One line of a convergence table.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub n: usize,
    pub family: FamilyId,
    pub stats: McStats,
}

pub const TABLE_HEADER: &str =
    "n,copula,mean,std_dev,bias,rmse,theoretical,std_error,mean_selected,failed_replications";

/// Comma-delimited table of component `component` (0-based), one line per
/// row. `decimals = None` prints shortest round-trip values.
pub fn format_table(rows: &[TableRow], component: usize, decimals: Option<usize>) -> String {
    let num = |x: f64| match decimals {
        Some(p) => format!("{x:.p$}"),
        None => x.to_string(),
    };
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for row in rows {
        let s = &row.stats;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.n,
            row.family.key(),
            num(s.mean[component]),
            num(s.std_dev[component]),
            num(s.bias[component]),
            num(s.rmse[component]),
            num(s.theoretical[component]),
            num(s.std_error[component]),
            num(s.mean_selected_count),
            s.failed_replications
        );
    }
    out
}
