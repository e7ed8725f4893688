//! Seeded i.i.d. samples from the Archimedean families with uniform margins.
//!
//! Rows come from the Marshall–Olkin construction `U_i = psi(E_i / V)` (see
//! [`crate::frailty`]). Families or parameters without a frailty law are
//! sampled bivariately by inverting the conditional distribution of `U_2`
//! given `U_1`: Ali-Mikhail-Haq with `theta < 0` and Frank with `theta < 0`.
//!
//! Row `k` always draws from substream `k` of the seed, so a sample does not
//! depend on how rows are split across threads.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::copula::{CopulaSpec, FamilyId};
use crate::error::{Error, Result};
use crate::frailty::Frailty;
use crate::rng::{CounterRng, Seed};

pub use crate::frailty::sample_frailty;

/// Rows per parallel work item.
const BLOCK_ROWS: usize = 4096;
const UPPER: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone)]
enum Method {
    Frailty { frailty: Frailty, scale: f64 },
    AmhConditional { theta: f64 },
    FrankConditional { theta: f64 },
}

/// Draws one copula observation per call; shared by [`sample_copula`] and
/// the Monte Carlo studies.
#[derive(Debug, Clone)]
pub(crate) struct RowSampler {
    spec: CopulaSpec,
    method: Method,
}

impl RowSampler {
    pub(crate) fn new(spec: &CopulaSpec) -> Result<Self> {
        let theta = spec.theta();
        let method = match spec.family() {
            FamilyId::AliMikhailHaq if theta < 0.0 => Method::AmhConditional { theta },
            FamilyId::Frank if theta < 0.0 => {
                if spec.dim() != 2 {
                    return Err(Error::domain(format!(
                        "Frank with theta < 0 is a copula only for d = 2, got d = {}",
                        spec.dim()
                    )));
                }
                Method::FrankConditional { theta }
            }
            family => Method::Frailty {
                frailty: Frailty::new(family, theta)?,
                // the gamma frailty transform is psi(s / theta)
                scale: if family == FamilyId::Clayton { 1.0 / theta } else { 1.0 },
            },
        };
        Ok(RowSampler { spec: *spec, method })
    }

    pub(crate) fn fill(&self, rng: &mut CounterRng, out: &mut [f64]) {
        match self.method {
            Method::Frailty { ref frailty, scale } => {
                let v = frailty.sample(rng);
                for x in out.iter_mut() {
                    *x = self.spec.phi_inverse_unchecked(scale * rng.exponential() / v);
                }
            }
            Method::AmhConditional { theta } => {
                let u1 = rng.uniform();
                let w = rng.uniform();
                let b = theta * (1.0 - u1);
                let a = 1.0 - b;
                // w * (a + b u)^2 = u (1 - theta + theta u), smaller root
                let qa = w * b * b - theta;
                let qb = 2.0 * w * a * b - (1.0 - theta);
                let qc = w * a * a;
                let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
                out[0] = u1;
                out[1] = 2.0 * qc / (-qb + disc.sqrt());
            }
            Method::FrankConditional { theta } => {
                let u1 = rng.uniform();
                let w = rng.uniform();
                let ratio = w * (-theta).exp_m1() / (w + (1.0 - w) * (-theta * u1).exp());
                out[0] = u1;
                out[1] = -ratio.ln_1p() / theta;
            }
        }
        for x in out.iter_mut() {
            *x = x.clamp(f64::MIN_POSITIVE, UPPER);
        }
    }
}

/// An `n x d` matrix of copula observations, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
    seed: Seed,
    spec: CopulaSpec,
}

impl Sample {
    /// Wrap existing observations. Every entry must lie strictly inside (0, 1).
    pub fn from_data(spec: CopulaSpec, seed: Seed, data: Vec<f64>) -> Result<Self> {
        let dim = spec.dim();
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::Argument(format!(
                "sample data of length {} does not form rows of width {dim}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::domain(format!(
                "sample entries must lie in (0, 1), found {bad}"
            )));
        }
        Ok(Sample {
            rows: data.len() / dim,
            dim,
            data,
            seed,
            spec,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn spec(&self) -> &CopulaSpec {
        &self.spec
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[j]).collect()
    }
}

/// Draw `n` i.i.d. observations from `spec`.
pub fn sample_copula(spec: &CopulaSpec, n: usize, seed: Seed) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Argument("sample size n must be at least 1".into()));
    }
    let sampler = RowSampler::new(spec)?;
    let d = spec.dim();
    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(BLOCK_ROWS * d)
        .enumerate()
        .for_each(|(block, chunk)| {
            for (i, row) in chunk.chunks_exact_mut(d).enumerate() {
                let k = (block * BLOCK_ROWS + i) as u64;
                sampler.fill(&mut seed.substream(k), row);
            }
        });
    Ok(Sample {
        rows: n,
        dim: d,
        data,
        seed,
        spec: *spec,
    })
}

/// Kendall's tau-b between columns `i` and `j`.
pub fn empirical_kendall_tau(sample: &Sample, pair: (usize, usize)) -> Result<f64> {
    let (i, j) = pair;
    for c in [i, j] {
        if c >= sample.dim {
            return Err(Error::Argument(format!(
                "column {c} out of range for a sample of dimension {}",
                sample.dim
            )));
        }
    }
    kendall_tau_b(&sample.column(i), &sample.column(j))
}

fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sort `v` ascending, returning the number of inversions removed.
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    let mut buf = vec![0.0; n];
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        for lo in (0..n).step_by(2 * width) {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut l, mut r, mut k) = (lo, mid, lo);
            while l < mid && r < hi {
                if v[r] < v[l] {
                    buf[k] = v[r];
                    swaps += (mid - l) as u64;
                    r += 1;
                } else {
                    buf[k] = v[l];
                    l += 1;
                }
                k += 1;
            }
            buf[k..k + mid - l].copy_from_slice(&v[l..mid]);
            k += mid - l;
            buf[k..k + hi - r].copy_from_slice(&v[r..hi]);
        }
        v.copy_from_slice(&buf);
        width *= 2;
    }
    swaps
}

/// Kendall's tau-b of two paired series in O(n log n) (Knight's algorithm).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::Argument(format!(
            "kendall tau needs at least 2 observations, got {n}"
        )));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::domain("kendall tau input contains NaN"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let xs: Vec<f64> = order.iter().map(|&k| x[k]).collect();
    let pairs: Vec<(f64, f64)> = order.iter().map(|&k| (x[k], y[k])).collect();
    let mut ys: Vec<f64> = order.iter().map(|&k| y[k]).collect();

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let ties_x = tied_pairs(&xs);
    let ties_xy = tied_pairs(&pairs);
    let swaps = merge_count(&mut ys);
    let ties_y = tied_pairs(&ys);

    if ties_x == n0 || ties_y == n0 {
        return Err(Error::Degenerate(
            "kendall tau is undefined for a constant column".into(),
        ));
    }
    let numerator =
        n0 as f64 - ties_x as f64 - ties_y as f64 + ties_xy as f64 - 2.0 * swaps as f64;
    let denominator = ((n0 - ties_x) as f64 * (n0 - ties_y) as f64).sqrt();
    Ok(numerator / denominator)
}

/// Fraction of rows that lie componentwise below `u`.
pub fn empirical_copula(sample: &Sample, u: &[f64]) -> Result<f64> {
    if u.len() != sample.dim {
        return Err(Error::Dimension {
            expected: sample.dim,
            got: u.len(),
        });
    }
    let below = sample
        .iter_rows()
        .filter(|row| row.iter().zip(u).all(|(a, b)| a <= b))
        .count();
    Ok(below as f64 / sample.rows as f64)
}

/// Write `sample` as comma-delimited text: `#` metadata lines, a `u1,...,ud`
/// header, then one row per observation in shortest round-trip decimal form.
pub fn write_sample<W: Write>(sample: &Sample, mut out: W) -> Result<()> {
    let spec = &sample.spec;
    let header: Vec<String> = (1..=sample.dim).map(|j| format!("u{j}")).collect();
    let mut text = format!(
        "# family={}\n# theta={}\n# dim={}\n# rows={}\n# seed={}\n# stream_id={}\n{}\n",
        spec.family().key(),
        spec.theta(),
        sample.dim,
        sample.rows,
        sample.seed.value,
        sample.seed.stream_id,
        header.join(",")
    );
    for row in sample.iter_rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                text.push(',');
            }
            text.push_str(&v.to_string());
        }
        text.push('\n');
        if text.len() > 1 << 16 {
            out.write_all(text.as_bytes()).map_err(Error::io)?;
            text.clear();
        }
    }
    out.write_all(text.as_bytes()).map_err(Error::io)?;
    out.flush().map_err(Error::io)
}

/// Read a sample written by [`write_sample`].
pub fn read_sample<R: BufRead>(input: R) -> Result<Sample> {
    let mut family = None;
    let mut theta = None;
    let mut dim = None;
    let mut seed = Seed::default();
    let mut data = Vec::new();
    let mut saw_header = false;

    let bad = |what: &str, line: &str| Error::Argument(format!("bad {what} in sample file: '{line}'"));
    for line in input.lines() {
        let line = line.map_err(Error::io)?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let Some((key, value)) = meta.split_once('=') else {
                continue;
            };
            let value = value.trim();
            match key.trim() {
                "family" => family = Some(value.parse::<FamilyId>()?),
                "theta" => theta = Some(value.parse::<f64>().map_err(|_| bad("theta", line))?),
                "dim" => dim = Some(value.parse::<usize>().map_err(|_| bad("dim", line))?),
                "seed" => seed.value = value.parse().map_err(|_| bad("seed", line))?,
                "stream_id" => seed.stream_id = value.parse().map_err(|_| bad("stream_id", line))?,
                _ => {}
            }
            continue;
        }
        if !saw_header {
            saw_header = true;
            continue;
        }
        let start = data.len();
        for field in line.split(',') {
            data.push(field.trim().parse::<f64>().map_err(|_| bad("value", line))?);
        }
        if let Some(d) = dim {
            if data.len() - start != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: data.len() - start,
                });
            }
        }
    }
    let (Some(family), Some(theta), Some(dim)) = (family, theta, dim) else {
        return Err(Error::Argument(
            "sample file lacks family, theta or dim metadata".into(),
        ));
    };
    let spec = CopulaSpec::new(family, theta, dim)?;
    Sample::from_data(spec, seed, data)
}
