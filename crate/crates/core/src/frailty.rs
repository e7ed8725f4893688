//! Frailty (mixing) variables for the Marshall–Olkin construction.
//!
//! If `V` has Laplace transform `psi` and `E_1..E_d` are unit exponentials
//! independent of `V`, then `U_i = psi(E_i / V)` has the Archimedean copula
//! with inverse generator `psi` and uniform margins.
//!
//! | family | frailty law | Laplace transform |
//! |---|---|---|
//! | Clayton | Gamma(1/theta, 1) | `(1 + s)^(-1/theta)` |
//! | Frank | logarithmic series, p = 1 - e^-theta | `-ln(1 - p e^-s) / theta` |
//! | Gumbel-Hougaard | positive stable, index 1/theta | `exp(-s^(1/theta))` |
//! | Joe | Sibuya(1/theta) | `1 - (1 - e^-s)^(1/theta)` |
//! | AMH, theta in [0, 1) | geometric on {1, 2, ...}, success 1 - theta | `(1 - theta) / (e^s - theta)` |
//!
//! For Clayton the transform is the inverse generator at `s / theta`.

use rand::RngCore;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::copula::FamilyId;
use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Beyond this the Sibuya asymptotic inverse is returned without correction
/// (consecutive integers stop being representable near 9e15).
const SIBUYA_EXACT_LIMIT: f64 = 1e15;
/// From here on `ln Gamma(x - a) - ln Gamma(x)` uses its asymptotic series;
/// differencing two huge `ln_gamma` values would lose the digits that matter.
const SIBUYA_SERIES_FROM: f64 = 1e4;
/// Above this the inverse is found by bisection: the step `ln(1 - index / n)`
/// of the walk falls below the resolution of `ln P(V > n)` near 1e13.
const SIBUYA_WALK_LIMIT: f64 = 1e6;

#[derive(Debug, Clone)]
pub(crate) enum Frailty {
    /// Degenerate at one (independence members).
    One,
    Gamma(Gamma<f64>),
    LogSeries { theta: f64 },
    Stable { index: f64 },
    Sibuya { index: f64, ln_gamma_tail: f64 },
    Geometric { ln_theta: f64 },
}

impl Frailty {
    pub(crate) fn new(family: FamilyId, theta: f64) -> Result<Self> {
        if !family.accepts_theta(theta) {
            return Err(Error::domain(format!(
                "{family} requires {}, got theta = {theta}",
                family.theta_domain()
            )));
        }
        Ok(match family {
            FamilyId::Clayton => Frailty::Gamma(
                Gamma::new(1.0 / theta, 1.0)
                    .map_err(|e| Error::domain(format!("gamma frailty: {e}")))?,
            ),
            FamilyId::Frank => {
                if theta < 0.0 {
                    return Err(Error::domain(
                        "Frank with theta < 0 has no frailty representation",
                    ));
                }
                Frailty::LogSeries { theta }
            }
            FamilyId::GumbelHougaard if theta == 1.0 => Frailty::One,
            FamilyId::GumbelHougaard => Frailty::Stable { index: 1.0 / theta },
            FamilyId::Joe if theta == 1.0 => Frailty::One,
            FamilyId::Joe => {
                let index = 1.0 / theta;
                Frailty::Sibuya {
                    index,
                    ln_gamma_tail: ln_gamma(1.0 - index),
                }
            }
            FamilyId::AliMikhailHaq if theta == 0.0 => Frailty::One,
            FamilyId::AliMikhailHaq => {
                if theta < 0.0 {
                    return Err(Error::domain(
                        "Ali-Mikhail-Haq with theta < 0 has no frailty representation",
                    ));
                }
                Frailty::Geometric {
                    ln_theta: theta.ln(),
                }
            }
        })
    }

    pub(crate) fn sample(&self, rng: &mut CounterRng) -> f64 {
        match *self {
            Frailty::One => 1.0,
            Frailty::Gamma(ref g) => g.sample(rng),
            Frailty::LogSeries { theta } => log_series(theta, rng),
            Frailty::Stable { index } => positive_stable(index, rng),
            Frailty::Sibuya {
                index,
                ln_gamma_tail,
            } => sibuya(index, ln_gamma_tail, rng),
            Frailty::Geometric { ln_theta } => 1.0 + (rng.uniform().ln() / ln_theta).floor(),
        }
    }
}

/// Kemp's "LK" sampler for the logarithmic series law
/// `P(V = k) = p^k / (k theta)`, `p = 1 - e^-theta`.
fn log_series(theta: f64, rng: &mut CounterRng) -> f64 {
    let p = -(-theta).exp_m1();
    let u = rng.uniform();
    if u >= p {
        return 1.0;
    }
    // q = 1 - (1 - p)^w; its log is kept accurate for q near one
    let w = rng.uniform();
    let q_comp = (-theta * w).exp();
    let q = 1.0 - q_comp;
    if u < q * q {
        let ln_q = (-q_comp).ln_1p();
        (1.0 + u.ln() / ln_q).floor()
    } else if u > q {
        1.0
    } else {
        2.0
    }
}

/// Positive stable variate with Laplace transform `exp(-s^index)`, `0 < index < 1`,
/// by the Chambers–Mallows–Stuck transform in Kanter's form.
fn positive_stable(index: f64, rng: &mut CounterRng) -> f64 {
    let angle = std::f64::consts::PI * rng.uniform();
    let w = rng.exponential();
    let a = (index * angle).sin() / angle.sin().powf(1.0 / index);
    let b = ((1.0 - index) * angle).sin() / w;
    a * b.powf((1.0 - index) / index)
}

/// `ln Gamma(x - a) - ln Gamma(x)`, by the Bernoulli-polynomial expansion
/// `-a ln x + sum_k (-1)^(k+1) (B_(k+1)(-a) - B_(k+1)(0)) / (k (k+1) x^k)` for large `x`.
fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    if x < SIBUYA_SERIES_FROM {
        return ln_gamma(x - a) - ln_gamma(x);
    }
    let b = -a;
    let inv = 1.0 / x;
    let t1 = (b * b - b) / 2.0;
    let t2 = -(b * b * b - 1.5 * b * b + 0.5 * b) / 6.0;
    let t3 = (b * b * b * b - 2.0 * b * b * b + b * b) / 12.0;
    -a * x.ln() + inv * (t1 + inv * (t2 + inv * t3))
}

/// Sibuya variate, `P(V = k) = (-1)^(k+1) binom(index, k)`, by inversion of
/// the survival function `P(V > n) = Gamma(n + 1 - index) / (Gamma(n + 1) Gamma(1 - index))`.
fn sibuya(index: f64, ln_gamma_tail: f64, rng: &mut CounterRng) -> f64 {
    sibuya_from_tail(index, ln_gamma_tail, rng.uniform())
}

/// Smallest `n` with `P(V > n) <= tail`.
fn sibuya_from_tail(index: f64, ln_gamma_tail: f64, tail: f64) -> f64 {
    if tail >= 1.0 - index {
        return 1.0;
    }
    let ln_survival = |n: f64| ln_gamma_ratio(n + 1.0, index) - ln_gamma_tail;
    let ln_tail = tail.ln();
    // P(V > n) ~ n^-index / Gamma(1 - index)
    let guess = ((ln_tail + ln_gamma_tail) * (-1.0 / index)).exp();
    if !guess.is_finite() || guess > SIBUYA_EXACT_LIMIT {
        return guess.ceil();
    }
    let mut n = guess.floor().max(1.0);
    if n > SIBUYA_WALK_LIMIT {
        // bracket with S(lo) > tail >= S(hi), then bisect on the integers
        let (mut lo, mut hi) = (n, n);
        while ln_survival(lo) <= ln_tail {
            lo = (lo / 2.0).floor();
        }
        while ln_survival(hi) > ln_tail {
            hi *= 2.0;
        }
        while hi - lo > 1.0 {
            let mid = ((lo + hi) / 2.0).floor();
            if ln_survival(mid) > ln_tail {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return hi;
    }
    // walk from the asymptotic start with P(V > n) = P(V > n - 1) (1 - index / n)
    let mut ln_s = ln_survival(n);
    while ln_s > ln_tail {
        n += 1.0;
        ln_s += (-index / n).ln_1p();
    }
    while n > 1.0 {
        let prev = ln_s - (-index / n).ln_1p();
        if prev > ln_tail {
            break;
        }
        n -= 1.0;
        ln_s = prev;
    }
    n
}

/// One frailty draw for `family` at `theta`.
pub fn sample_frailty<R: RngCore>(family: FamilyId, theta: f64, rng: &mut R) -> Result<f64> {
    let frailty = Frailty::new(family, theta)?;
    // route through the counter generator so every sampler sees the same uniforms
    let mut local = CounterRng::from_key(rng.next_u64());
    Ok(frailty.sample(&mut local))
}
