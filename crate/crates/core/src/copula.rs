//! Archimedean copula families: generators, their derivatives and inverses,
//! the copula distribution function and the level-set kernel.
//!
//! Every family here is strict: the generator diverges at `t = 0`, so the
//! inverse generator maps `[0, inf)` onto `(0, 1]`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyId {
    Clayton,
    Frank,
    GumbelHougaard,
    Joe,
    AliMikhailHaq,
}

impl FamilyId {
    pub const ALL: [FamilyId; 5] = [
        FamilyId::Clayton,
        FamilyId::Frank,
        FamilyId::GumbelHougaard,
        FamilyId::Joe,
        FamilyId::AliMikhailHaq,
    ];

    /// Short lowercase key used in configuration files and reports.
    pub fn key(self) -> &'static str {
        match self {
            FamilyId::Clayton => "clayton",
            FamilyId::Frank => "frank",
            FamilyId::GumbelHougaard => "gumbel",
            FamilyId::Joe => "joe",
            FamilyId::AliMikhailHaq => "amh",
        }
    }

    /// Human-readable parameter domain, used in error messages.
    pub fn theta_domain(self) -> &'static str {
        match self {
            FamilyId::Clayton => "theta > 0",
            FamilyId::Frank => "theta != 0",
            FamilyId::GumbelHougaard | FamilyId::Joe => "theta >= 1",
            FamilyId::AliMikhailHaq => "-1 <= theta < 1",
        }
    }

    pub fn accepts_theta(self, theta: f64) -> bool {
        if !theta.is_finite() {
            return false;
        }
        match self {
            FamilyId::Clayton => theta > 0.0,
            FamilyId::Frank => theta != 0.0,
            FamilyId::GumbelHougaard | FamilyId::Joe => theta >= 1.0,
            // theta = 1 makes the generator identically zero.
            FamilyId::AliMikhailHaq => (-1.0..1.0).contains(&theta),
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FamilyId::Clayton => "Clayton",
            FamilyId::Frank => "Frank",
            FamilyId::GumbelHougaard => "Gumbel-Hougaard",
            FamilyId::Joe => "Joe",
            FamilyId::AliMikhailHaq => "Ali-Mikhail-Haq",
        };
        f.write_str(name)
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clayton" => Ok(FamilyId::Clayton),
            "frank" => Ok(FamilyId::Frank),
            "gumbel" | "gumbel-hougaard" | "gumbelhougaard" => Ok(FamilyId::GumbelHougaard),
            "joe" => Ok(FamilyId::Joe),
            "amh" | "ali-mikhail-haq" | "alimikhailhaq" => Ok(FamilyId::AliMikhailHaq),
            other => Err(Error::Argument(format!(
                "unknown copula family '{other}' (expected clayton, frank, gumbel, joe or amh)"
            ))),
        }
    }
}

/// A validated family, dependence parameter and dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaSpec {
    family: FamilyId,
    theta: f64,
    dim: usize,
}

impl CopulaSpec {
    pub fn new(family: FamilyId, theta: f64, dim: usize) -> Result<Self> {
        if !family.accepts_theta(theta) {
            return Err(Error::domain(format!(
                "{family} requires {}, got theta = {theta}",
                family.theta_domain()
            )));
        }
        if dim < 2 {
            return Err(Error::Argument(format!("dimension must be at least 2, got {dim}")));
        }
        if family == FamilyId::AliMikhailHaq && dim != 2 {
            return Err(Error::BivariateOnly(dim));
        }
        Ok(CopulaSpec { family, theta, dim })
    }

    pub fn family(&self) -> FamilyId {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Generator `phi(t)` for `t` in `(0, 1]`.
    pub fn phi(&self, t: f64) -> Result<f64> {
        self.check_generator_arg(t, true)?;
        Ok(self.phi_unchecked(t))
    }

    /// Derivative of the generator for `t` in `(0, 1)`.
    pub fn phi_prime(&self, t: f64) -> Result<f64> {
        self.check_generator_arg(t, false)?;
        Ok(self.phi_prime_unchecked(t))
    }

    /// Inverse generator on `[0, inf]`; `phi_inverse(0) = 1`.
    pub fn phi_inverse(&self, s: f64) -> Result<f64> {
        if s.is_nan() || s < 0.0 {
            return Err(Error::domain(format!(
                "inverse generator needs s >= 0, got {s}"
            )));
        }
        Ok(self.phi_inverse_unchecked(s))
    }

    /// Copula distribution function at a point of `[0, 1]^d`.
    pub fn copula_cdf(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: u.len(),
            });
        }
        if let Some(bad) = u.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::domain(format!(
                "copula coordinates must lie in [0, 1], got {bad}"
            )));
        }
        Ok(self.cdf_unchecked(u))
    }

    /// Level-set kernel `-phi'(u) * (phi(alpha) - phi(u))^(d-2)` for `u` in `[alpha, 1)`.
    ///
    /// For `d = 2` the bracket power is taken as one even where its base is
    /// zero (`u = alpha`).
    pub fn beta_kernel(&self, u: f64, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        if !(u >= alpha && u < 1.0) {
            return Err(Error::domain(format!(
                "kernel argument must satisfy alpha <= u < 1, got u = {u}, alpha = {alpha}"
            )));
        }
        Ok(self.beta_kernel_unchecked(u, alpha, self.phi_unchecked(alpha)))
    }

    pub(crate) fn beta_kernel_unchecked(&self, u: f64, alpha: f64, phi_alpha: f64) -> f64 {
        let slope = -self.phi_prime_unchecked(u);
        if self.dim == 2 {
            return slope;
        }
        debug_assert!(u >= alpha);
        let gap = (phi_alpha - self.phi_unchecked(u)).max(0.0);
        slope * gap.powi(self.dim as i32 - 2)
    }

    fn check_generator_arg(&self, t: f64, closed_at_one: bool) -> Result<()> {
        if t == 0.0 {
            return Err(Error::InfiniteGenerator {
                family: self.family,
                t,
            });
        }
        let ok = if closed_at_one {
            t > 0.0 && t <= 1.0
        } else {
            t > 0.0 && t < 1.0
        };
        if ok {
            Ok(())
        } else {
            let interval = if closed_at_one { "(0, 1]" } else { "(0, 1)" };
            Err(Error::domain(format!(
                "generator argument must lie in {interval}, got {t}"
            )))
        }
    }

    pub(crate) fn phi_unchecked(&self, t: f64) -> f64 {
        if t == 1.0 {
            return 0.0;
        }
        let th = self.theta;
        match self.family {
            FamilyId::Clayton => (-th * t.ln()).exp_m1() / th,
            FamilyId::Frank => {
                let ratio = (-th * t).exp_m1() / (-th).exp_m1();
                if ratio < 0.5 {
                    -ratio.ln()
                } else {
                    -frank_ratio_m1(th, t).ln_1p()
                }
            }
            FamilyId::GumbelHougaard => (-t.ln()).powf(th),
            FamilyId::Joe => {
                // -ln(1 - a) with a = (1 - t)^th, accurate at both ends
                let log_a = th * (-t).ln_1p();
                let a = log_a.exp();
                if a < 0.5 {
                    -(-a).ln_1p()
                } else {
                    -(-log_a.exp_m1()).ln()
                }
            }
            FamilyId::AliMikhailHaq => (-th * (1.0 - t)).ln_1p() - t.ln(),
        }
    }

    pub(crate) fn phi_prime_unchecked(&self, t: f64) -> f64 {
        let th = self.theta;
        match self.family {
            FamilyId::Clayton => -((-th - 1.0) * t.ln()).exp(),
            FamilyId::Frank => -th / (th * t).exp_m1(),
            FamilyId::GumbelHougaard => -th * (-t.ln()).powf(th - 1.0) / t,
            FamilyId::Joe => {
                let log_one_minus = (-t).ln_1p();
                let tail = (th * log_one_minus).exp_m1();
                -th * ((th - 1.0) * log_one_minus).exp() / -tail
            }
            FamilyId::AliMikhailHaq => -(1.0 - th) / (t * (1.0 - th * (1.0 - t))),
        }
    }

    pub(crate) fn phi_inverse_unchecked(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        let th = self.theta;
        match self.family {
            FamilyId::Clayton => (-(th * s).ln_1p() / th).exp(),
            FamilyId::Frank => {
                let y = (-s).exp() * (-th).exp_m1();
                if th > 0.0 && y < -0.5 {
                    // 1 + y = e^-th + expm1(-th) expm1(-s), both terms positive
                    -((-th).exp() + (-th).exp_m1() * (-s).exp_m1()).ln() / th
                } else {
                    -y.ln_1p() / th
                }
            }
            FamilyId::GumbelHougaard => (-s.powf(1.0 / th)).exp(),
            FamilyId::Joe => {
                // ln(1 - e^-s)
                let log_tail = if s < std::f64::consts::LN_2 {
                    (-(-s).exp_m1()).ln()
                } else {
                    (-(-s).exp()).ln_1p()
                };
                -(log_tail / th).exp_m1()
            }
            FamilyId::AliMikhailHaq => (1.0 - th) / (s.exp() - th),
        }
    }

    /// Copula value from the closed-form expressions; `u` must already be
    /// validated.
    pub(crate) fn cdf_unchecked(&self, u: &[f64]) -> f64 {
        if u.contains(&0.0) {
            return 0.0;
        }
        let th = self.theta;
        let value = match self.family {
            FamilyId::Clayton => {
                let sum: f64 = u.iter().map(|&x| (-th * x.ln()).exp_m1()).sum();
                (-sum.ln_1p() / th).exp()
            }
            FamilyId::Frank => self.phi_inverse_unchecked(u.iter().map(|&x| self.phi_unchecked(x)).sum()),
            FamilyId::GumbelHougaard => {
                let sum: f64 = u.iter().map(|&x| (-x.ln()).powf(th)).sum();
                (-sum.powf(1.0 / th)).exp()
            }
            FamilyId::Joe => {
                // 1 - prod(1 - (1 - u_i)^th), formed through logs to keep the
                // digits of terms near u_i = 1
                let log_prod: f64 = u
                    .iter()
                    .map(|&x| (-(th * (-x).ln_1p()).exp()).ln_1p())
                    .sum();
                let tail = -log_prod.exp_m1();
                -(tail.ln() / th).exp_m1()
            }
            FamilyId::AliMikhailHaq => {
                let (a, b) = (u[0], u[1]);
                a * b / (1.0 - th * (1.0 - a) * (1.0 - b))
            }
        };
        value.clamp(0.0, 1.0)
    }
}

/// `expm1(-th t) / expm1(-th) - 1`, without cancellation as `t -> 1`.
fn frank_ratio_m1(th: f64, t: f64) -> f64 {
    let s = 1.0 - t;
    if th > 0.0 {
        -(-th * t).exp() * (-th * s).exp_m1() / (-th).exp_m1()
    } else {
        -(th * s).exp_m1() / th.exp_m1()
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "confidence level must lie in (0, 1), got {alpha}"
        )))
    }
}
