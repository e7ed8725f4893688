//! Marginal multivariate Value-at-Risk on the copula level set `C(u) = alpha`.
//!
//! Component `i` is the average of the marginal quantile `q_i(u)` against the
//! level-set weight
//!
//! ```text
//! w(u) = (d - 1) / phi(alpha)^(d-1) * (-phi'(u)) * (phi(alpha) - phi(u))^(d-2),   u in [alpha, 1]
//! ```
//!
//! which integrates to one. [`var_generic`] evaluates that integral directly
//! through [`CopulaSpec::beta_kernel`]; the `var_<family>` functions use the
//! family-specific closed forms (Gumbel-Hougaard and Joe after the changes of
//! variable `t = -ln u` and `t = 1 - u`). The two routes are independent and
//! are checked against each other in the tests.

use std::fmt;
use std::sync::{Arc, LazyLock};

use crate::copula::{check_alpha, CopulaSpec, FamilyId};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadConfig};

type QuantileMap = dyn Fn(f64) -> f64 + Send + Sync;

/// Marginal quantile function `u -> VaR_u(X_i)` on `(0, 1)`.
///
/// Two handles compare as the same margin (see [`QuantileFn::same_as`]) only
/// when they share the underlying function, which lets identical margins be
/// integrated once.
#[derive(Clone)]
pub struct QuantileFn {
    map: Arc<QuantileMap>,
    label: String,
}

static UNIFORM: LazyLock<Arc<QuantileMap>> = LazyLock::new(|| Arc::new(|u| u));

/// Grid edge used when checking monotonicity and finiteness at construction.
const CHECK_EPS: f64 = 1e-6;
const CHECK_POINTS: usize = 1000;

impl QuantileFn {
    /// Uniform margin on [0, 1]: the identity quantile.
    pub fn uniform() -> Self {
        QuantileFn {
            map: Arc::clone(&UNIFORM),
            label: "uniform".into(),
        }
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::Argument(format!("constant margin must be finite, got {c}")));
        }
        Ok(QuantileFn {
            map: Arc::new(move |_| c),
            label: format!("constant({c})"),
        })
    }

    /// Wrap an arbitrary quantile function, checking that it is finite and
    /// nondecreasing on a grid over `(eps, 1 - eps)`.
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let label = label.into();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=CHECK_POINTS {
            let u = CHECK_EPS + (1.0 - 2.0 * CHECK_EPS) * i as f64 / CHECK_POINTS as f64;
            let v = f(u);
            if !v.is_finite() {
                return Err(Error::Argument(format!(
                    "quantile function '{label}' is not finite at u = {u}"
                )));
            }
            if v < prev {
                return Err(Error::Argument(format!(
                    "quantile function '{label}' decreases near u = {u}"
                )));
            }
            prev = v;
        }
        Ok(QuantileFn {
            map: Arc::new(f),
            label,
        })
    }

    /// Piecewise-linear quantile through `(u, q)` knots that are strictly
    /// increasing in both coordinates; linear extrapolation beyond the ends.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Argument("tabulated margin needs at least two knots".into()));
        }
        for (i, w) in knots.windows(2).enumerate() {
            let ((u0, q0), (u1, q1)) = (w[0], w[1]);
            if !(u0.is_finite() && u1.is_finite() && q0.is_finite() && q1.is_finite()) {
                return Err(Error::Argument(format!("non-finite knot near row {}", i + 1)));
            }
            if !(u1 > u0 && q1 > q0) {
                return Err(Error::Argument(format!(
                    "tabulated margin must be strictly increasing in u and q (rows {} and {})",
                    i + 1,
                    i + 2
                )));
            }
        }
        if knots[0].0 < 0.0 || knots[knots.len() - 1].0 > 1.0 {
            return Err(Error::Argument("tabulated u values must lie in [0, 1]".into()));
        }
        let label = format!("tabulated({} knots)", knots.len());
        let knots: Arc<[(f64, f64)]> = knots.into();
        Ok(QuantileFn {
            map: Arc::new(move |u| interpolate(&knots, u)),
            label,
        })
    }

    /// The margin `c * q(u)`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Argument(format!("scale factor must be positive, got {c}")));
        }
        let inner = Arc::clone(&self.map);
        Ok(QuantileFn {
            map: Arc::new(move |u| c * inner(u)),
            label: format!("{c}*{}", self.label),
        })
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        (self.map)(u)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn same_as(&self, other: &QuantileFn) -> bool {
        Arc::ptr_eq(&self.map, &other.map)
    }
}

impl fmt::Debug for QuantileFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("QuantileFn").field(&self.label).finish()
    }
}

fn interpolate(knots: &[(f64, f64)], u: f64) -> f64 {
    let idx = knots.partition_point(|&(k, _)| k <= u);
    let i = idx.clamp(1, knots.len() - 1);
    let (u0, q0) = knots[i - 1];
    let (u1, q1) = knots[i];
    q0 + (q1 - q0) * (u - u0) / (u1 - u0)
}

/// `d` handles to the same uniform margin.
pub fn uniform_margins(d: usize) -> Vec<QuantileFn> {
    vec![QuantileFn::uniform(); d]
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarResult {
    pub alpha: f64,
    pub components: Vec<f64>,
    pub abs_error_estimate: Vec<f64>,
    pub spec: CopulaSpec,
}

/// Largest double below one; quantiles are never requested at `u = 1`.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Integrate `q_i(to_u(t)) * weight(t)` over `[lo, hi]` for every margin,
/// reusing the result for margins that share a function.
fn integrate_components<M, W>(
    spec: &CopulaSpec,
    margins: &[QuantileFn],
    alpha: f64,
    cfg: &QuadConfig,
    (lo, hi): (f64, f64),
    to_u: M,
    weight: W,
) -> Result<VarResult>
where
    M: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    let mut components: Vec<f64> = Vec::with_capacity(margins.len());
    let mut errors: Vec<f64> = Vec::with_capacity(margins.len());
    for (i, margin) in margins.iter().enumerate() {
        if let Some(j) = margins[..i].iter().position(|m| m.same_as(margin)) {
            components.push(components[j]);
            errors.push(errors[j]);
            continue;
        }
        let r = integrate(|t| margin.eval(to_u(t)) * weight(t), lo, hi, cfg)?;
        components.push(r.value);
        errors.push(r.abs_error);
    }
    Ok(VarResult {
        alpha,
        components,
        abs_error_estimate: errors,
        spec: *spec,
    })
}

fn check_common(spec: &CopulaSpec, margins: &[QuantileFn], alpha: f64, cfg: &QuadConfig) -> Result<()> {
    check_alpha(alpha)?;
    cfg.validate()?;
    if margins.len() != spec.dim() {
        return Err(Error::Dimension {
            expected: spec.dim(),
            got: margins.len(),
        });
    }
    Ok(())
}

fn check_family(spec: &CopulaSpec, expected: FamilyId) -> Result<()> {
    if spec.family() == expected {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "expected a {expected} copula, got {}",
            spec.family()
        )))
    }
}

/// VaR components from the generator-based level-set integral, valid for any family.
pub fn var_generic(
    spec: &CopulaSpec,
    margins: &[QuantileFn],
    alpha: f64,
    cfg: &QuadConfig,
) -> Result<VarResult> {
    check_common(spec, margins, alpha, cfg)?;
    let phi_alpha = spec.phi_unchecked(alpha);
    let d = spec.dim() as i32;
    let scale = (d - 1) as f64 / phi_alpha.powi(d - 1);
    integrate_components(
        spec,
        margins,
        alpha,
        cfg,
        (alpha, 1.0),
        |u| u,
        |u| scale * spec.beta_kernel_unchecked(u, alpha, phi_alpha),
    )
}

/// `(d - 1) / phi(alpha)^(d-1) * int_alpha^1 beta_d(u, alpha) du`, which is one
/// for every valid copula. Useful as a diagnostic of the quadrature.
pub fn kernel_mass(spec: &CopulaSpec, alpha: f64, cfg: &QuadConfig) -> Result<f64> {
    let one = QuantileFn::constant(1.0)?;
    let margins = vec![one; spec.dim()];
    let r = var_generic(spec, &margins, alpha, cfg)?;
    Ok(r.components[0])
}

/// Clayton closed form.
pub fn var_clayton(
    spec: &CopulaSpec,
    margins: &[QuantileFn],
    alpha: f64,
    cfg: &QuadConfig,
) -> Result<VarResult> {
    check_family(spec, FamilyId::Clayton)?;
    check_common(spec, margins, alpha, cfg)?;
    let th = spec.theta();
    let d = spec.dim() as i32;
    // alpha^-th - 1 and u^-th - 1, kept in expm1 form near one
    let alpha_gap = (-th * alpha.ln()).exp_m1();
    let prefactor = (d - 1) as f64 * th / alpha_gap.powi(d - 1);
    integrate_components(spec, margins, alpha, cfg, (alpha, 1.0), |u| u, |u| {
        let bracket = alpha_gap - (-th * u.ln()).exp_m1();
        prefactor * ((-th - 1.0) * u.ln()).exp() * bracket.max(0.0).powi(d - 2)
    })
}

/// Clayton closed form with uniform margins; all components are equal.
pub fn var_clayton_uniform(theta: f64, d: usize, alpha: f64, cfg: &QuadConfig) -> Result<f64> {
    CopulaSpec::new(FamilyId::Clayton, theta, d)?;
    check_alpha(alpha)?;
    cfg.validate()?;
    let d = d as i32;
    let alpha_gap = (-theta * alpha.ln()).exp_m1();
    let prefactor = (d - 1) as f64 * theta / alpha_gap.powi(d - 1);
    let r = integrate(
        |u| {
            let bracket = alpha_gap - (-theta * u.ln()).exp_m1();
            prefactor * bracket.max(0.0).powi(d - 2) * (-theta * u.ln()).exp()
        },
        alpha,
        1.0,
        cfg,
    )?;
    Ok(r.value)
}

/// Frank closed form, defined for `theta > 0`.
pub fn var_frank(
    spec: &CopulaSpec,
    margins: &[QuantileFn],
    alpha: f64,
    cfg: &QuadConfig,
) -> Result<VarResult> {
    check_family(spec, FamilyId::Frank)?;
    let th = spec.theta();
    if th <= 0.0 {
        return Err(Error::domain(format!(
            "the Frank VaR expression holds for 0 < theta < inf, got theta = {th}"
        )));
    }
    check_common(spec, margins, alpha, cfg)?;
    let d = spec.dim() as i32;
    let phi_alpha = spec.phi_unchecked(alpha);
    let prefactor = (d - 1) as f64 / phi_alpha.powi(d - 1);
    // ln(expm1(-th u) / expm1(-th alpha)) = ln1p(-expm1(-th (u - alpha)) / expm1(th alpha))
    let inv_alpha = -1.0 / (th * alpha).exp_m1();
    integrate_components(spec, margins, alpha, cfg, (alpha, 1.0), |u| u, |u| {
        let slope = th / (th * u).exp_m1();
        let log_ratio = (inv_alpha * (-th * (u - alpha)).exp_m1()).ln_1p();
        prefactor * slope * log_ratio.max(0.0).powi(d - 2)
    })
}

/// Gumbel-Hougaard closed form in the variable `t = -ln u` on `[0, -ln alpha]`.
pub fn var_gumbel(
    spec: &CopulaSpec,
    margins: &[QuantileFn],
    alpha: f64,
    cfg: &QuadConfig,
) -> Result<VarResult> {
    check_family(spec, FamilyId::GumbelHougaard)?;
    check_common(spec, margins, alpha, cfg)?;
    let th = spec.theta();
    let d = spec.dim() as i32;
    let upper = -alpha.ln();
    let upper_pow = upper.powf(th);
    let prefactor = th * (d - 1) as f64 / upper_pow.powi(d - 1);
    integrate_components(
        spec,
        margins,
        alpha,
        cfg,
        (0.0, upper),
        |t| (-t).exp().min(BELOW_ONE),
        |t| {
            let bracket = (upper_pow - t.powf(th)).max(0.0);
            prefactor * t.powf(th - 1.0) * bracket.powi(d - 2)
        },
    )
}

/// Joe closed form in the variable `t = 1 - u` on `[0, 1 - alpha]`.
pub fn var_joe(
    spec: &CopulaSpec,
    margins: &[QuantileFn],
    alpha: f64,
    cfg: &QuadConfig,
) -> Result<VarResult> {
    check_family(spec, FamilyId::Joe)?;
    check_common(spec, margins, alpha, cfg)?;
    let th = spec.theta();
    let d = spec.dim() as i32;
    let log_alpha_term = (-(th * (-alpha).ln_1p()).exp()).ln_1p(); // ln(1 - (1-alpha)^th)
    let phi_alpha = -log_alpha_term;
    let prefactor = th * (d - 1) as f64 / phi_alpha.powi(d - 1);
    integrate_components(
        spec,
        margins,
        alpha,
        cfg,
        (0.0, 1.0 - alpha),
        |t| (1.0 - t).min(BELOW_ONE),
        |t| {
            let t_pow = (th * t.ln()).exp();
            let log_ratio = ((-t_pow).ln_1p() - log_alpha_term).max(0.0);
            prefactor * (t_pow / t) / (1.0 - t_pow) * log_ratio.powi(d - 2)
        },
    )
}

/// Ali-Mikhail-Haq closed form; bivariate only.
pub fn var_amh(theta: f64, margins: &[QuantileFn], alpha: f64, cfg: &QuadConfig) -> Result<VarResult> {
    if margins.len() != 2 {
        return Err(Error::BivariateOnly(margins.len()));
    }
    let spec = CopulaSpec::new(FamilyId::AliMikhailHaq, theta, 2)?;
    check_common(&spec, margins, alpha, cfg)?;
    let prefactor = (1.0 - theta) / ((-theta * (1.0 - alpha)).ln_1p() - alpha.ln());
    integrate_components(&spec, margins, alpha, cfg, (alpha, 1.0), |u| u, |u| {
        prefactor / (u * (1.0 - theta * (1.0 - u)))
    })
}

/// Family-specific closed form matching `spec.family()`.
pub fn var_closed_form(
    spec: &CopulaSpec,
    margins: &[QuantileFn],
    alpha: f64,
    cfg: &QuadConfig,
) -> Result<VarResult> {
    match spec.family() {
        FamilyId::Clayton => var_clayton(spec, margins, alpha, cfg),
        FamilyId::Frank => var_frank(spec, margins, alpha, cfg),
        FamilyId::GumbelHougaard => var_gumbel(spec, margins, alpha, cfg),
        FamilyId::Joe => var_joe(spec, margins, alpha, cfg),
        FamilyId::AliMikhailHaq => var_amh(spec.theta(), margins, alpha, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: FamilyId, theta: f64, dim: usize) -> CopulaSpec {
        CopulaSpec::new(family, theta, dim).unwrap()
    }

    fn cfg() -> QuadConfig {
        QuadConfig::default()
    }

    #[test]
    fn table_theoretical_values() {
        let c = cfg();
        let u3 = uniform_margins(3);
        let clayton = var_clayton_uniform(2.0, 3, 0.05, &c).unwrap();
        assert!((clayton - 0.123961).abs() <= 5e-6);
        let cases = [
            (FamilyId::Clayton, 2.0, 0.123_960_695_389),
            (FamilyId::Frank, 5.74, 0.237_818_239_507),
            (FamilyId::GumbelHougaard, 2.0, 0.251_828_578_717),
            (FamilyId::Joe, 2.4, 0.317_352_708_038),
        ];
        for (family, theta, reference) in cases {
            let s = spec(family, theta, 3);
            let closed = var_closed_form(&s, &u3, 0.05, &c).unwrap();
            let generic = var_generic(&s, &u3, 0.05, &c).unwrap();
            for v in closed.components.iter().chain(&generic.components) {
                assert!((v - reference).abs() < 1e-10, "{family}: {v} vs {reference}");
            }
        }
    }

    #[test]
    fn clayton_bivariate_hand_antiderivative() {
        let expected = 38.0 / 399.0;
        let c = cfg();
        assert!((var_clayton_uniform(2.0, 2, 0.05, &c).unwrap() - expected).abs() < 1e-12);
        let s = spec(FamilyId::Clayton, 2.0, 2);
        let g = var_generic(&s, &uniform_margins(2), 0.05, &c).unwrap();
        assert!((g.components[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn clayton_uniform_matches_general_form() {
        let c = cfg();
        for i in 1..20 {
            let alpha = i as f64 / 20.0;
            let s = spec(FamilyId::Clayton, 2.0, 3);
            let full = var_clayton(&s, &uniform_margins(3), alpha, &c).unwrap();
            let uniform = var_clayton_uniform(2.0, 3, alpha, &c).unwrap();
            assert!((full.components[0] - uniform).abs() < 1e-10);
        }
    }

    #[test]
    fn clayton_near_one_concentrates_at_alpha() {
        let c = cfg();
        for theta in [0.3, 2.0, 10.0] {
            let v = var_clayton_uniform(theta, 2, 0.999, &c).unwrap();
            assert!((v - 0.9995).abs() < 1e-3, "{theta}: {v}");
        }
    }

    #[test]
    fn amh_independence_value() {
        let alpha: f64 = 0.05;
        let expected = (1.0 - alpha) / -alpha.ln();
        let r = var_amh(0.0, &uniform_margins(2), alpha, &cfg()).unwrap();
        assert!((r.components[0] - expected).abs() < 1e-12);
        assert!((r.components[0] - 0.317_117_790_660_567).abs() < 1e-12);
    }

    #[test]
    fn independence_members_agree() {
        // Gumbel and Joe at theta = 1 and AMH at 0 are all the product copula.
        let c = cfg();
        let u2 = uniform_margins(2);
        let amh = var_amh(0.0, &u2, 0.2, &c).unwrap().components[0];
        let gumbel = var_gumbel(&spec(FamilyId::GumbelHougaard, 1.0, 2), &u2, 0.2, &c).unwrap();
        let joe = var_joe(&spec(FamilyId::Joe, 1.0, 2), &u2, 0.2, &c).unwrap();
        assert!((gumbel.components[0] - amh).abs() < 1e-10);
        assert!((joe.components[0] - amh).abs() < 1e-10);
    }

    #[test]
    fn constant_margins_return_the_constant() {
        let c = cfg();
        let k = QuantileFn::constant(4.25).unwrap();
        for s in [
            spec(FamilyId::Clayton, 2.0, 2),
            spec(FamilyId::Frank, 5.74, 3),
            spec(FamilyId::GumbelHougaard, 2.0, 3),
            spec(FamilyId::Joe, 2.4, 4),
            spec(FamilyId::AliMikhailHaq, 0.5, 2),
        ] {
            let margins = vec![k.clone(); s.dim()];
            for r in [
                var_generic(&s, &margins, 0.05, &c).unwrap(),
                var_closed_form(&s, &margins, 0.05, &c).unwrap(),
            ] {
                for v in &r.components {
                    assert!((v - 4.25).abs() < 1e-9, "{s:?}: {v}");
                }
            }
        }
    }

    #[test]
    fn kernel_mass_examples() {
        let c = cfg();
        for (s, alpha) in [
            (spec(FamilyId::Clayton, 2.0, 3), 0.05),
            (spec(FamilyId::Joe, 2.4, 5), 0.5),
            (spec(FamilyId::GumbelHougaard, 3.0, 2), 0.01),
        ] {
            let m = kernel_mass(&s, alpha, &c).unwrap();
            assert!((m - 1.0).abs() <= 1e-10, "{s:?}: {m}");
        }
    }

    #[test]
    fn argument_errors() {
        let c = cfg();
        let s = spec(FamilyId::Clayton, 2.0, 3);
        assert!(matches!(
            var_generic(&s, &uniform_margins(2), 0.05, &c),
            Err(Error::Dimension { .. })
        ));
        assert!(var_generic(&s, &uniform_margins(3), 1.0, &c).is_err());
        assert!(var_generic(&s, &uniform_margins(3), 0.0, &c).is_err());
        assert!(var_frank(&s, &uniform_margins(3), 0.05, &c).is_err());
        let neg = spec(FamilyId::Frank, -2.0, 3);
        assert!(matches!(
            var_frank(&neg, &uniform_margins(3), 0.05, &c),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            var_amh(0.5, &uniform_margins(3), 0.05, &c),
            Err(Error::BivariateOnly(3))
        ));
        let tight = QuadConfig::new(1e-15, 1e-15, 12).unwrap();
        assert!(matches!(
            var_generic(&spec(FamilyId::GumbelHougaard, 1.7, 3), &uniform_margins(3), 0.05, &tight),
            Err(Error::Quadrature { .. })
        ));
    }

    #[test]
    fn identical_margins_give_bitwise_equal_components() {
        let s = spec(FamilyId::Frank, 5.74, 3);
        let r = var_frank(&s, &uniform_margins(3), 0.05, &cfg()).unwrap();
        assert_eq!(r.components[0].to_bits(), r.components[1].to_bits());
        assert_eq!(r.components[1].to_bits(), r.components[2].to_bits());
    }

    #[test]
    fn distinct_margins_are_integrated_separately() {
        let s = spec(FamilyId::Clayton, 2.0, 2);
        let margins = vec![QuantileFn::uniform(), QuantileFn::uniform().scaled(2.0).unwrap()];
        let r = var_clayton(&s, &margins, 0.05, &cfg()).unwrap();
        assert!((r.components[1] - 2.0 * r.components[0]).abs() < 1e-12);
    }

    #[test]
    fn quantile_fn_validation() {
        assert!(QuantileFn::from_fn("down", |u| 1.0 - u).is_err());
        assert!(QuantileFn::from_fn("log", |u: f64| -(1.0 - u).ln()).is_ok());
        assert!(QuantileFn::from_fn("blowup", |u: f64| 1.0 / (u - 0.5)).is_err());
        assert!(QuantileFn::tabulated(vec![(0.1, 1.0)]).is_err());
        assert!(QuantileFn::tabulated(vec![(0.1, 1.0), (0.1, 2.0)]).is_err());
        assert!(QuantileFn::tabulated(vec![(0.1, 2.0), (0.2, 1.0)]).is_err());
        let t = QuantileFn::tabulated(vec![(0.1, 1.0), (0.5, 3.0), (0.9, 4.0)]).unwrap();
        assert!((t.eval(0.3) - 2.0).abs() < 1e-15);
        assert!((t.eval(0.7) - 3.5).abs() < 1e-15);
        assert!((t.eval(0.95) - 4.125).abs() < 1e-15);
        assert!((t.eval(0.05) - 0.75).abs() < 1e-15);
        assert!(QuantileFn::uniform().same_as(&QuantileFn::uniform()));
        assert!(!t.same_as(&t.scaled(1.0).unwrap()));
    }
}
