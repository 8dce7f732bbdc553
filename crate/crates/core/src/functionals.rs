//! Closed-form statistical functionals of discrete distributions.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distribution::{BivariateDiscreteDistribution, DiscreteDistribution};
use crate::error::{check_level, Error, Result};

/// A point of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Maps the infinities onto the `f64` infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::NegInfinity => f64::NEG_INFINITY,
            ExtendedReal::Finite(x) => x,
            ExtendedReal::PosInfinity => f64::INFINITY,
        }
    }

    fn rank(self) -> (i8, f64) {
        match self {
            ExtendedReal::NegInfinity => (-1, 0.0),
            ExtendedReal::Finite(x) => (0, x),
            ExtendedReal::PosInfinity => (1, 0.0),
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (a, x) = self.rank();
        let (b, y) = other.rank();
        match a.cmp(&b) {
            Ordering::Equal => x.partial_cmp(&y),
            ord => Some(ord),
        }
    }
}

impl PartialEq<f64> for ExtendedReal {
    fn eq(&self, other: &f64) -> bool {
        self.to_f64() == *other
    }
}

impl PartialOrd<f64> for ExtendedReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.to_f64().partial_cmp(other)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInfinity => f.write_str("-inf"),
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::PosInfinity => f.write_str("inf"),
        }
    }
}

/// The set of α-quantiles `[q_α^−(F), q_α^+(F)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileInterval {
    pub lower: ExtendedReal,
    pub upper: ExtendedReal,
}

/// Lower and upper α-quantile.
///
/// `q_0^−` is `−∞`; every other endpoint is a support atom, with `q_1^+`
/// taken as the largest atom.
pub fn quantiles(dist: &DiscreteDistribution, alpha: f64) -> Result<QuantileInterval> {
    check_level("alpha", alpha, false, false)?;
    let values = dist.values();
    let cum = dist.cumulative();
    let last = values.len() - 1;
    let lower = if alpha == 0.0 {
        ExtendedReal::NegInfinity
    } else {
        let k = cum.partition_point(|&c| c < alpha).min(last);
        ExtendedReal::Finite(values[k])
    };
    let k = cum.partition_point(|&c| c <= alpha).min(last);
    let upper = ExtendedReal::Finite(values[k]);
    Ok(QuantileInterval { lower, upper })
}

/// Lower α-quantile (Value at Risk) for α in (0, 1].
pub fn quantile_lower(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_level("alpha", alpha, true, false)?;
    let k = dist
        .cumulative()
        .partition_point(|&c| c < alpha)
        .min(dist.len() - 1);
    Ok(dist.values()[k])
}

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Nonnegative weight on the unit interval of quantile levels.
#[derive(Clone)]
pub struct WeightFunction {
    name: String,
    density: Density,
    antiderivative: Option<Density>,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction")
            .field("name", &self.name)
            .field("exact", &self.antiderivative.is_some())
            .finish()
    }
}

impl WeightFunction {
    /// A weight given by its density and, optionally, an exact antiderivative.
    pub fn custom<W>(name: impl Into<String>, density: W, antiderivative: Option<Density>) -> Self
    where
        W: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            density: Arc::new(density),
            antiderivative,
        }
    }

    /// `𝟙[0,1]`; recovers the mean.
    pub fn uniform() -> Self {
        Self {
            name: "uniform".into(),
            density: Arc::new(|g| if (0.0..=1.0).contains(&g) { 1.0 } else { 0.0 }),
            antiderivative: Some(Arc::new(|g: f64| g.clamp(0.0, 1.0))),
        }
    }

    /// `𝟙[0,α]/α`, the lower Expected Shortfall.
    pub fn es_lower(alpha: f64) -> Result<Self> {
        check_level("alpha", alpha, true, false)?;
        Ok(Self::band("es_lower", 0.0, alpha))
    }

    /// `𝟙[α,1]/(1−α)`, the upper Expected Shortfall.
    pub fn es_upper(alpha: f64) -> Result<Self> {
        check_level("alpha", alpha, false, true)?;
        Ok(Self::band("es_upper", alpha, 1.0))
    }

    /// `𝟙[α,β]/(β−α)`, the Range Value at Risk.
    pub fn rvar(alpha: f64, beta: f64) -> Result<Self> {
        check_level("alpha", alpha, false, true)?;
        check_level("beta", beta, true, false)?;
        if alpha >= beta {
            return Err(Error::InvalidLevel {
                name: "beta",
                value: beta,
            });
        }
        Ok(Self::band("rvar", alpha, beta))
    }

    fn band(name: &str, lo: f64, hi: f64) -> Self {
        let width = hi - lo;
        Self {
            name: format!("{name}({lo},{hi})"),
            density: Arc::new(move |g| {
                if (lo..=hi).contains(&g) {
                    1.0 / width
                } else {
                    0.0
                }
            }),
            antiderivative: Some(Arc::new(move |g: f64| (g.clamp(lo, hi) - lo) / width)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn evaluate(&self, gamma: f64) -> f64 {
        (self.density)(gamma)
    }

    pub fn has_antiderivative(&self) -> bool {
        self.antiderivative.is_some()
    }

    /// Drops the exact antiderivative, forcing quadrature.
    pub fn without_antiderivative(mut self) -> Self {
        self.antiderivative = None;
        self
    }

    /// `∫_a^b w`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        match &self.antiderivative {
            Some(anti) => {
                let v = anti(b) - anti(a);
                if v < 0.0 {
                    return Err(Error::InvalidWeight(format!(
                        "antiderivative decreases on [{a}, {b}]"
                    )));
                }
                Ok(v)
            }
            None => adaptive_simpson(&*self.density, a, b, SIMPSON_TOLERANCE),
        }
    }
}

const SIMPSON_TOLERANCE: f64 = 1e-10;
const SIMPSON_MAX_DEPTH: u32 = 40;

fn weight_at(w: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
    let v = w(x);
    if v.is_nan() || v < 0.0 {
        return Err(Error::InvalidWeight(format!("w({x}) = {v}")));
    }
    if !v.is_finite() {
        return Err(Error::NonFiniteValue(format!("w({x}) = {v}")));
    }
    Ok(v)
}

fn adaptive_simpson(w: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let fa = weight_at(w, a)?;
    let fb = weight_at(w, b)?;
    let m = 0.5 * (a + b);
    let fm = weight_at(w, m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(w, a, b, fa, fm, fb, whole, tol, SIMPSON_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    w: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = weight_at(w, lm)?;
    let frm = weight_at(w, rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(w, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + simpson_step(w, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

/// `∫_0^1 q_γ^−(F) w(γ) dγ`.
///
/// The lower quantile is constant on each interval `(F(x_{k−1}), F(x_k)]`,
/// so the integral reduces to one weight mass per atom.
pub fn weighted_quantile_average(dist: &DiscreteDistribution, w: &WeightFunction) -> Result<f64> {
    let mut prev = 0.0;
    let mut total = 0.0;
    for (&x, &c) in dist.values().iter().zip(dist.cumulative()) {
        total += x * w.integral(prev, c)?;
        prev = c;
    }
    Ok(total)
}

/// Upper Expected Shortfall at level α.
pub fn expected_shortfall_upper(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    weighted_quantile_average(dist, &WeightFunction::es_upper(alpha)?)
}

/// Lower Expected Shortfall at level α.
pub fn expected_shortfall_lower(dist: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    weighted_quantile_average(dist, &WeightFunction::es_lower(alpha)?)
}

/// Range Value at Risk between levels α < β.
pub fn range_value_at_risk(dist: &DiscreteDistribution, alpha: f64, beta: f64) -> Result<f64> {
    weighted_quantile_average(dist, &WeightFunction::rvar(alpha, beta)?)
}

/// Moment-based statistics. Ratio statistics are `None` for point masses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentStats {
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub sharpe_ratio: Option<f64>,
}

pub fn moment_stats(dist: &DiscreteDistribution) -> MomentStats {
    let mean = dist.mean();
    let central = |k: i32| -> f64 { dist.atoms().map(|(x, p)| p * (x - mean).powi(k)).sum() };
    let variance = central(2);
    if dist.len() < 2 || variance <= 0.0 {
        return MomentStats {
            mean,
            variance: 0.0,
            skewness: None,
            kurtosis: None,
            sharpe_ratio: None,
        };
    }
    MomentStats {
        mean,
        variance,
        skewness: Some(central(3) / variance.powf(1.5)),
        kurtosis: Some(central(4) / (variance * variance)),
        sharpe_ratio: Some(mean / variance.sqrt()),
    }
}

/// `τ·E[(Y−x)⁺] − (1−τ)·E[(x−Y)⁺]`; decreasing in `x`, zero at the τ-expectile.
pub fn expectile_gap(dist: &DiscreteDistribution, tau: f64, x: f64) -> f64 {
    let mut above = 0.0;
    let mut below = 0.0;
    for (y, p) in dist.atoms() {
        if y > x {
            above += p * (y - x);
        } else {
            below += p * (x - y);
        }
    }
    tau * above - (1.0 - tau) * below
}

/// The τ-expectile.
///
/// The gap function is linear between neighbouring atoms; the segment
/// where it changes sign is located from the prefix sums and solved in
/// closed form.
pub fn expectile(dist: &DiscreteDistribution, tau: f64) -> Result<f64> {
    check_level("tau", tau, true, true)?;
    let values = dist.values();
    let masses = dist.masses();
    let n = values.len();
    if n == 1 {
        return Ok(values[0]);
    }

    // suffix sums over indices strictly above k
    let mut upper_mass = vec![0.0; n];
    let mut upper_moment = vec![0.0; n];
    for k in (0..n - 1).rev() {
        upper_mass[k] = upper_mass[k + 1] + masses[k + 1];
        upper_moment[k] = upper_moment[k + 1] + masses[k + 1] * values[k + 1];
    }

    let mut lower_mass = 0.0;
    let mut lower_moment = 0.0;
    for k in 0..n - 1 {
        lower_mass += masses[k];
        lower_moment += masses[k] * values[k];
        let gap_at = |x: f64| {
            tau * (upper_moment[k] - upper_mass[k] * x)
                - (1.0 - tau) * (lower_mass * x - lower_moment)
        };
        let next = values[k + 1];
        if gap_at(next) <= 0.0 || k == n - 2 {
            let root = (tau * upper_moment[k] + (1.0 - tau) * lower_moment)
                / (tau * upper_mass[k] + (1.0 - tau) * lower_mass);
            return Ok(root.clamp(values[k], next));
        }
    }
    unreachable!("a distribution with two or more atoms always has a final segment")
}

/// `(P((t,∞)), P((−∞,t)), P({t}))`, with the point mass obtained as the
/// complement of the two tails so the triple sums to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComposedEvaluations {
    pub upper_tail: f64,
    pub lower_tail: f64,
    pub point: f64,
}

pub fn composed_evaluations(dist: &DiscreteDistribution, t: f64) -> Result<ComposedEvaluations> {
    if !t.is_finite() {
        return Err(Error::NonFiniteValue(format!("evaluation point {t}")));
    }
    let probe = dist.probe(t);
    let lower_tail = probe.cdf_left;
    if probe.point == 0.0 {
        return Ok(ComposedEvaluations {
            upper_tail: 1.0 - lower_tail,
            lower_tail,
            point: 0.0,
        });
    }
    let upper_tail: f64 = dist.atoms().filter(|&(x, _)| x > t).map(|(_, p)| p).sum();
    let point = 1.0 - (upper_tail + lower_tail);
    Ok(ComposedEvaluations {
        upper_tail,
        lower_tail,
        point: point.max(0.0),
    })
}

/// Unnormalized atoms `(y, η({y}))` of the law of `Y` given that `X`
/// reaches its lower β-quantile, including the correction for an atom of
/// `X` at that quantile.
///
/// Atoms are listed per joint atom and are not merged.
pub fn covar_conditional_atoms(
    joint: &BivariateDiscreteDistribution,
    beta: f64,
) -> Result<Vec<(f64, f64)>> {
    check_level("beta", beta, true, true)?;
    let (law_x, _) = joint.marginals()?;
    let var = quantile_lower(&law_x, beta)?;
    let mut tail = 0.0;
    let mut at_var = 0.0;
    for &(x, _, p) in joint.atoms() {
        if x > var {
            tail += p;
        } else if x == var {
            at_var += p;
        }
    }
    let excess = 1.0 - beta;
    // 0/0 := 0 when X has no atom at its quantile
    let ratio = if at_var > 0.0 {
        ((excess - tail).clamp(0.0, at_var)) / at_var
    } else {
        0.0
    };
    Ok(joint
        .atoms()
        .iter()
        .filter_map(|&(x, y, p)| {
            let weight = if x > var {
                p
            } else if x == var {
                ratio * p
            } else {
                return None;
            };
            Some((y, weight / excess))
        })
        .collect())
}

/// The conditional law η used by CoVaR and CoES.
pub fn covar_conditional(
    joint: &BivariateDiscreteDistribution,
    beta: f64,
) -> Result<DiscreteDistribution> {
    DiscreteDistribution::new(covar_conditional_atoms(joint, beta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarCoes {
    pub covar: f64,
    pub coes: f64,
}

/// CoVaR as the lower α-quantile of η and CoES as its upper α-Expected Shortfall.
pub fn covar_coes(
    joint: &BivariateDiscreteDistribution,
    alpha: f64,
    beta: f64,
) -> Result<CovarCoes> {
    check_level("alpha", alpha, true, true)?;
    let eta = covar_conditional(joint, beta)?;
    Ok(CovarCoes {
        covar: quantile_lower(&eta, alpha)?,
        coes: expected_shortfall_upper(&eta, alpha)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dist(atoms: &[(f64, f64)]) -> DiscreteDistribution {
        DiscreteDistribution::new(atoms.iter().copied()).unwrap()
    }

    fn u4() -> DiscreteDistribution {
        DiscreteDistribution::uniform(&[1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    fn bernoulli() -> DiscreteDistribution {
        dist(&[(0.0, 0.5), (1.0, 0.5)])
    }

    fn fin(x: f64) -> ExtendedReal {
        ExtendedReal::Finite(x)
    }

    #[test]
    fn extended_real_order() {
        assert!(ExtendedReal::NegInfinity < fin(-1e300));
        assert!(fin(1e300) < ExtendedReal::PosInfinity);
        assert!(fin(1.0) < fin(2.0));
        assert_eq!(ExtendedReal::NegInfinity.to_f64(), f64::NEG_INFINITY);
    }

    #[test]
    fn quantile_examples() {
        let q = quantiles(&u4(), 0.6).unwrap();
        assert_eq!((q.lower, q.upper), (fin(3.0), fin(3.0)));
        let q = quantiles(&u4(), 0.5).unwrap();
        assert_eq!((q.lower, q.upper), (fin(2.0), fin(3.0)));
        let q = quantiles(&bernoulli(), 0.5).unwrap();
        assert_eq!((q.lower, q.upper), (fin(0.0), fin(1.0)));
    }

    #[test]
    fn quantile_level_edges() {
        let q = quantiles(&u4(), 0.0).unwrap();
        assert_eq!(q.lower, ExtendedReal::NegInfinity);
        assert_eq!(q.upper, fin(1.0));
        let q = quantiles(&u4(), 1.0).unwrap();
        assert_eq!((q.lower, q.upper), (fin(4.0), fin(4.0)));
        assert!(matches!(quantiles(&u4(), 1.5), Err(Error::InvalidLevel { .. })));
        assert!(matches!(quantiles(&u4(), -0.1), Err(Error::InvalidLevel { .. })));
        assert!(matches!(quantiles(&u4(), f64::NAN), Err(Error::InvalidLevel { .. })));
    }

    #[test]
    fn weighted_average_examples() {
        let u = u4();
        assert_eq!(weighted_quantile_average(&u, &WeightFunction::uniform()).unwrap(), 2.5);
        assert_eq!(
            weighted_quantile_average(&u, &WeightFunction::es_upper(0.5).unwrap()).unwrap(),
            3.5
        );
        assert_eq!(
            weighted_quantile_average(&u, &WeightFunction::rvar(0.25, 0.75).unwrap()).unwrap(),
            2.5
        );
        assert_eq!(expected_shortfall_lower(&u, 0.5).unwrap(), 1.5);
    }

    #[test]
    fn quadrature_fallback_matches_exact() {
        let u = u4();
        for w in [
            WeightFunction::uniform(),
            WeightFunction::es_upper(0.3).unwrap(),
            WeightFunction::rvar(0.1, 0.6).unwrap(),
        ] {
            let exact = weighted_quantile_average(&u, &w).unwrap();
            let numeric =
                weighted_quantile_average(&u, &w.clone().without_antiderivative()).unwrap();
            assert_abs_diff_eq!(exact, numeric, epsilon = 1e-9);
        }
        // smooth density 2γ: ∫ q_γ 2γ dγ over quarters = Σ x_k (c_k² − c_{k−1}²)
        let w = WeightFunction::custom("ramp", |g| 2.0 * g, None);
        let expected = 1.0 * 0.0625 + 2.0 * 0.1875 + 3.0 * 0.3125 + 4.0 * 0.4375;
        assert_abs_diff_eq!(
            weighted_quantile_average(&u, &w).unwrap(),
            expected,
            epsilon = 1e-10
        );
    }

    #[test]
    fn negative_weight_is_rejected() {
        let w = WeightFunction::custom("bad", |g| g - 0.5, None);
        assert!(matches!(
            weighted_quantile_average(&u4(), &w),
            Err(Error::InvalidWeight(_))
        ));
    }

    #[test]
    fn invalid_presets() {
        assert!(WeightFunction::es_upper(1.0).is_err());
        assert!(WeightFunction::es_lower(0.0).is_err());
        assert!(WeightFunction::rvar(0.6, 0.4).is_err());
    }

    #[test]
    fn moment_examples() {
        assert_eq!(moment_stats(&u4()).variance, 1.25);
        let point = moment_stats(&DiscreteDistribution::point_mass(3.0).unwrap());
        assert_eq!(
            point,
            MomentStats {
                mean: 3.0,
                variance: 0.0,
                skewness: None,
                kurtosis: None,
                sharpe_ratio: None
            }
        );
        let sym = moment_stats(&dist(&[(-1.0, 0.5), (1.0, 0.5)]));
        assert_eq!(sym.mean, 0.0);
        assert_eq!(sym.variance, 1.0);
        assert_eq!(sym.skewness, Some(0.0));
        assert_eq!(sym.kurtosis, Some(1.0));
        assert_eq!(sym.sharpe_ratio, Some(0.0));
    }

    /// Bisection on the decreasing gap function, used as an oracle.
    fn bisect_expectile(d: &DiscreteDistribution, tau: f64) -> f64 {
        let (mut lo, mut hi) = (d.min(), d.max());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if expectile_gap(d, tau, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn expectile_examples() {
        assert_eq!(expectile(&u4(), 0.5).unwrap(), 2.5);
        let e = expectile(&bernoulli(), 0.8).unwrap();
        assert_abs_diff_eq!(e, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(e, bisect_expectile(&bernoulli(), 0.8), epsilon = 1e-12);
        let delta = DiscreteDistribution::point_mass(-4.0).unwrap();
        assert_eq!(expectile(&delta, 0.1).unwrap(), -4.0);
        assert!(expectile(&u4(), 0.0).is_err());
        assert!(expectile(&u4(), 1.0).is_err());
    }

    #[test]
    fn expectile_agrees_with_bisection_on_skewed_law() {
        let d = dist(&[(-3.0, 0.1), (0.5, 0.6), (2.0, 0.05), (9.0, 0.25)]);
        for tau in [0.01, 0.2, 0.5, 0.77, 0.99] {
            assert_abs_diff_eq!(
                expectile(&d, tau).unwrap(),
                bisect_expectile(&d, tau),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn composed_evaluation_examples() {
        let c = composed_evaluations(&u4(), 2.5).unwrap();
        assert_eq!((c.upper_tail, c.lower_tail, c.point), (0.5, 0.5, 0.0));
        let c = composed_evaluations(&u4(), 2.0).unwrap();
        assert_eq!((c.upper_tail, c.lower_tail, c.point), (0.5, 0.25, 0.25));
        let c = composed_evaluations(&DiscreteDistribution::point_mass(0.0).unwrap(), 0.0).unwrap();
        assert_eq!((c.upper_tail, c.lower_tail, c.point), (0.0, 0.0, 1.0));
    }

    #[test]
    fn covar_examples() {
        let b = bernoulli();
        let prod = BivariateDiscreteDistribution::product(&b, &b).unwrap();
        assert_eq!(covar_conditional(&prod, 0.5).unwrap(), b);

        let x = dist(&[(0.0, 0.75), (1.0, 0.25)]);
        let y = dist(&[(-2.0, 0.1), (0.5, 0.3), (4.0, 0.6)]);
        let prod = BivariateDiscreteDistribution::product(&x, &y).unwrap();
        let eta = covar_conditional(&prod, 0.5).unwrap();
        for ((a, p), (b, q)) in eta.atoms().zip(y.atoms()) {
            assert_eq!(a, b);
            assert_abs_diff_eq!(p, q, epsilon = 1e-12);
        }

        let comonotone = BivariateDiscreteDistribution::new(
            [1.0, 2.0, 3.0, 4.0].map(|v| (v, v, 0.25)),
        )
        .unwrap();
        // F_X(2) = β exactly, so the correction coefficient vanishes
        let eta = covar_conditional(&comonotone, 0.5).unwrap();
        assert_eq!(eta.values(), &[3.0, 4.0]);
        assert_eq!(eta.masses(), &[0.5, 0.5]);
        // β = 0.4: coefficient 0.1 spread over the atom at 2 of mass 0.25
        let eta = covar_conditional(&comonotone, 0.4).unwrap();
        assert_eq!(eta.values(), &[2.0, 3.0, 4.0]);
        for (p, q) in eta.masses().iter().zip([1.0 / 6.0, 5.0 / 12.0, 5.0 / 12.0]) {
            assert_abs_diff_eq!(*p, q, epsilon = 1e-15);
        }
        assert_eq!(covar_coes(&comonotone, 0.5, 0.5).unwrap().covar, 3.0);
        assert!(covar_conditional(&comonotone, 1.0).is_err());
    }

    #[test]
    fn covar_coes_point_mass_and_independence() {
        let single = BivariateDiscreteDistribution::new([(1.0, -2.0, 1.0)]).unwrap();
        let r = covar_coes(&single, 0.3, 0.7).unwrap();
        assert_eq!((r.covar, r.coes), (-2.0, -2.0));

        let x = u4();
        let y = dist(&[(0.0, 0.2), (1.0, 0.5), (5.0, 0.3)]);
        let prod = BivariateDiscreteDistribution::product(&x, &y).unwrap();
        let r = covar_coes(&prod, 0.6, 0.4).unwrap();
        assert_eq!(r.covar, quantile_lower(&y, 0.6).unwrap());
        assert_abs_diff_eq!(r.coes, expected_shortfall_upper(&y, 0.6).unwrap(), epsilon = 1e-12);
    }
}
