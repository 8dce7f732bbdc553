//! Expected losses and their minimizers.
//!
//! A [`LossFunction`] `L(a, y)` induces the expected loss
//! `L̄(a, F) = Σ p_i L(a, x_i)`. Under order sensitivity the minimizers of
//! `L̄(·, F)` form a compact interval `[t_min, t_max]`; its endpoints are the
//! elicited functionals and the minimal value is the Bayes risk.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distribution::DiscreteDistribution;
use crate::error::{check_level, Error, Result};

/// Slope magnitude below which a piecewise-linear expected loss is flat.
pub const FLAT_TOLERANCE: f64 = 1e-10;
/// Relative argument tolerance of the bisection searches.
pub const ARGUMENT_TOLERANCE: f64 = 1e-10;
const SWEEP_POINTS: usize = 256;
const MAX_EXPANSION: f64 = 1_099_511_627_776.0; // 2^40

/// How `a ↦ L(a, y)` behaves, which selects the minimization strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossShape {
    PiecewiseLinearInA,
    SmoothConvexInA,
    GeneralContinuous,
}

/// Direction of a one-sided derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

type LossFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type SlopeFn = Arc<dyn Fn(f64, f64, Side) -> f64 + Send + Sync>;
type BreakpointFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A closed, possibly unbounded, interval of admissible actions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDomain {
    pub lower: f64,
    pub upper: f64,
}

impl ActionDomain {
    pub const REAL_LINE: ActionDomain = ActionDomain {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn contains(&self, a: f64) -> bool {
        a >= self.lower && a <= self.upper
    }

    fn clamp(&self, a: f64) -> f64 {
        a.clamp(self.lower, self.upper)
    }
}

/// A loss `L(a, y)` together with the metadata the minimizer search relies on.
///
/// Callbacks must be pure; they may be invoked from several threads.
#[derive(Clone)]
pub struct LossFunction {
    name: String,
    evaluate: LossFn,
    slope: Option<SlopeFn>,
    domain: ActionDomain,
    shape: LossShape,
    breakpoints: Option<BreakpointFn>,
}

impl fmt::Debug for LossFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LossFunction")
            .field("name", &self.name)
            .field("shape", &self.shape)
            .field("domain", &self.domain)
            .finish()
    }
}

impl LossFunction {
    /// A user-supplied loss on the given action domain.
    pub fn new<L>(name: impl Into<String>, shape: LossShape, domain: ActionDomain, evaluate: L) -> Self
    where
        L: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            evaluate: Arc::new(evaluate),
            slope: None,
            domain,
            shape,
            breakpoints: None,
        }
    }

    /// Attaches one-sided derivatives `∂_a^± L(a, y)`.
    pub fn with_slope<S>(mut self, slope: S) -> Self
    where
        S: Fn(f64, f64, Side) -> f64 + Send + Sync + 'static,
    {
        self.slope = Some(Arc::new(slope));
        self
    }

    /// Attaches a map from the support to extra kink locations in `a`.
    pub fn with_breakpoints<B>(mut self, breakpoints: B) -> Self
    where
        B: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.breakpoints = Some(Arc::new(breakpoints));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> LossShape {
        self.shape
    }

    pub fn domain(&self) -> ActionDomain {
        self.domain
    }

    pub fn evaluate(&self, a: f64, y: f64) -> f64 {
        (self.evaluate)(a, y)
    }
}

/// Increasing convex transform used by generalized quantile losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Phi {
    Abs,
    Square,
    Power { p: f64 },
}

impl Phi {
    fn validate(self) -> Result<Self> {
        match self {
            Phi::Power { p } if !(p >= 1.0 && p.is_finite()) => Err(Error::InvalidExponent(p)),
            other => Ok(other),
        }
    }

    fn value(self, t: f64) -> f64 {
        match self {
            Phi::Abs => t,
            Phi::Square => t * t,
            Phi::Power { p } => t.powf(p),
        }
    }

    /// Right derivative on `[0, ∞)`.
    fn derivative(self, t: f64) -> f64 {
        match self {
            Phi::Abs => 1.0,
            Phi::Square => 2.0 * t,
            Phi::Power { p: 1.0 } => 1.0,
            Phi::Power { p } => p * t.powf(p - 1.0),
        }
    }

    fn differentiable_at_zero(self) -> bool {
        match self {
            Phi::Abs => false,
            Phi::Square => true,
            Phi::Power { p } => p > 1.0,
        }
    }
}

/// The built-in loss catalog, as it appears in request files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossKind {
    Squared,
    Pinball { alpha: f64 },
    AsymmetricSquared { tau: f64 },
    ShiftedAsymmetricSquared { tau: f64 },
    GeneralizedQuantile { tau: f64, phi1: Phi, phi2: Phi },
    PowerGeneralized { tau: f64, p: f64 },
    #[serde(alias = "es_ru_loss")]
    EsRu { alpha: f64 },
}

fn support_breakpoints(support: &[f64]) -> Vec<f64> {
    support.to_vec()
}

fn asymmetric_weight(a: f64, y: f64, tau: f64) -> f64 {
    if y <= a {
        1.0 - tau
    } else {
        tau
    }
}

/// Builds a loss from the catalog.
pub fn make_loss(kind: LossKind) -> Result<LossFunction> {
    let domain = ActionDomain::REAL_LINE;
    let loss = match kind {
        LossKind::Squared => LossFunction::new("squared", LossShape::SmoothConvexInA, domain, |a, y| {
            (a - y) * (a - y)
        })
        .with_slope(|a, y, _| 2.0 * (a - y)),

        LossKind::Pinball { alpha } => {
            check_level("alpha", alpha, true, true)?;
            LossFunction::new(
                format!("pinball({alpha})"),
                LossShape::PiecewiseLinearInA,
                domain,
                move |a, y| (if y <= a { 1.0 } else { 0.0 } - alpha) * (a - y),
            )
            .with_slope(move |a, y, side| {
                let below = y < a || (y == a && side == Side::Right);
                if below {
                    1.0 - alpha
                } else {
                    -alpha
                }
            })
            .with_breakpoints(support_breakpoints)
        }

        LossKind::AsymmetricSquared { tau } => {
            check_level("tau", tau, true, true)?;
            LossFunction::new(
                format!("asymmetric_squared({tau})"),
                LossShape::SmoothConvexInA,
                domain,
                move |a, y| asymmetric_weight(a, y, tau) * (a - y) * (a - y),
            )
            .with_slope(move |a, y, _| 2.0 * asymmetric_weight(a, y, tau) * (a - y))
        }

        LossKind::ShiftedAsymmetricSquared { tau } => {
            check_level("tau", tau, true, true)?;
            LossFunction::new(
                format!("shifted_asymmetric_squared({tau})"),
                LossShape::SmoothConvexInA,
                domain,
                move |a, y| {
                    asymmetric_weight(a, y, tau) * (a - y) * (a - y)
                        - asymmetric_weight(0.0, y, tau) * y * y
                },
            )
            .with_slope(move |a, y, _| 2.0 * asymmetric_weight(a, y, tau) * (a - y))
        }

        LossKind::GeneralizedQuantile { tau, phi1, phi2 } => {
            generalized_quantile(format!("generalized_quantile({tau})"), tau, phi1, phi2)?
        }

        LossKind::PowerGeneralized { tau, p } => {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::InvalidExponent(p));
            }
            let phi = Phi::Power { p };
            generalized_quantile(format!("power_generalized({tau},{p})"), tau, phi, phi)?
        }

        LossKind::EsRu { alpha } => {
            check_level("alpha", alpha, true, true)?;
            let scale = 1.0 / (1.0 - alpha);
            LossFunction::new(
                format!("es_ru({alpha})"),
                LossShape::PiecewiseLinearInA,
                domain,
                move |a, y| a + (y - a).max(0.0) * scale,
            )
            .with_slope(move |a, y, side| {
                let above = y > a || (y == a && side == Side::Left);
                if above {
                    1.0 - scale
                } else {
                    1.0
                }
            })
            .with_breakpoints(support_breakpoints)
        }
    };
    Ok(loss)
}

/// `𝟙{y ≤ a}(1−τ)φ₁(a−y) + 𝟙{y > a}τφ₂(y−a)`.
fn generalized_quantile(name: String, tau: f64, phi1: Phi, phi2: Phi) -> Result<LossFunction> {
    check_level("tau", tau, true, true)?;
    let phi1 = phi1.validate()?;
    let phi2 = phi2.validate()?;
    let shape = if phi1.differentiable_at_zero() && phi2.differentiable_at_zero() {
        LossShape::SmoothConvexInA
    } else {
        LossShape::GeneralContinuous
    };
    Ok(LossFunction::new(name, shape, ActionDomain::REAL_LINE, move |a, y| {
        if y <= a {
            (1.0 - tau) * phi1.value(a - y)
        } else {
            tau * phi2.value(y - a)
        }
    })
    .with_slope(move |a, y, side| {
        let below = y < a || (y == a && side == Side::Right);
        if below {
            (1.0 - tau) * phi1.derivative(a - y)
        } else {
            -tau * phi2.derivative(y - a)
        }
    }))
}

/// `L̄(a, F) = Σ p_i L(a, x_i)` in ascending order of the support.
pub fn expected_loss(loss: &LossFunction, a: f64, dist: &DiscreteDistribution) -> Result<f64> {
    if !loss.domain.contains(a) {
        return Err(Error::ActionOutOfDomain(a));
    }
    let mut total = 0.0;
    for (y, p) in dist.atoms() {
        let v = loss.evaluate(a, y);
        if !v.is_finite() {
            return Err(Error::NonFiniteValue(format!(
                "{}({a}, {y}) = {v}",
                loss.name
            )));
        }
        total += p * v;
    }
    Ok(total)
}

fn fd_step(dist: &DiscreteDistribution) -> f64 {
    1e-6 * (1.0 + dist.span())
}

/// One-sided derivative of `L̄(·, F)` at `a`.
fn expected_slope(loss: &LossFunction, a: f64, dist: &DiscreteDistribution, side: Side) -> Result<f64> {
    if let Some(slope) = &loss.slope {
        return Ok(dist.atoms().map(|(y, p)| p * slope(a, y, side)).sum());
    }
    let h = fd_step(dist);
    let (lo, hi) = match side {
        Side::Right => (a, loss.domain.clamp(a + h)),
        Side::Left => (loss.domain.clamp(a - h), a),
    };
    if hi <= lo {
        return Ok(0.0);
    }
    Ok((expected_loss(loss, hi, dist)? - expected_loss(loss, lo, dist)?) / (hi - lo))
}

/// The interval of minimizers of the expected loss and the Bayes risk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizerInterval {
    pub t_min: f64,
    pub t_max: f64,
    pub bayes_risk: f64,
}

/// Computes `I_L(F) = [t_min, t_max]`.
///
/// Piecewise-linear losses are solved exactly from one-sided slopes at the
/// candidate kinks. Other shapes use bisection on the slope sign inside a
/// bracket that starts at the support hull widened by one and is expanded
/// geometrically. A 256-point order-sensitivity sweep runs afterwards.
pub fn minimizer_interval(loss: &LossFunction, dist: &DiscreteDistribution) -> Result<MinimizerInterval> {
    let (t_min, t_max) = match loss.shape {
        LossShape::PiecewiseLinearInA => piecewise_linear_minimizers(loss, dist)?,
        LossShape::SmoothConvexInA => bisection_minimizers(loss, dist, 0.0, true)?,
        LossShape::GeneralContinuous => {
            let tol = if loss.slope.is_some() { FLAT_TOLERANCE } else { 1e-7 };
            bisection_minimizers(loss, dist, tol, false)?
        }
    };
    let bayes_risk = expected_loss(loss, t_min, dist)?;
    let result = MinimizerInterval {
        t_min,
        t_max,
        bayes_risk,
    };
    verify_order_sensitivity(loss, dist, &result)?;
    Ok(result)
}

fn piecewise_linear_minimizers(loss: &LossFunction, dist: &DiscreteDistribution) -> Result<(f64, f64)> {
    let domain = loss.domain;
    let mut candidates: Vec<f64> = dist.values().to_vec();
    if let Some(extra) = &loss.breakpoints {
        candidates.extend(extra(dist.values()));
    }
    candidates.extend([domain.lower, domain.upper].into_iter().filter(|v| v.is_finite()));
    candidates.retain(|&c| c.is_finite() && domain.contains(c));
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    if candidates.is_empty() {
        return Err(Error::Unbracketed);
    }

    let secant = |a: f64, b: f64| -> Result<f64> {
        Ok((expected_loss(loss, b, dist)? - expected_loss(loss, a, dist)?) / (b - a))
    };
    let right_slope = |i: usize| -> Result<Option<f64>> {
        let c = candidates[i];
        if c == domain.upper {
            return Ok(None);
        }
        if loss.slope.is_some() {
            return expected_slope(loss, c, dist, Side::Right).map(Some);
        }
        let next = candidates
            .get(i + 1)
            .copied()
            .unwrap_or_else(|| domain.clamp(c + 1.0));
        secant(c, next).map(Some)
    };
    let left_slope = |i: usize| -> Result<Option<f64>> {
        let c = candidates[i];
        if c == domain.lower {
            return Ok(None);
        }
        if loss.slope.is_some() {
            return expected_slope(loss, c, dist, Side::Left).map(Some);
        }
        let prev = if i > 0 {
            candidates[i - 1]
        } else {
            domain.clamp(c - 1.0)
        };
        secant(prev, c).map(Some)
    };

    let mut t_min = None;
    for (i, &c) in candidates.iter().enumerate() {
        match right_slope(i)? {
            Some(s) if s < -FLAT_TOLERANCE => continue,
            _ => {
                t_min = Some(c);
                break;
            }
        }
    }
    let mut t_max = None;
    for i in (0..candidates.len()).rev() {
        match left_slope(i)? {
            Some(s) if s > FLAT_TOLERANCE => continue,
            _ => {
                t_max = Some(candidates[i]);
                break;
            }
        }
    }
    match (t_min, t_max) {
        (Some(lo), Some(hi)) if lo <= hi => Ok((lo, hi)),
        (Some(lo), Some(hi)) => Err(Error::ShapeViolation(format!(
            "slope sign changes disagree: t_min {lo} > t_max {hi}"
        ))),
        _ => Err(Error::Unbracketed),
    }
}

/// Finds `sup{a : slope(a) < −tol}` (`Side::Right`) or
/// `inf{a : slope(a) > tol}` (`Side::Left`) by bisection.
/// With `exhaustive` the search continues until the bracket cannot be split
/// any further in double precision instead of stopping at the argument
/// tolerance.
fn bisection_minimizers(
    loss: &LossFunction,
    dist: &DiscreteDistribution,
    tol: f64,
    exhaustive: bool,
) -> Result<(f64, f64)> {
    let domain = loss.domain;
    let center = 0.5 * (dist.min() + dist.max());
    let half = 0.5 * dist.span() + 1.0;
    let limit = half * MAX_EXPANSION;

    // left end: right slope must be negative (or the domain edge reached)
    let descending = |a: f64| -> Result<bool> { Ok(expected_slope(loss, a, dist, Side::Right)? < -tol) };
    let ascending = |a: f64| -> Result<bool> { Ok(expected_slope(loss, a, dist, Side::Left)? > tol) };

    let mut width = half;
    let mut lo = domain.clamp(center - width);
    while lo > domain.lower && !descending(lo)? {
        width *= 2.0;
        if width > limit {
            return Err(Error::Unbracketed);
        }
        lo = domain.clamp(center - width);
    }
    let mut width = half;
    let mut hi = domain.clamp(center + width);
    while hi < domain.upper && !ascending(hi)? {
        width *= 2.0;
        if width > limit {
            return Err(Error::Unbracketed);
        }
        hi = domain.clamp(center + width);
    }
    if lo >= hi {
        return Ok((lo, lo));
    }
    let arg_tol = if exhaustive {
        0.0
    } else {
        ARGUMENT_TOLERANCE * (1.0 + (hi - lo))
    };

    let t_min = if lo == domain.lower && !descending(lo)? {
        lo
    } else if hi == domain.upper && descending(hi)? {
        hi
    } else {
        let (mut a, mut b) = (lo, hi);
        while b - a > arg_tol {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if descending(m)? {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let t_max = if hi == domain.upper && !ascending(hi)? {
        hi
    } else if lo == domain.lower && ascending(lo)? {
        lo
    } else {
        let (mut a, mut b) = (lo, hi);
        while b - a > arg_tol {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if ascending(m)? {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    };
    if t_max < t_min {
        // round-off crossed the two searches on a strictly convex loss
        let mid = 0.5 * (t_min + t_max);
        return Ok((mid, mid));
    }
    Ok((t_min, t_max))
}

fn verify_order_sensitivity(
    loss: &LossFunction,
    dist: &DiscreteDistribution,
    interval: &MinimizerInterval,
) -> Result<()> {
    let lo_anchor = dist.min().min(interval.t_min);
    let hi_anchor = dist.max().max(interval.t_max);
    let pad = 0.5 * (1.0 + (hi_anchor - lo_anchor));
    let lo = loss.domain.clamp(lo_anchor - pad);
    let hi = loss.domain.clamp(hi_anchor + pad);
    let step = (hi - lo) / (SWEEP_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..SWEEP_POINTS).map(|i| lo + step * i as f64).collect();
    let values = grid
        .iter()
        .map(|&a| expected_loss(loss, a, dist))
        .collect::<Result<Vec<_>>>()?;
    let scale = values
        .iter()
        .fold(interval.bayes_risk.abs(), |m, v| m.max(v.abs()));
    let tol = ARGUMENT_TOLERANCE * (1.0 + scale);

    for (a, v) in grid.iter().zip(&values) {
        if *v < interval.bayes_risk - tol {
            return Err(Error::ShapeViolation(format!(
                "{} at a = {a} undercuts the reported minimum {}",
                v, interval.bayes_risk
            )));
        }
    }
    for i in 1..grid.len() {
        let (a0, a1) = (grid[i - 1], grid[i]);
        let (v0, v1) = (values[i - 1], values[i]);
        if a1 <= interval.t_min && v1 > v0 + tol {
            return Err(Error::ShapeViolation(format!(
                "expected loss increases on [{a0}, {a1}] left of the minimizers"
            )));
        }
        if a0 >= interval.t_max && v1 < v0 - tol {
            return Err(Error::ShapeViolation(format!(
                "expected loss decreases on [{a0}, {a1}] right of the minimizers"
            )));
        }
    }
    Ok(())
}

/// Functionals with a built-in identification function `V(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IdentificationKind {
    /// `V(x, y) = x − y`
    Mean,
    /// `V(x, y) = 𝟙{y ≤ x} − α`
    Quantile { alpha: f64 },
    /// `V(x, y) = (1−τ)(x−y)⁺ − τ(y−x)⁺`
    Expectile { tau: f64 },
}

/// `E_F[V(x, Y)]`.
pub fn identification_residual(kind: IdentificationKind, x: f64, dist: &DiscreteDistribution) -> f64 {
    dist.atoms()
        .map(|(y, p)| {
            let v = match kind {
                IdentificationKind::Mean => x - y,
                IdentificationKind::Quantile { alpha } => {
                    (if y <= x { 1.0 } else { 0.0 }) - alpha
                }
                IdentificationKind::Expectile { tau } => {
                    (1.0 - tau) * (x - y).max(0.0) - tau * (y - x).max(0.0)
                }
            };
            p * v
        })
        .sum()
}

/// Whether `t` attains the minimum of `L̄(·, F)` over `grid` up to `1e-10`.
pub fn consistency_check(
    loss: &LossFunction,
    t: f64,
    dist: &DiscreteDistribution,
    grid: &[f64],
) -> Result<bool> {
    let at_t = expected_loss(loss, t, dist)?;
    for &a in grid {
        if at_t > expected_loss(loss, a, dist)? + 1e-10 {
            return Ok(false);
        }
    }
    Ok(true)
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

    fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn expected_loss_examples() {
        let sq = make_loss(LossKind::Squared).unwrap();
        assert_eq!(expected_loss(&sq, 2.5, &u4()).unwrap(), 1.25);
        let pb = make_loss(LossKind::Pinball { alpha: 0.5 }).unwrap();
        assert_eq!(expected_loss(&pb, 0.5, &bernoulli()).unwrap(), 0.25);
        let delta = DiscreteDistribution::point_mass(2.0).unwrap();
        assert_eq!(expected_loss(&pb, -1.0, &delta).unwrap(), pb.evaluate(-1.0, 2.0));
    }

    #[test]
    fn action_outside_domain() {
        let bounded = LossFunction::new(
            "bounded",
            LossShape::SmoothConvexInA,
            ActionDomain { lower: 0.0, upper: 1.0 },
            |a, y| (a - y) * (a - y),
        );
        assert_eq!(
            expected_loss(&bounded, 2.0, &u4()),
            Err(Error::ActionOutOfDomain(2.0))
        );
    }

    #[test]
    fn minimizer_examples() {
        let sq = make_loss(LossKind::Squared).unwrap();
        let r = minimizer_interval(&sq, &u4()).unwrap();
        assert_abs_diff_eq!(r.t_min, 2.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.t_max, 2.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.bayes_risk, 1.25, epsilon = 1e-15);

        let pb = make_loss(LossKind::Pinball { alpha: 0.5 }).unwrap();
        let r = minimizer_interval(&pb, &bernoulli()).unwrap();
        assert_eq!((r.t_min, r.t_max, r.bayes_risk), (0.0, 1.0, 0.25));
        // grid oracle: the expected pinball loss is flat at 0.25 on [0, 1]
        for a in linspace(0.0, 1.0, 101) {
            assert_abs_diff_eq!(expected_loss(&pb, a, &bernoulli()).unwrap(), 0.25, epsilon = 1e-15);
        }

        let es = make_loss(LossKind::EsRu { alpha: 0.5 }).unwrap();
        let r = minimizer_interval(&es, &u4()).unwrap();
        assert_eq!((r.t_min, r.t_max, r.bayes_risk), (2.0, 3.0, 3.5));
        assert_eq!(expected_loss(&es, 3.0, &u4()).unwrap(), 3.5);
    }

    #[test]
    fn catalog_values() {
        let pb = make_loss(LossKind::Pinball { alpha: 0.5 }).unwrap();
        assert_eq!(pb.evaluate(1.0, 0.0), 0.5);
        assert_eq!(pb.shape(), LossShape::PiecewiseLinearInA);

        let asym = make_loss(LossKind::AsymmetricSquared { tau: 0.5 }).unwrap();
        for (a, y) in [(1.0, 3.0), (-2.0, -5.0), (0.3, 0.3)] {
            assert_eq!(asym.evaluate(a, y), 0.5 * (a - y) * (a - y));
        }

        let power = make_loss(LossKind::PowerGeneralized { tau: 0.5, p: 1.0 }).unwrap();
        assert_eq!(power.shape(), LossShape::GeneralContinuous);
        for (a, y) in [(1.0, 3.0), (-2.0, -5.0), (0.3, 0.3), (4.0, 4.5)] {
            assert_eq!(power.evaluate(a, y), 0.5 * (a - y).abs());
            assert_eq!(power.evaluate(a, y), pb.evaluate(a, y));
        }

        let smooth = make_loss(LossKind::PowerGeneralized { tau: 0.3, p: 2.0 }).unwrap();
        assert_eq!(smooth.shape(), LossShape::SmoothConvexInA);
        assert!(matches!(
            make_loss(LossKind::PowerGeneralized { tau: 0.3, p: 0.5 }),
            Err(Error::InvalidExponent(_))
        ));
        assert!(matches!(
            make_loss(LossKind::Pinball { alpha: 1.0 }),
            Err(Error::InvalidLevel { .. })
        ));
        assert!(matches!(
            make_loss(LossKind::GeneralizedQuantile {
                tau: 0.3,
                phi1: Phi::Abs,
                phi2: Phi::Power { p: 0.9 }
            }),
            Err(Error::InvalidExponent(_))
        ));
    }

    #[test]
    fn generalized_quantile_recovers_quantile_and_expectile() {
        let d = dist(&[(-1.0, 0.2), (0.5, 0.3), (2.0, 0.1), (7.0, 0.4)]);
        let abs = make_loss(LossKind::GeneralizedQuantile {
            tau: 0.4,
            phi1: Phi::Abs,
            phi2: Phi::Abs,
        })
        .unwrap();
        let r = minimizer_interval(&abs, &d).unwrap();
        // F(0.5) = 0.5 ≥ 0.4 > F(−1) = 0.2
        assert_abs_diff_eq!(r.t_min, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.t_max, 0.5, epsilon = 1e-9);

        let sq = make_loss(LossKind::GeneralizedQuantile {
            tau: 0.4,
            phi1: Phi::Square,
            phi2: Phi::Square,
        })
        .unwrap();
        let r = minimizer_interval(&sq, &d).unwrap();
        let e = crate::functionals::expectile(&d, 0.4).unwrap();
        assert_abs_diff_eq!(r.t_min, e, epsilon = 1e-9);
    }

    #[test]
    fn user_loss_without_slopes() {
        // |a − y|^1.5 through finite differences only
        let loss = LossFunction::new(
            "abs15",
            LossShape::GeneralContinuous,
            ActionDomain::REAL_LINE,
            |a: f64, y: f64| (a - y).abs().powf(1.5),
        );
        let d = dist(&[(0.0, 0.5), (2.0, 0.5)]);
        let r = minimizer_interval(&loss, &d).unwrap();
        assert_abs_diff_eq!(r.t_min, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(r.t_max, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn bounded_domain_clamps_minimizer() {
        let loss = LossFunction::new(
            "squared_on_unit",
            LossShape::SmoothConvexInA,
            ActionDomain { lower: 0.0, upper: 1.0 },
            |a, y| (a - y) * (a - y),
        )
        .with_slope(|a, y, _| 2.0 * (a - y));
        let r = minimizer_interval(&loss, &u4()).unwrap();
        assert_eq!((r.t_min, r.t_max), (1.0, 1.0));
    }

    #[test]
    fn shape_violation_is_detected() {
        // two wells at y ± 3 with a local maximum at y in between
        let loss = LossFunction::new(
            "double_well",
            LossShape::SmoothConvexInA,
            ActionDomain::REAL_LINE,
            |a: f64, y: f64| ((a - y - 3.0).powi(2)).min((a - y + 3.0).powi(2)),
        );
        let delta = DiscreteDistribution::point_mass(0.0).unwrap();
        assert!(matches!(
            minimizer_interval(&loss, &delta),
            Err(Error::ShapeViolation(_))
        ));
    }

    #[test]
    fn unbounded_decrease_is_unbracketed() {
        let loss = LossFunction::new(
            "linear",
            LossShape::SmoothConvexInA,
            ActionDomain::REAL_LINE,
            |a, _| -a,
        )
        .with_slope(|_, _, _| -1.0);
        assert_eq!(minimizer_interval(&loss, &u4()), Err(Error::Unbracketed));
        let pl = LossFunction::new(
            "linear_pl",
            LossShape::PiecewiseLinearInA,
            ActionDomain::REAL_LINE,
            |a, _| -a,
        );
        assert_eq!(minimizer_interval(&pl, &u4()), Err(Error::Unbracketed));
    }

    #[test]
    fn identification_examples() {
        assert_eq!(identification_residual(IdentificationKind::Mean, 2.5, &u4()), 0.0);
        assert_abs_diff_eq!(
            identification_residual(IdentificationKind::Quantile { alpha: 0.6 }, 3.0, &u4()),
            0.15,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            identification_residual(IdentificationKind::Expectile { tau: 0.8 }, 0.8, &bernoulli()),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn consistency_examples() {
        let sq = make_loss(LossKind::Squared).unwrap();
        let grid = linspace(0.0, 5.0, 100);
        assert!(consistency_check(&sq, 2.5, &u4(), &grid).unwrap());
        assert!(!consistency_check(&sq, 3.0, &u4(), &[1.0, 2.5, 4.0]).unwrap());
        let pb = make_loss(LossKind::Pinball { alpha: 0.5 }).unwrap();
        assert!(consistency_check(&pb, 0.7, &bernoulli(), &linspace(0.0, 1.0, 50)).unwrap());
    }
}
