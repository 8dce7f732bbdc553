//! Proper scoring rules for discrete forecast distributions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::distribution::DiscreteDistribution;
use crate::error::{Error, Result};

/// A score in `(−∞, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ScoreValue(f64);

impl ScoreValue {
    pub const INFINITE: ScoreValue = ScoreValue(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value == f64::NEG_INFINITY {
            return Err(Error::NonFiniteValue(format!("score {value}")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Display for ScoreValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

fn finite_observation(y: f64) -> Result<()> {
    if y.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteValue(format!("observation {y}")))
    }
}

/// Which closed form evaluates the CRPS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrpsMethod {
    /// `E|y − X| − ½E|X − X'|`
    Energy,
    /// `∫ (F(z) − 𝟙{y ≤ z})² dz`
    Threshold,
}

/// `E|X − X'|` for independent copies, from the sorted prefix sums
/// `Σ_i Σ_j p_i p_j |x_i − x_j| = 2 Σ_j p_j (x_j P_{j−1} − S_{j−1})`.
pub fn mean_abs_difference(dist: &DiscreteDistribution) -> f64 {
    let mut mass = 0.0;
    let mut moment = 0.0;
    let mut total = 0.0;
    for (x, p) in dist.atoms() {
        total += p * (x * mass - moment);
        mass += p;
        moment += p * x;
    }
    2.0 * total
}

fn crps_energy(dist: &DiscreteDistribution, y: f64) -> f64 {
    let first: f64 = dist.atoms().map(|(x, p)| p * (y - x).abs()).sum();
    (first - 0.5 * mean_abs_difference(dist)).max(0.0)
}

/// Walks the constant pieces of `(F(z) − 𝟙{y ≤ z})²` between the sorted
/// breakpoints `support ∪ {y}` and accumulates `piece · measure(piece)`.
fn threshold_integral<M>(dist: &DiscreteDistribution, y: f64, mut measure: M) -> Result<f64>
where
    M: FnMut(f64, f64) -> Result<f64>,
{
    let values = dist.values();
    let cum = dist.cumulative();
    let mut total = 0.0;
    let mut i = 0;
    let mut cdf = 0.0;
    let mut z = values[0].min(y);
    let end = values[values.len() - 1].max(y);
    let mut y_passed = false;
    while z < end {
        while i < values.len() && values[i] <= z {
            cdf = cum[i];
            i += 1;
        }
        if y <= z {
            y_passed = true;
        }
        let next_atom = values.get(i).copied().unwrap_or(f64::INFINITY);
        let next = if y_passed { next_atom } else { next_atom.min(y) };
        let indicator = if y_passed { 1.0 } else { 0.0 };
        let diff = cdf - indicator;
        total += diff * diff * measure(z, next)?;
        z = next;
    }
    Ok(total)
}

/// Continuous ranked probability score.
pub fn crps(dist: &DiscreteDistribution, y: f64, method: CrpsMethod) -> Result<ScoreValue> {
    finite_observation(y)?;
    let v = match method {
        CrpsMethod::Energy => crps_energy(dist, y),
        CrpsMethod::Threshold => threshold_integral(dist, y, |a, b| Ok(b - a))?,
    };
    ScoreValue::new(v)
}

/// Nonnegative threshold weight on the real line with an exact antiderivative.
#[derive(Clone)]
pub struct ThresholdWeight {
    name: String,
    density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    antiderivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for ThresholdWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ThresholdWeight").field("name", &self.name).finish()
    }
}

impl ThresholdWeight {
    pub fn custom<D, W>(name: impl Into<String>, density: D, antiderivative: W) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        W: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            density: Arc::new(density),
            antiderivative: Arc::new(antiderivative),
        }
    }

    /// `w ≡ 1`, which reduces the weighted score to the CRPS.
    pub fn uniform() -> Self {
        Self::custom("uniform", |_| 1.0, |z| z)
    }

    /// `𝟙[lower, upper)`; either end may be infinite.
    pub fn indicator(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower >= upper {
            return Err(Error::InvalidWeight(format!(
                "empty indicator interval [{lower}, {upper})"
            )));
        }
        let anchor = if lower.is_finite() { lower } else { 0.0 };
        Ok(Self::custom(
            format!("indicator[{lower},{upper})"),
            move |z| if z >= lower && z < upper { 1.0 } else { 0.0 },
            move |z| z.clamp(lower, upper) - anchor,
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn evaluate(&self, z: f64) -> f64 {
        (self.density)(z)
    }

    fn mass(&self, a: f64, b: f64) -> Result<f64> {
        let mid = 0.5 * (a + b);
        let w = self.evaluate(mid);
        if w.is_nan() || w < 0.0 {
            return Err(Error::InvalidWeight(format!("w({mid}) = {w}")));
        }
        let m = (self.antiderivative)(b) - (self.antiderivative)(a);
        if m.is_nan() || m < 0.0 {
            return Err(Error::InvalidWeight(format!(
                "antiderivative decreases on [{a}, {b}]"
            )));
        }
        Ok(m)
    }
}

/// Threshold-weighted CRPS `∫ (F(z) − 𝟙{y ≤ z})² w(z) dz`.
pub fn twcrps(dist: &DiscreteDistribution, y: f64, weight: &ThresholdWeight) -> Result<ScoreValue> {
    finite_observation(y)?;
    ScoreValue::new(threshold_integral(dist, y, |a, b| weight.mass(a, b))?)
}

/// `∫_0^1 2·PB_γ(q_γ^−(F), y) dγ` by the composite midpoint rule on `n`
/// levels, where `PB_γ(q, y) = (𝟙{y ≤ q} − γ)(q − y)`.
pub fn crps_quantile_numeric(dist: &DiscreteDistribution, y: f64, n: usize) -> Result<ScoreValue> {
    finite_observation(y)?;
    if n < 16 {
        return Err(Error::InvalidParameter(format!(
            "quantile grid needs at least 16 levels, got {n}"
        )));
    }
    let values = dist.values();
    let cum = dist.cumulative();
    let last = values.len() - 1;
    let mut k = 0;
    let mut total = 0.0;
    for i in 0..n {
        let gamma = (i as f64 + 0.5) / n as f64;
        while k < last && cum[k] < gamma {
            k += 1;
        }
        let q = values[k];
        let indicator = if y <= q { 1.0 } else { 0.0 };
        total += (indicator - gamma) * (q - y);
    }
    ScoreValue::new(2.0 * total / n as f64)
}

/// Negative natural log of the forecast mass at the observation.
pub fn log_score(dist: &DiscreteDistribution, y: f64) -> Result<ScoreValue> {
    finite_observation(y)?;
    let p = dist.mass_at(y);
    if p == 0.0 {
        return Ok(ScoreValue::INFINITE);
    }
    ScoreValue::new(0.0 - p.ln())
}

/// A scoring rule with its parameters.
#[derive(Debug, Clone)]
pub enum ScoringRule {
    Crps,
    TwCrps(ThresholdWeight),
    LogScore,
}

impl ScoringRule {
    pub fn name(&self) -> &'static str {
        match self {
            ScoringRule::Crps => "crps",
            ScoringRule::TwCrps(_) => "twcrps",
            ScoringRule::LogScore => "logscore",
        }
    }

    /// `S(F; y)`.
    pub fn score(&self, forecast: &DiscreteDistribution, y: f64) -> Result<ScoreValue> {
        match self {
            ScoringRule::Crps => crps(forecast, y, CrpsMethod::Energy),
            ScoringRule::TwCrps(w) => twcrps(forecast, y, w),
            ScoringRule::LogScore => log_score(forecast, y),
        }
    }
}

/// `E_Q[S(P; Y)]`.
pub fn expected_score(
    rule: &ScoringRule,
    forecast: &DiscreteDistribution,
    truth: &DiscreteDistribution,
) -> Result<ScoreValue> {
    let mut total = 0.0;
    for (y, q) in truth.atoms() {
        let s = rule.score(forecast, y)?;
        if s.is_infinite() {
            return Ok(ScoreValue::INFINITE);
        }
        total += q * s.value();
    }
    ScoreValue::new(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreEntry {
    pub score: ScoreValue,
    pub observation: f64,
}

/// Per-observation scores in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    entries: Vec<ScoreEntry>,
    mean: ScoreValue,
}

impl ScoreSeries {
    pub fn new(entries: Vec<ScoreEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DegenerateSeries(0));
        }
        let mean = if entries.iter().any(|e| e.score.is_infinite()) {
            ScoreValue::INFINITE
        } else {
            let sum: f64 = entries.iter().map(|e| e.score.value()).sum();
            ScoreValue::new(sum / entries.len() as f64)?
        };
        Ok(Self { entries, mean })
    }

    /// Builds a series from raw score values; observations are set to zero.
    pub fn from_scores(scores: &[f64]) -> Result<Self> {
        let entries = scores
            .iter()
            .map(|&s| {
                Ok(ScoreEntry {
                    score: ScoreValue::new(s)?,
                    observation: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[ScoreEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mean(&self) -> ScoreValue {
        self.mean
    }

    pub fn infinite_count(&self) -> usize {
        self.entries.iter().filter(|e| e.score.is_infinite()).count()
    }

    pub fn scores(&self) -> impl Iterator<Item = ScoreValue> + '_ {
        self.entries.iter().map(|e| e.score)
    }
}

/// Scores each forecast against its observation.
pub fn score_series(
    rule: &ScoringRule,
    forecasts: &[DiscreteDistribution],
    observations: &[f64],
) -> Result<ScoreSeries> {
    if forecasts.len() != observations.len() {
        return Err(Error::LengthMismatch {
            left: forecasts.len(),
            right: observations.len(),
        });
    }
    let entries = forecasts
        .iter()
        .zip(observations)
        .map(|(f, &y)| {
            Ok(ScoreEntry {
                score: rule.score(f, y)?,
                observation: y,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreSeries::new(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DieboldMariano {
    pub statistic: f64,
    pub p_value: f64,
}

/// Diebold–Mariano test on the loss differential `a − b`.
///
/// The long-run variance uses Bartlett weights `1 − k/(lag+1)` on the
/// autocovariances (denominator `n`). A negative statistic favours `a`.
pub fn diebold_mariano(a: &ScoreSeries, b: &ScoreSeries, hac_lag: usize) -> Result<DieboldMariano> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::DegenerateSeries(n));
    }
    if hac_lag >= n {
        return Err(Error::InvalidParameter(format!(
            "hac lag {hac_lag} must be below the series length {n}"
        )));
    }
    if a.infinite_count() > 0 || b.infinite_count() > 0 {
        return Err(Error::InfiniteScore);
    }
    let d: Vec<f64> = a
        .scores()
        .zip(b.scores())
        .map(|(x, y)| x.value() - y.value())
        .collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;

    let constant = d.iter().all(|&v| v == d[0]);
    let variance = if constant {
        0.0
    } else {
        let autocov = |k: usize| -> f64 {
            (k..n)
                .map(|t| (d[t] - mean) * (d[t - k] - mean))
                .sum::<f64>()
                / nf
        };
        let mut v = autocov(0);
        for k in 1..=hac_lag {
            let w = 1.0 - k as f64 / (hac_lag as f64 + 1.0);
            v += 2.0 * w * autocov(k);
        }
        v.max(0.0)
    };

    if variance == 0.0 {
        return Ok(if mean == 0.0 {
            DieboldMariano {
                statistic: 0.0,
                p_value: 1.0,
            }
        } else {
            DieboldMariano {
                statistic: mean.signum() * f64::INFINITY,
                p_value: 0.0,
            }
        });
    }
    let statistic = mean / (variance / nf).sqrt();
    let p_value = erfc(statistic.abs() / std::f64::consts::SQRT_2);
    Ok(DieboldMariano { statistic, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dist(atoms: &[(f64, f64)]) -> DiscreteDistribution {
        DiscreteDistribution::new(atoms.iter().copied()).unwrap()
    }

    fn delta(x: f64) -> DiscreteDistribution {
        DiscreteDistribution::point_mass(x).unwrap()
    }

    fn bernoulli() -> DiscreteDistribution {
        dist(&[(0.0, 0.5), (1.0, 0.5)])
    }

    fn u4() -> DiscreteDistribution {
        DiscreteDistribution::uniform(&[1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    fn both(d: &DiscreteDistribution, y: f64) -> (f64, f64) {
        (
            crps(d, y, CrpsMethod::Energy).unwrap().value(),
            crps(d, y, CrpsMethod::Threshold).unwrap().value(),
        )
    }

    #[test]
    fn crps_examples() {
        assert_eq!(both(&delta(2.0), 5.0), (3.0, 3.0));
        assert_eq!(both(&bernoulli(), 0.0), (0.25, 0.25));
        assert_eq!(both(&delta(-1.5), -1.5), (0.0, 0.0));
        let (e, t) = both(&u4(), 2.5);
        assert_abs_diff_eq!(e, t, epsilon = 1e-15);
        assert!(crps(&u4(), f64::NAN, CrpsMethod::Energy).is_err());
    }

    #[test]
    fn crps_observation_outside_support() {
        for y in [-3.0, 0.0, 1.0, 4.0, 7.5] {
            let (e, t) = both(&u4(), y);
            assert_abs_diff_eq!(e, t, epsilon = 1e-14);
        }
    }

    #[test]
    fn twcrps_examples() {
        let b = bernoulli();
        assert_eq!(
            twcrps(&b, 0.0, &ThresholdWeight::uniform()).unwrap().value(),
            crps(&b, 0.0, CrpsMethod::Energy).unwrap().value()
        );
        let upper = ThresholdWeight::indicator(0.5, f64::INFINITY).unwrap();
        assert_eq!(twcrps(&b, 0.0, &upper).unwrap().value(), 0.125);
        assert_eq!(twcrps(&delta(3.0), 3.0, &upper).unwrap().value(), 0.0);
        let lower = ThresholdWeight::indicator(f64::NEG_INFINITY, 0.5).unwrap();
        assert_eq!(twcrps(&b, 0.0, &lower).unwrap().value(), 0.125);
        assert!(ThresholdWeight::indicator(1.0, 1.0).is_err());
        let negative = ThresholdWeight::custom("neg", |_| -1.0, |z| -z);
        assert!(matches!(twcrps(&b, 0.0, &negative), Err(Error::InvalidWeight(_))));
    }

    #[test]
    fn quantile_crps_examples() {
        let v = crps_quantile_numeric(&bernoulli(), 0.0, 100_000).unwrap().value();
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-4);
        assert_eq!(crps_quantile_numeric(&delta(4.0), 4.0, 16).unwrap().value(), 0.0);
        let v = crps_quantile_numeric(&u4(), 2.0, 100_000).unwrap().value();
        assert_abs_diff_eq!(v, crps(&u4(), 2.0, CrpsMethod::Energy).unwrap().value(), epsilon = 1e-3);
        assert!(crps_quantile_numeric(&u4(), 2.0, 8).is_err());
    }

    #[test]
    fn log_score_examples() {
        let d = dist(&[(-1.0, 0.25), (2.0, 0.75)]);
        assert_abs_diff_eq!(log_score(&d, -1.0).unwrap().value(), 4f64.ln(), epsilon = 1e-15);
        let certain = log_score(&delta(2.0), 2.0).unwrap().value();
        assert_eq!(certain.to_bits(), 0f64.to_bits());
        assert!(log_score(&delta(0.0), 1.0).unwrap().is_infinite());
    }

    #[test]
    fn expected_score_examples() {
        let b = bernoulli();
        assert_eq!(expected_score(&ScoringRule::Crps, &b, &b).unwrap().value(), 0.25);
        let q = dist(&[(0.0, 0.2), (1.0, 0.3), (2.0, 0.5)]);
        let entropy: f64 = q.masses().iter().map(|p| -p * p.ln()).sum();
        assert_abs_diff_eq!(
            expected_score(&ScoringRule::LogScore, &q, &q).unwrap().value(),
            entropy,
            epsilon = 1e-15
        );
        assert_eq!(
            expected_score(&ScoringRule::Crps, &delta(0.0), &delta(0.0)).unwrap().value(),
            0.0
        );
        assert!(expected_score(&ScoringRule::LogScore, &delta(0.0), &b)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn series_examples() {
        let s = score_series(&ScoringRule::Crps, &[delta(1.0), delta(2.0)], &[1.0, 5.0]).unwrap();
        let scores: Vec<f64> = s.scores().map(ScoreValue::value).collect();
        assert_eq!(scores, vec![0.0, 3.0]);
        assert_eq!(s.mean().value(), 1.5);

        let s = score_series(&ScoringRule::LogScore, &[delta(0.0)], &[1.0]).unwrap();
        assert!(s.mean().is_infinite());
        assert_eq!(s.infinite_count(), 1);

        let s = score_series(&ScoringRule::Crps, &[u4()], &[3.3]).unwrap();
        assert_eq!(s.mean(), s.entries()[0].score);

        assert_eq!(
            score_series(&ScoringRule::Crps, &[u4()], &[1.0, 2.0]),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn diebold_mariano_examples() {
        let a = ScoreSeries::from_scores(&[0.3, 1.2, 0.8, 2.0]).unwrap();
        let r = diebold_mariano(&a, &a, 0).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));

        let b = ScoreSeries::from_scores(&[0.0; 6]).unwrap();
        let alt = ScoreSeries::from_scores(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0]).unwrap();
        let r = diebold_mariano(&alt, &b, 0).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));

        let c = ScoreSeries::from_scores(&[0.7; 6]).unwrap();
        let r = diebold_mariano(&c, &b, 2).unwrap();
        assert_eq!((r.statistic, r.p_value), (f64::INFINITY, 0.0));
    }

    #[test]
    fn diebold_mariano_reference_value() {
        // d = (1, 2, 3, 4): mean 2.5, variance (denominator n) 1.25
        let a = ScoreSeries::from_scores(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = ScoreSeries::from_scores(&[0.0; 4]).unwrap();
        let r = diebold_mariano(&a, &b, 0).unwrap();
        assert_abs_diff_eq!(r.statistic, 2.5 / (1.25f64 / 4.0).sqrt(), epsilon = 1e-14);
        // lag 1: γ1 = ((−0.5)(−1.5) + (0.5)(−0.5) + (1.5)(0.5)) / 4 = 0.3125
        let r = diebold_mariano(&a, &b, 1).unwrap();
        let lrv: f64 = 1.25 + 2.0 * 0.5 * 0.3125;
        assert_abs_diff_eq!(r.statistic, 2.5 / (lrv / 4.0).sqrt(), epsilon = 1e-14);
        let expected_p = 2.0 * (1.0 - normal_cdf(r.statistic));
        assert_abs_diff_eq!(r.p_value, expected_p, epsilon = 1e-12);
    }

    fn normal_cdf(x: f64) -> f64 {
        use statrs::distribution::{ContinuousCDF, Normal};
        Normal::new(0.0, 1.0).unwrap().cdf(x)
    }

    #[test]
    fn diebold_mariano_errors() {
        let a = ScoreSeries::from_scores(&[1.0, 2.0]).unwrap();
        let b = ScoreSeries::from_scores(&[1.0]).unwrap();
        assert!(matches!(diebold_mariano(&a, &b, 0), Err(Error::LengthMismatch { .. })));
        assert_eq!(diebold_mariano(&b, &b, 0), Err(Error::DegenerateSeries(1)));
        let inf = ScoreSeries::from_scores(&[1.0, f64::INFINITY]).unwrap();
        assert_eq!(diebold_mariano(&a, &inf, 0), Err(Error::InfiniteScore));
        assert!(matches!(diebold_mariano(&a, &a, 2), Err(Error::InvalidParameter(_))));
    }
}
