//! Finite probability measures on the real line and the plane.
//!
//! A [`DiscreteDistribution`] stores its atoms sorted by value together with
//! the running cumulative masses. Every probe, quantile and tail sum in the
//! crate reads from that one cumulative array, so the comparisons `F(p) < α`
//! and `q_α(F) > p` are made on identical floats.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance accepted on the total mass of raw input.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A probability measure with finitely many atoms on the reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    masses: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Left limit, point mass and value of the distribution function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub cdf_left: f64,
    pub point: f64,
    pub cdf: f64,
}

fn check_atom(x: f64, p: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::NonFiniteValue(format!("atom value {x}")));
    }
    if !p.is_finite() {
        return Err(Error::NonFiniteValue(format!("mass {p} at {x}")));
    }
    if p < 0.0 {
        return Err(Error::NegativeMass(p));
    }
    Ok(())
}

/// Sums in iteration order, checks the total against 1 and divides it out.
fn normalize(masses: &mut [f64]) -> Result<()> {
    let sum: f64 = masses.iter().sum();
    if (sum - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::MassNotNormalized { sum });
    }
    if sum != 1.0 {
        masses.iter_mut().for_each(|m| *m /= sum);
    }
    Ok(())
}

impl DiscreteDistribution {
    /// Builds the canonical form of a list of `(value, mass)` pairs.
    ///
    /// Atoms are sorted, duplicate values merged and zero masses dropped.
    /// A total mass within [`MASS_TOLERANCE`] of one is renormalized; the
    /// last mass is then adjusted so the stored cumulative sum ends at
    /// exactly `1.0` whenever that keeps it positive.
    pub fn new<I>(raw: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut atoms = Vec::new();
        for (x, p) in raw {
            check_atom(x, p)?;
            if p > 0.0 {
                // folds -0.0 into +0.0
                atoms.push((x + 0.0, p));
            }
        }
        if atoms.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut values: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut masses: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, p) in atoms {
            match values.last() {
                Some(&last) if last == x => *masses.last_mut().unwrap() += p,
                _ => {
                    values.push(x);
                    masses.push(p);
                }
            }
        }
        normalize(&mut masses)?;

        let n = masses.len();
        if n > 1 {
            let head: f64 = masses[..n - 1].iter().sum();
            let last = 1.0 - head;
            if last > 0.0 {
                masses[n - 1] = last;
            }
        }
        let cumulative = masses
            .iter()
            .scan(0.0, |acc, &m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            values,
            masses,
            cumulative,
        })
    }

    /// Empirical measure of a sample: each distinct value gets `count / n`.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let mut sorted = samples.to_vec();
        if let Some(bad) = sorted.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue(format!("sample {bad}")));
        }
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut raw: Vec<(f64, f64)> = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let x = sorted[i] + 0.0;
            let mut j = i;
            while j < sorted.len() && sorted[j] + 0.0 == x {
                j += 1;
            }
            raw.push((x, (j - i) as f64 / n));
            i = j;
        }
        Self::new(raw)
    }

    /// The Dirac measure at `x`.
    pub fn point_mass(x: f64) -> Result<Self> {
        Self::new([(x, 1.0)])
    }

    /// Uniform distribution over the given (not necessarily distinct) values.
    pub fn uniform(values: &[f64]) -> Result<Self> {
        Self::from_samples(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Support points in increasing order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Running sums of the masses; `cumulative()[k] = F(values()[k])`.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.masses.iter().copied())
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Width of the convex hull of the support.
    pub fn span(&self) -> f64 {
        self.max() - self.min()
    }

    /// Number of atoms strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v < x)
    }

    /// Exact `F(x−)`, `P({x})` and `F(x)`.
    pub fn probe(&self, x: f64) -> ProbeResult {
        let i = self.count_below(x);
        let cdf_left = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        if i < self.values.len() && self.values[i] == x {
            ProbeResult {
                cdf_left,
                point: self.masses[i],
                cdf: self.cumulative[i],
            }
        } else {
            ProbeResult {
                cdf_left,
                point: 0.0,
                cdf: cdf_left,
            }
        }
    }

    /// `F(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.probe(x).cdf
    }

    /// Mass of the atom at `x`, zero if `x` is not in the support.
    pub fn mass_at(&self, x: f64) -> f64 {
        self.probe(x).point
    }

    /// `∫ h dF`, summed in ascending value order.
    pub fn expectation<H>(&self, h: H) -> Result<f64>
    where
        H: Fn(f64) -> f64,
    {
        let mut total = 0.0;
        for (x, p) in self.atoms() {
            let v = h(x);
            if !v.is_finite() {
                return Err(Error::NonFiniteValue(format!("h({x}) = {v}")));
            }
            total += p * v;
        }
        Ok(total)
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(x, p)| p * x).sum()
    }

    /// Convex combination of distributions.
    pub fn mixture(components: &[(&DiscreteDistribution, f64)]) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        for &(_, w) in components {
            if !w.is_finite() {
                return Err(Error::NonFiniteValue(format!("mixture weight {w}")));
            }
            if w < 0.0 {
                return Err(Error::NegativeMass(w));
            }
        }
        let total: f64 = components.iter().map(|c| c.1).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::MassNotNormalized { sum: total });
        }
        let raw = components
            .iter()
            .flat_map(|&(d, w)| d.atoms().map(move |(x, p)| (x, w * p)));
        Self::new(raw)
    }
}

/// A probability measure with finitely many atoms on the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateDiscreteDistribution {
    atoms: Vec<(f64, f64, f64)>,
}

fn lexicographic(a: &(f64, f64, f64), b: &(f64, f64, f64)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
}

impl BivariateDiscreteDistribution {
    /// Canonical form of `(x, y, mass)` triples, sorted by `(x, y)`.
    pub fn new<I>(raw: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64, f64)>,
    {
        let mut atoms = Vec::new();
        for (x, y, p) in raw {
            check_atom(x, p)?;
            if !y.is_finite() {
                return Err(Error::NonFiniteValue(format!("atom value {y}")));
            }
            if p > 0.0 {
                atoms.push((x + 0.0, y + 0.0, p));
            }
        }
        if atoms.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        atoms.sort_by(lexicographic);
        let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == a.0 && last.1 == a.1 => last.2 += a.2,
                _ => merged.push(a),
            }
        }
        let mut masses: Vec<f64> = merged.iter().map(|a| a.2).collect();
        normalize(&mut masses)?;
        for (a, m) in merged.iter_mut().zip(masses) {
            a.2 = m;
        }
        Ok(Self { atoms: merged })
    }

    /// Empirical measure of paired samples.
    pub fn from_samples(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let w = 1.0 / samples.len() as f64;
        // Merged masses of equal pairs can drift from k/n by an ulp; the
        // normalization step absorbs that.
        Self::new(samples.iter().map(|&(x, y)| (x, y, w)))
    }

    /// Product measure of two marginals.
    pub fn product(x: &DiscreteDistribution, y: &DiscreteDistribution) -> Result<Self> {
        Self::new(
            x.atoms()
                .flat_map(|(a, p)| y.atoms().map(move |(b, q)| (a, b, p * q))),
        )
    }

    pub fn atoms(&self) -> &[(f64, f64, f64)] {
        &self.atoms
    }

    /// Laws of the first and second coordinate.
    pub fn marginals(&self) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
        let xs = DiscreteDistribution::new(self.atoms.iter().map(|a| (a.0, a.2)))?;
        let ys = DiscreteDistribution::new(self.atoms.iter().map(|a| (a.1, a.2)))?;
        Ok((xs, ys))
    }
}
