//! Finite prediction spaces: outcomes, information partitions, conditional
//! laws and the forecasts built from them.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::distribution::{DiscreteDistribution, MASS_TOLERANCE};
use crate::elicitation::{minimizer_interval, LossFunction};
use crate::error::{check_level, Error, Result};
use crate::functionals::{expectile, expected_shortfall_upper, quantile_lower};
use crate::scoring::{ScoreValue, ScoringRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outcome {
    pub label: String,
    #[serde(rename = "p")]
    pub probability: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Partition {
    cells: Vec<String>,
    assignment: Vec<usize>,
}

/// A finite probability space with a real observable and named partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePredictionSpace {
    outcomes: Vec<Outcome>,
    index: HashMap<String, usize>,
    partitions: BTreeMap<String, Partition>,
}

impl FinitePredictionSpace {
    /// `partitions` maps a partition name to `outcome label → cell id`.
    pub fn new(
        outcomes: Vec<Outcome>,
        partitions: BTreeMap<String, BTreeMap<String, String>>,
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidSpace("no outcomes".into()));
        }
        let mut index = HashMap::with_capacity(outcomes.len());
        let mut total = 0.0;
        for (i, o) in outcomes.iter().enumerate() {
            if o.label.is_empty() {
                return Err(Error::InvalidSpace(format!("outcome {i} has an empty label")));
            }
            if index.insert(o.label.clone(), i).is_some() {
                return Err(Error::InvalidSpace(format!("duplicate label '{}'", o.label)));
            }
            if !(o.probability.is_finite() && o.probability > 0.0) {
                return Err(Error::InvalidSpace(format!(
                    "outcome '{}' has probability {}",
                    o.label, o.probability
                )));
            }
            if !o.y.is_finite() {
                return Err(Error::NonFiniteValue(format!("y of outcome '{}'", o.label)));
            }
            total += o.probability;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::MassNotNormalized { sum: total });
        }
        let mut space = Self {
            outcomes,
            index,
            partitions: BTreeMap::new(),
        };
        for (name, map) in partitions {
            space.insert_partition(name, |label| map.get(label).cloned(), map.len())?;
        }
        Ok(space)
    }

    /// Adds a partition given the cell id of each outcome in outcome order.
    pub fn with_partition(mut self, name: impl Into<String>, cells: &[&str]) -> Result<Self> {
        if cells.len() != self.outcomes.len() {
            return Err(Error::LengthMismatch {
                left: cells.len(),
                right: self.outcomes.len(),
            });
        }
        let lookup: HashMap<String, String> = self
            .outcomes
            .iter()
            .zip(cells)
            .map(|(o, c)| (o.label.clone(), c.to_string()))
            .collect();
        let n = self.outcomes.len();
        self.insert_partition(name.into(), |label| lookup.get(label).cloned(), n)?;
        Ok(self)
    }

    fn insert_partition<F>(&mut self, name: String, cell_of: F, mapped: usize) -> Result<()>
    where
        F: Fn(&str) -> Option<String>,
    {
        let mut cells: Vec<String> = Vec::new();
        let mut assignment = Vec::with_capacity(self.outcomes.len());
        for o in &self.outcomes {
            let cell = cell_of(&o.label).ok_or_else(|| {
                Error::InvalidSpace(format!("partition '{name}' does not assign '{}'", o.label))
            })?;
            let id = match cells.iter().position(|c| *c == cell) {
                Some(id) => id,
                None => {
                    cells.push(cell);
                    cells.len() - 1
                }
            };
            assignment.push(id);
        }
        if mapped != self.outcomes.len() {
            return Err(Error::InvalidSpace(format!(
                "partition '{name}' assigns {mapped} labels but the space has {} outcomes",
                self.outcomes.len()
            )));
        }
        self.partitions.insert(name, Partition { cells, assignment });
        Ok(())
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|o| o.label.as_str())
    }

    pub fn partition_names(&self) -> impl Iterator<Item = &str> {
        self.partitions.keys().map(String::as_str)
    }

    /// Cell ids of a partition in order of first appearance.
    pub fn cells(&self, partition: &str) -> Result<&[String]> {
        Ok(&self.partition(partition)?.cells)
    }

    /// Index into [`cells`](Self::cells) for each outcome, in outcome order.
    pub fn assignment(&self, partition: &str) -> Result<&[usize]> {
        Ok(&self.partition(partition)?.assignment)
    }

    fn partition(&self, name: &str) -> Result<&Partition> {
        self.partitions
            .get(name)
            .ok_or_else(|| Error::UnknownPartition(name.to_string()))
    }

    /// Law of `Y` over all outcomes.
    pub fn law(&self) -> Result<DiscreteDistribution> {
        DiscreteDistribution::new(self.outcomes.iter().map(|o| (o.y, o.probability)))
    }
}

/// A cell-wise family of forecast distributions for one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel {
    partition: String,
    cells: Vec<String>,
    laws: Vec<DiscreteDistribution>,
    labels: Vec<String>,
    assignment: Vec<usize>,
}

impl MarkovKernel {
    /// Builds a kernel from one distribution per cell of `partition`.
    pub fn new<I>(space: &FinitePredictionSpace, partition: &str, laws: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, DiscreteDistribution)>,
    {
        let part = space.partition(partition)?;
        let mut slots: Vec<Option<DiscreteDistribution>> = vec![None; part.cells.len()];
        for (cell, law) in laws {
            let i = part
                .cells
                .iter()
                .position(|c| *c == cell)
                .ok_or_else(|| Error::InvalidKernel(format!("unknown cell '{cell}'")))?;
            if slots[i].replace(law).is_some() {
                return Err(Error::InvalidKernel(format!("cell '{cell}' given twice")));
            }
        }
        let laws = slots
            .into_iter()
            .zip(&part.cells)
            .map(|(law, cell)| law.ok_or_else(|| Error::InvalidKernel(format!("missing cell '{cell}'"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            partition: partition.to_string(),
            cells: part.cells.clone(),
            laws,
            labels: space.labels().map(str::to_string).collect(),
            assignment: part.assignment.clone(),
        })
    }

    pub fn partition(&self) -> &str {
        &self.partition
    }

    pub fn cells(&self) -> impl Iterator<Item = (&str, &DiscreteDistribution)> {
        self.cells.iter().map(String::as_str).zip(&self.laws)
    }

    pub fn law(&self, cell: &str) -> Option<&DiscreteDistribution> {
        self.cells.iter().position(|c| c == cell).map(|i| &self.laws[i])
    }

    /// Forecast distribution issued at the outcome with the given index.
    pub fn law_at(&self, outcome: usize) -> &DiscreteDistribution {
        &self.laws[self.assignment[outcome]]
    }

    fn check_space(&self, space: &FinitePredictionSpace) -> Result<()> {
        if self.labels.len() != space.outcomes.len()
            || self.labels.iter().zip(space.labels()).any(|(a, b)| a != b)
        {
            return Err(Error::InvalidKernel("kernel belongs to a different space".into()));
        }
        Ok(())
    }
}

/// A real value per outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointForecast {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl PointForecast {
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: values.len(),
            });
        }
        Ok(Self { labels, values })
    }

    /// Values listed in the space's outcome order.
    pub fn for_space(space: &FinitePredictionSpace, values: Vec<f64>) -> Result<Self> {
        Self::new(space.labels().map(str::to_string).collect(), values)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.values[i])
    }

    /// Reorders to the space's outcome order, failing unless the forecast is total.
    fn aligned(&self, space: &FinitePredictionSpace) -> Result<Vec<f64>> {
        if self.labels.len() != space.outcomes.len() {
            return Err(Error::LengthMismatch {
                left: self.labels.len(),
                right: space.outcomes.len(),
            });
        }
        let mut out = vec![f64::NAN; space.outcomes.len()];
        let mut seen = vec![false; space.outcomes.len()];
        for (label, &v) in self.labels.iter().zip(&self.values) {
            let i = *space
                .index
                .get(label)
                .ok_or_else(|| Error::InvalidSpace(format!("forecast label '{label}' is not an outcome")))?;
            if seen[i] {
                return Err(Error::InvalidSpace(format!("forecast repeats label '{label}'")));
            }
            seen[i] = true;
            out[i] = v;
        }
        Ok(out)
    }
}

/// Point functionals that can be applied cell by cell.
#[derive(Debug, Clone)]
pub enum Functional {
    Mean,
    QuantileLower(f64),
    Expectile(f64),
    EsUpper(f64),
    /// Smallest Bayes act of the loss.
    Minimizer(LossFunction),
}

impl Functional {
    pub fn evaluate(&self, dist: &DiscreteDistribution) -> Result<f64> {
        match self {
            Functional::Mean => Ok(dist.mean()),
            Functional::QuantileLower(alpha) => {
                check_level("alpha", *alpha, true, true)?;
                quantile_lower(dist, *alpha)
            }
            Functional::Expectile(tau) => expectile(dist, *tau),
            Functional::EsUpper(alpha) => expected_shortfall_upper(dist, *alpha),
            Functional::Minimizer(loss) => Ok(minimizer_interval(loss, dist)?.t_min),
        }
    }
}

/// Restricts `Y` to each cell and renormalizes by the cell probability.
pub fn conditional_kernel(space: &FinitePredictionSpace, partition: &str) -> Result<MarkovKernel> {
    let part = space.partition(partition)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); part.cells.len()];
    for (i, &c) in part.assignment.iter().enumerate() {
        members[c].push(i);
    }
    let laws = members
        .iter()
        .map(|idx| {
            let mass: f64 = idx.iter().map(|&i| space.outcomes[i].probability).sum();
            DiscreteDistribution::new(idx.iter().map(|&i| {
                let o = &space.outcomes[i];
                (o.y, o.probability / mass)
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    MarkovKernel::new(space, partition, part.cells.iter().cloned().zip(laws))
}

/// Evaluates `T` once per cell and broadcasts the value to the cell's outcomes.
pub fn apply_functional_to_kernel(kernel: &MarkovKernel, functional: &Functional) -> Result<PointForecast> {
    let per_cell = kernel
        .laws
        .iter()
        .map(|law| functional.evaluate(law))
        .collect::<Result<Vec<_>>>()?;
    let values = kernel.assignment.iter().map(|&c| per_cell[c]).collect();
    PointForecast::new(kernel.labels.clone(), values)
}

/// `ω ↦ T(P_{Y|G}(ω, ·))`.
pub fn ideal_point_forecast(
    space: &FinitePredictionSpace,
    partition: &str,
    functional: &Functional,
) -> Result<PointForecast> {
    apply_functional_to_kernel(&conditional_kernel(space, partition)?, functional)
}

/// True iff the forecast takes a single (bitwise equal) value on every cell.
pub fn is_measurable(forecast: &PointForecast, space: &FinitePredictionSpace, partition: &str) -> Result<bool> {
    let part = space.partition(partition)?;
    let values = forecast.aligned(space)?;
    let mut first: Vec<Option<f64>> = vec![None; part.cells.len()];
    for (&c, &v) in part.assignment.iter().zip(&values) {
        match first[c] {
            None => first[c] = Some(v),
            Some(u) if u.to_bits() != v.to_bits() => return Ok(false),
            Some(_) => {}
        }
    }
    Ok(true)
}

/// `Σ_ω P(ω) L(forecast(ω), Y(ω))`.
pub fn expected_point_score(
    space: &FinitePredictionSpace,
    forecast: &PointForecast,
    loss: &LossFunction,
) -> Result<f64> {
    let values = forecast.aligned(space)?;
    let mut total = 0.0;
    for (o, &a) in space.outcomes.iter().zip(&values) {
        if !loss.domain().contains(a) {
            return Err(Error::ActionOutOfDomain(a));
        }
        total += o.probability * loss.evaluate(a, o.y);
    }
    Ok(total)
}

/// Per-cell smallest Bayes act and its expected score.
pub fn best_measurable_forecast(
    space: &FinitePredictionSpace,
    partition: &str,
    loss: &LossFunction,
) -> Result<(PointForecast, f64)> {
    let forecast = ideal_point_forecast(space, partition, &Functional::Minimizer(loss.clone()))?;
    let value = expected_point_score(space, &forecast, loss)?;
    Ok((forecast, value))
}

/// `Σ_ω P(ω) S(κ(ω); Y(ω))`.
pub fn expected_probabilistic_score(
    space: &FinitePredictionSpace,
    kernel: &MarkovKernel,
    rule: &ScoringRule,
) -> Result<ScoreValue> {
    kernel.check_space(space)?;
    let mut total = 0.0;
    for (i, o) in space.outcomes.iter().enumerate() {
        let s = rule.score(kernel.law_at(i), o.y)?;
        if s.is_infinite() {
            return Ok(ScoreValue::INFINITE);
        }
        total += o.probability * s.value();
    }
    ScoreValue::new(total)
}
