//! Readers and writers for the on-disk formats.
//!
//! Distributions: `{"atoms": [{"x": 1.0, "p": 0.25}, ...]}` or a CSV column of
//! samples. Bivariate: `{"atoms": [{"x": .., "y": .., "p": ..}]}` or two CSV
//! columns. CSV input may start with one header line whose first field is not
//! a number.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::distribution::{BivariateDiscreteDistribution, DiscreteDistribution};
use crate::elicitation::LossKind;
use crate::error::{Error, Result};
use crate::prediction_space::{FinitePredictionSpace, Outcome};
use crate::scoring::{ScoringRule, ThresholdWeight};

/// Formats like C's `%.17g`, which round-trips every finite double.
/// Infinities become `inf` / `-inf`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `{"atoms": [{"x": .., "p": ..}, ...]}` with 17-digit numbers.
pub fn distribution_to_json(dist: &DiscreteDistribution) -> String {
    let atoms: Vec<String> = dist
        .atoms()
        .map(|(x, p)| format!("{{\"x\": {}, \"p\": {}}}", format_number(x), format_number(p)))
        .collect();
    format!("{{\"atoms\": [{}]}}", atoms.join(", "))
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(json_error)
}

fn json_error(e: serde_json::Error) -> Error {
    let location = format!("line {} column {}", e.line(), e.column());
    let text = e.to_string();
    let message = text
        .strip_suffix(&format!(" at {location}"))
        .unwrap_or(&text)
        .to_string();
    Error::parse(location, message)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomDoc {
    x: f64,
    p: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomsDoc {
    atoms: Vec<AtomDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointAtomDoc {
    x: f64,
    y: f64,
    p: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointAtomsDoc {
    atoms: Vec<JointAtomDoc>,
}

impl AtomsDoc {
    fn build(self) -> Result<DiscreteDistribution> {
        DiscreteDistribution::new(self.atoms.into_iter().map(|a| (a.x, a.p)))
    }
}

pub fn parse_distribution_json(text: &str) -> Result<DiscreteDistribution> {
    from_json::<AtomsDoc>(text)?.build()
}

pub fn parse_bivariate_json(text: &str) -> Result<BivariateDiscreteDistribution> {
    let doc: JointAtomsDoc = from_json(text)?;
    BivariateDiscreteDistribution::new(doc.atoms.into_iter().map(|a| (a.x, a.y, a.p)))
}

fn is_json(text: &str) -> bool {
    matches!(text.trim_start().chars().next(), Some('{') | Some('['))
}

/// JSON atoms, or a CSV column of samples turned into the empirical law.
pub fn parse_distribution(text: &str) -> Result<DiscreteDistribution> {
    if is_json(text) {
        parse_distribution_json(text)
    } else {
        DiscreteDistribution::from_samples(&parse_samples_csv(text)?)
    }
}

/// JSON joint atoms, or two CSV columns of paired samples.
pub fn parse_bivariate(text: &str) -> Result<BivariateDiscreteDistribution> {
    if is_json(text) {
        parse_bivariate_json(text)
    } else {
        BivariateDiscreteDistribution::from_samples(&parse_pairs_csv(text)?)
    }
}

fn parse_csv(text: &str, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(format!("line {line}"), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if first {
            first = false;
            if record.get(0).is_none_or(|f| f.parse::<f64>().is_err()) {
                continue;
            }
        }
        if record.len() != columns {
            return Err(Error::parse(
                format!("line {line}"),
                format!("expected {columns} field(s), found {}", record.len()),
            ));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, f)| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(Error::parse(
                    format!("line {line} field {}", j + 1),
                    format!("non-finite value '{f}'"),
                )),
                Err(_) => Err(Error::parse(
                    format!("line {line} field {}", j + 1),
                    format!("'{f}' is not a number"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn parse_samples_csv(text: &str) -> Result<Vec<f64>> {
    Ok(parse_csv(text, 1)?.into_iter().map(|r| r[0]).collect())
}

pub fn parse_pairs_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    Ok(parse_csv(text, 2)?.into_iter().map(|r| (r[0], r[1])).collect())
}

/// Observations as a CSV column or a JSON array of numbers.
pub fn parse_observations(text: &str) -> Result<Vec<f64>> {
    if is_json(text) {
        let values: Vec<f64> = from_json(text)?;
        Ok(values)
    } else {
        parse_samples_csv(text)
    }
}

/// `[{"atoms": ...}, ...]` or `{"forecasts": [...]}`.
pub fn parse_forecasts(text: &str) -> Result<Vec<DiscreteDistribution>> {
    let value: Value = from_json(text)?;
    let list = match value {
        Value::Array(items) => items,
        Value::Object(mut obj) => match (obj.remove("forecasts"), obj.is_empty()) {
            (Some(Value::Array(items)), true) => items,
            _ => return Err(Error::Schema("expected an array or {\"forecasts\": [...]}".into())),
        },
        _ => return Err(Error::Schema("expected an array or {\"forecasts\": [...]}".into())),
    };
    list.into_iter()
        .enumerate()
        .map(|(i, item)| {
            let doc: AtomsDoc = serde_json::from_value(item)
                .map_err(|e| Error::parse(format!("forecast {i}"), e.to_string()))?;
            doc.build()
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceDoc {
    outcomes: Vec<Outcome>,
    #[serde(default)]
    partitions: BTreeMap<String, BTreeMap<String, String>>,
}

pub fn parse_space(text: &str) -> Result<FinitePredictionSpace> {
    let doc: SpaceDoc = from_json(text)?;
    FinitePredictionSpace::new(doc.outcomes, doc.partitions)
}

/// `{"loss": {"kind": ..}}` or the bare `{"kind": ..}` object.
pub fn parse_loss_spec(text: &str) -> Result<LossKind> {
    let value: Value = from_json(text)?;
    let inner = match value {
        Value::Object(mut obj) if obj.contains_key("loss") => {
            let inner = obj.remove("loss").expect("key checked");
            if !obj.is_empty() {
                let keys: Vec<_> = obj.keys().cloned().collect();
                return Err(Error::Schema(format!("unknown keys {keys:?} next to \"loss\"")));
            }
            inner
        }
        other => other,
    };
    serde_json::from_value(inner).map_err(|e| Error::parse("loss", e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreRequestDoc {
    rule: String,
    #[serde(default)]
    params: Map<String, Value>,
}

/// `{"rule": "crps" | "twcrps" | "logscore", "params": {...}}`.
pub fn parse_score_request(text: &str) -> Result<ScoringRule> {
    let doc: ScoreRequestDoc = from_json(text)?;
    scoring_rule(&doc.rule, &doc.params)
}

/// Builds a rule from its name and parameters. `twcrps` accepts `lower` and
/// `upper` bounds of an indicator weight (numbers or `"inf"`/`"-inf"`),
/// defaulting to the whole line.
pub fn scoring_rule(name: &str, params: &Map<String, Value>) -> Result<ScoringRule> {
    let allowed: &[&str] = match name {
        "crps" | "logscore" => &[],
        "twcrps" => &["lower", "upper"],
        other => return Err(Error::Schema(format!("unknown scoring rule '{other}'"))),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Schema(format!("unknown param '{k}' for rule '{name}'")));
    }
    Ok(match name {
        "crps" => ScoringRule::Crps,
        "logscore" => ScoringRule::LogScore,
        _ => {
            let lower = bound(params, "lower", f64::NEG_INFINITY)?;
            let upper = bound(params, "upper", f64::INFINITY)?;
            if lower == f64::NEG_INFINITY && upper == f64::INFINITY {
                ScoringRule::TwCrps(ThresholdWeight::uniform())
            } else {
                ScoringRule::TwCrps(ThresholdWeight::indicator(lower, upper)?)
            }
        }
    })
}

fn bound(params: &Map<String, Value>, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| Error::Schema(format!("param '{key}' is not a real number"))),
        Some(Value::String(s)) if s == "inf" => Ok(f64::INFINITY),
        Some(Value::String(s)) if s == "-inf" => Ok(f64::NEG_INFINITY),
        Some(other) => Err(Error::Schema(format!("param '{key}' has invalid value {other}"))),
    }
}
