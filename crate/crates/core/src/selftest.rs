//! Randomized verification suites shipped with the library.
//!
//! Each suite draws its inputs from a seeded ChaCha generator, so a given
//! seed always reproduces the same cases.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distribution::{BivariateDiscreteDistribution, DiscreteDistribution};
use crate::elicitation::{expected_loss, make_loss, minimizer_interval, LossKind, Phi};
use crate::error::Result;
use crate::functionals::{
    covar_conditional, covar_conditional_atoms, expectile, moment_stats, quantile_lower, quantiles,
    weighted_quantile_average, WeightFunction,
};
use crate::prediction_space::{
    best_measurable_forecast, expected_point_score, ideal_point_forecast, is_measurable,
    FinitePredictionSpace, Functional, Outcome, PointForecast,
};
use crate::scoring::{crps, crps_quantile_numeric, expected_score, mean_abs_difference, CrpsMethod, ScoringRule};

pub const DEFAULT_SEED: u64 = 0x1dea_1ca5;
pub const SUITE_COUNT: u8 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub id: u8,
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub detail: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub fn suite_name(id: u8) -> &'static str {
    match id {
        1 => "quantile characterization",
        2 => "crps representation equivalence",
        3 => "expected shortfall as bayes risk",
        4 => "expectile consistency",
        5 => "variance as bayes risk",
        6 => "covar conditional law",
        7 => "minimizer grid characterization",
        8 => "ideal forecast optimality",
        9 => "propriety",
        10 => "quantile-integral crps convergence",
        _ => "unknown",
    }
}

/// Runs suite `id` (1 to 10). Library errors inside a suite count as failures.
pub fn run_suite(id: u8, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(id) << 32));
    let mut tally = Tally::default();
    let outcome = match id {
        1 => quantile_characterization(&mut rng, &mut tally),
        2 => crps_equivalence(&mut rng, &mut tally),
        3 => es_bayes_risk(&mut rng, &mut tally),
        4 => expectile_consistency(&mut rng, &mut tally),
        5 => variance_bayes_risk(&mut rng, &mut tally),
        6 => covar_validity(&mut rng, &mut tally),
        7 => grid_characterization(&mut rng, &mut tally),
        8 => ideal_optimality(&mut rng, &mut tally),
        9 => propriety(&mut rng, &mut tally),
        10 => quantile_crps_convergence(seed, &mut tally),
        _ => {
            tally.fail(format!("no suite {id}"));
            Ok(())
        }
    };
    if let Err(e) = outcome {
        tally.fail(format!("error: {e}"));
    }
    SuiteReport {
        id,
        name: suite_name(id),
        cases: tally.cases,
        failures: tally.failures,
        detail: tally.detail(),
    }
}

pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    (1..=SUITE_COUNT).map(|id| run_suite(id, seed)).collect()
}

#[derive(Default)]
struct Tally {
    cases: usize,
    failures: usize,
    first_failures: Vec<String>,
    notes: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.fail(describe());
        }
    }

    fn fail(&mut self, message: String) {
        self.failures += 1;
        if self.first_failures.len() < 3 {
            self.first_failures.push(message);
        }
    }

    fn note(&mut self, message: String) {
        self.notes.push(message);
    }

    fn detail(&self) -> String {
        let mut parts = self.notes.clone();
        parts.extend(self.first_failures.iter().cloned());
        parts.join("; ")
    }
}

fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}

/// Up to `max_atoms` atoms, either continuous in [-10, 10] or on the
/// integers -5..=5 (which produces ties that merge).
fn random_distribution(rng: &mut ChaCha8Rng, max_atoms: usize) -> DiscreteDistribution {
    let n = rng.gen_range(1..=max_atoms);
    let integer = rng.gen_bool(0.3);
    let raw: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let x = if integer {
                rng.gen_range(-5i32..=5) as f64
            } else {
                rng.gen_range(-10.0..10.0)
            };
            (x, rng.gen_range(0.01..1.0))
        })
        .collect();
    let total: f64 = raw.iter().map(|a| a.1).sum();
    DiscreteDistribution::new(raw.into_iter().map(|(x, p)| (x, p / total)))
        .expect("normalized random masses")
}

/// A level in (0, 1), sometimes hitting a cumulative sum of `dist` exactly.
fn random_level(rng: &mut ChaCha8Rng, dist: &DiscreteDistribution, tie_probability: f64) -> f64 {
    if rng.gen_bool(tie_probability) {
        let cum = dist.cumulative();
        let c = cum[rng.gen_range(0..cum.len())];
        if c < 1.0 {
            return c;
        }
    }
    open_unit(rng)
}

fn random_point(rng: &mut ChaCha8Rng, dist: &DiscreteDistribution, pad: f64) -> f64 {
    if rng.gen_bool(0.3) {
        *dist.values().choose(rng).expect("nonempty")
    } else {
        rng.gen_range(dist.min() - pad..=dist.max() + pad)
    }
}

fn quantile_characterization(rng: &mut ChaCha8Rng, t: &mut Tally) -> Result<()> {
    for _ in 0..10_000 {
        let f = random_distribution(rng, 64);
        let alpha = random_level(rng, &f, 0.3);
        let p = random_point(rng, &f, 1.0);
        let q = quantile_lower(&f, alpha)?;
        let cdf = f.cdf(p);
        t.check((q > p) == (cdf < alpha), || {
            format!("alpha {alpha}, p {p}: q {q}, F(p) {cdf}")
        });
    }
    Ok(())
}

fn crps_equivalence(rng: &mut ChaCha8Rng, t: &mut Tally) -> Result<()> {
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let f = random_distribution(rng, 64);
        let y = random_point(rng, &f, 2.0);
        let energy = crps(&f, y, CrpsMethod::Energy)?.value();
        let threshold = crps(&f, y, CrpsMethod::Threshold)?.value();
        worst = worst.max((energy - threshold).abs());
        t.check((energy - threshold).abs() <= 1e-10, || {
            format!("y {y}: energy {energy} vs threshold {threshold}")
        });
        let mut quadratic = 0.0;
        for (xi, pi) in f.atoms() {
            for (xj, pj) in f.atoms() {
                quadratic += pi * pj * (xi - xj).abs();
            }
        }
        let prefix = mean_abs_difference(&f);
        t.check((prefix - quadratic).abs() <= 1e-12, || {
            format!("prefix {prefix} vs quadratic {quadratic}")
        });
    }
    t.note(format!("max |energy - threshold| = {worst:.3e}"));
    Ok(())
}

fn es_bayes_risk(rng: &mut ChaCha8Rng, t: &mut Tally) -> Result<()> {
    for _ in 0..1_000 {
        let f = random_distribution(rng, 64);
        let alpha = random_level(rng, &f, 0.2);
        let loss = make_loss(LossKind::EsRu { alpha })?;
        let mi = minimizer_interval(&loss, &f)?;
        let es = weighted_quantile_average(&f, &WeightFunction::es_upper(alpha)?)?;
        t.check((mi.bayes_risk - es).abs() <= 1e-9, || {
            format!("alpha {alpha}: bayes risk {} vs ES {es}", mi.bayes_risk)
        });
        let q = quantiles(&f, alpha)?;
        let (lo, hi) = (q.lower.to_f64(), q.upper.to_f64());
        t.check(
            (mi.t_min - lo).abs() <= 1e-12 && (mi.t_max - hi).abs() <= 1e-12,
            || format!("alpha {alpha}: [{}, {}] vs [{lo}, {hi}]", mi.t_min, mi.t_max),
        );
    }
    Ok(())
}

fn expectile_consistency(rng: &mut ChaCha8Rng, t: &mut Tally) -> Result<()> {
    for _ in 0..1_000 {
        let f = random_distribution(rng, 64);
        let tau = open_unit(rng);
        let solved = expectile(&f, tau)?;
        let plain = minimizer_interval(&make_loss(LossKind::AsymmetricSquared { tau })?, &f)?.t_min;
        let shifted =
            minimizer_interval(&make_loss(LossKind::ShiftedAsymmetricSquared { tau })?, &f)?.t_min;
        let spread = (solved - plain)
            .abs()
            .max((solved - shifted).abs())
            .max((plain - shifted).abs());
        t.check(spread <= 1e-9, || {
            format!("tau {tau}: solved {solved}, loss {plain}, shifted {shifted}")
        });
        // E[(1−τ)(x−Y)⁺ − τ(Y−x)⁺], summed independently of the library
        let residual: f64 = f
            .atoms()
            .map(|(y, p)| p * ((1.0 - tau) * (solved - y).max(0.0) - tau * (y - solved).max(0.0)))
            .sum();
        t.check(residual.abs() <= 1e-10 * (1.0 + f.span()), || {
            format!("tau {tau}: residual {residual}")
        });
        let half = expectile(&f, 0.5)?;
        let mean: f64 = f.atoms().map(|(x, p)| x * p).sum();
        t.check((half - mean).abs() <= 1e-12, || format!("expectile(0.5) {half} vs mean {mean}"));
    }
    Ok(())
}

fn variance_bayes_risk(rng: &mut ChaCha8Rng, t: &mut Tally) -> Result<()> {
    let squared = make_loss(LossKind::Squared)?;
    for _ in 0..1_000 {
        let f = random_distribution(rng, 64);
        let risk = minimizer_interval(&squared, &f)?.bayes_risk;
        let variance = moment_stats(&f).variance;
        t.check((risk - variance).abs() <= 1e-10, || {
            format!("bayes risk {risk} vs variance {variance}")
        });
    }
    Ok(())
}

fn covar_validity(rng: &mut ChaCha8Rng, t: &mut Tally) -> Result<()> {
    for _ in 0..1_000 {
        let n = rng.gen_range(1..=64);
        let raw: Vec<(f64, f64, f64)> = (0..n)
            .map(|_| {
                (
                    rng.gen_range(-3i32..=3) as f64,
                    rng.gen_range(-10.0..10.0),
                    rng.gen_range(0.01..1.0),
                )
            })
            .collect();
        let total: f64 = raw.iter().map(|a| a.2).sum();
        let joint = BivariateDiscreteDistribution::new(raw.into_iter().map(|(x, y, p)| (x, y, p / total)))?;
        let (law_x, _) = joint.marginals()?;
        let beta = random_level(rng, &law_x, 0.3);
        let atoms = covar_conditional_atoms(&joint, beta)?;
        let sum: f64 = atoms.iter().map(|a| a.1).sum();
        t.check(atoms.iter().all(|a| a.1 >= 0.0) && (sum - 1.0).abs() <= 1e-12, || {
            format!("beta {beta}: eta mass {sum}")
        });
    }
    for _ in 0..1_000 {
        let law_x = random_distribution(rng, 16);
        let law_y = random_distribution(rng, 16);
        let joint = BivariateDiscreteDistribution::product(&law_x, &law_y)?;
        // half of the levels sit exactly on a cumulative sum of X
        let beta = random_level(rng, &law_x, 0.5);
        let eta = covar_conditional(&joint, beta)?;
        let same = eta.len() == law_y.len()
            && eta
                .atoms()
                .zip(law_y.atoms())
                .all(|((a, p), (b, q))| a == b && (p - q).abs() <= 1e-12);
        t.check(same, || format!("beta {beta}: eta differs from the Y marginal"));
    }
    Ok(())
}

fn random_builtin_loss(rng: &mut ChaCha8Rng) -> LossKind {
    let level = open_unit(rng);
    let random_phi = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
        0 => Phi::Abs,
        1 => Phi::Square,
        _ => Phi::Power {
            p: rng.gen_range(1.0..3.0),
        },
    };
    match rng.gen_range(0..7) {
        0 => LossKind::Squared,
        1 => LossKind::Pinball { alpha: level },
        2 => LossKind::AsymmetricSquared { tau: level },
        3 => LossKind::ShiftedAsymmetricSquared { tau: level },
        4 => LossKind::PowerGeneralized {
            tau: level,
            p: rng.gen_range(1.0..3.0),
        },
        5 => LossKind::GeneralizedQuantile {
            tau: level,
            phi1: random_phi(rng),
            phi2: random_phi(rng),
        },
        _ => LossKind::EsRu { alpha: level },
    }
}

fn grid_characterization(rng: &mut ChaCha8Rng, t: &mut Tally) -> Result<()> {
    for _ in 0..500 {
        let f = random_distribution(rng, 64);
        let kind = random_builtin_loss(rng);
        let loss = make_loss(kind)?;
        let t_min = minimizer_interval(&loss, &f)?.t_min;
        let (lo, hi) = (f.min() - 1.0, f.max() + 1.0);
        let step = (hi - lo) / 1022.0;
        let mut grid: Vec<f64> = (0..1023).map(|i| lo + step * i as f64).collect();
        grid.push(t_min);
        let a = random_point(rng, &f, 1.0);
        let at_a = expected_loss(&loss, a, &f)?;
        let mut witness = false;
        for &b in grid.iter().filter(|&&b| b > a) {
            if at_a > expected_loss(&loss, b, &f)? {
                witness = true;
                break;
            }
        }
        t.check((t_min > a) == witness, || {
            format!("{kind:?}: a {a}, t_min {t_min}, witness {witness}")
        });
    }
    Ok(())
}

/// Random space with a chain of 2 or 3 nested partitions, coarsest first.
fn random_space(rng: &mut ChaCha8Rng) -> Result<(FinitePredictionSpace, Vec<String>)> {
    let n = rng.gen_range(4..=32);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let outcomes: Vec<Outcome> = raw
        .iter()
        .enumerate()
        .map(|(i, p)| Outcome {
            label: format!("w{i}"),
            probability: p / total,
            y: (rng.gen_range(-50i32..=50) as f64) / 10.0,
        })
        .collect();
    let depth = rng.gen_range(2..=3);
    // finest level first, then repeatedly merge cells
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let finest_cells = rng.gen_range(2..=n);
    levels.push((0..n).map(|_| rng.gen_range(0..finest_cells)).collect());
    for _ in 1..depth {
        let prev = levels.last().expect("nonempty");
        let width = prev.iter().max().expect("nonempty") + 1;
        let merged = rng.gen_range(1..=width);
        let map: Vec<usize> = (0..width).map(|_| rng.gen_range(0..merged)).collect();
        levels.push(prev.iter().map(|&c| map[c]).collect());
    }
    levels.reverse();
    let mut space = FinitePredictionSpace::new(outcomes, Default::default())?;
    let mut names = Vec::new();
    for (depth, cells) in levels.iter().enumerate() {
        let ids: Vec<String> = cells.iter().map(|c| format!("c{c}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let name = format!("level{depth}");
        space = space.with_partition(name.clone(), &refs)?;
        names.push(name);
    }
    Ok((space, names))
}

fn ideal_optimality(rng: &mut ChaCha8Rng, t: &mut Tally) -> Result<()> {
    let mut min_margin = f64::INFINITY;
    for _ in 0..200 {
        let (space, partitions) = random_space(rng)?;
        let ys: Vec<f64> = space.outcomes().iter().map(|o| o.y).collect();
        let (ymin, ymax) = ys
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
        let level = open_unit(rng);
        let cases = [
            (LossKind::Squared, Functional::Mean),
            (LossKind::Pinball { alpha: level }, Functional::QuantileLower(level)),
            (LossKind::AsymmetricSquared { tau: level }, Functional::Expectile(level)),
        ];
        for (kind, functional) in cases {
            let loss = make_loss(kind)?;
            let mut previous: Option<f64> = None;
            for partition in &partitions {
                let ideal = ideal_point_forecast(&space, partition, &functional)?;
                t.check(is_measurable(&ideal, &space, partition)?, || {
                    format!("{kind:?} on {partition}: ideal forecast not measurable")
                });
                let score = expected_point_score(&space, &ideal, &loss)?;
                let (_, best) = best_measurable_forecast(&space, partition, &loss)?;
                t.check((score - best).abs() <= 1e-10, || {
                    format!("{kind:?} on {partition}: ideal {score} vs best {best}")
                });
                let assignment = space.assignment(partition)?.to_vec();
                let cell_count = space.cells(partition)?.len();
                for _ in 0..200 {
                    let near = rng.gen_bool(0.5);
                    let per_cell: Vec<f64> = (0..cell_count)
                        .map(|_| rng.gen_range(ymin - 1.0..=ymax + 1.0))
                        .collect();
                    let scale = rng.gen_range(1e-3..0.5);
                    let values: Vec<f64> = ideal
                        .values()
                        .iter()
                        .zip(&assignment)
                        .map(|(&v, &c)| {
                            if near {
                                v + scale * (per_cell[c] - 0.5 * (ymin + ymax)) / (ymax - ymin + 1.0)
                            } else {
                                per_cell[c]
                            }
                        })
                        .collect();
                    let competitor = PointForecast::for_space(&space, values)?;
                    let other = expected_point_score(&space, &competitor, &loss)?;
                    min_margin = min_margin.min(other - score);
                    t.check(score <= other, || {
                        format!("{kind:?} on {partition}: competitor {other} beats ideal {score}")
                    });
                }
                if let Some(coarser) = previous {
                    t.check(score <= coarser + 1e-12, || {
                        format!("{kind:?}: finer {partition} scores {score} > coarser {coarser}")
                    });
                }
                previous = Some(score);
            }
        }
    }
    t.note(format!("smallest competitor margin {min_margin:.3e}"));
    Ok(())
}

fn perturbed(rng: &mut ChaCha8Rng, dist: &DiscreteDistribution, eps: f64) -> DiscreteDistribution {
    let raw: Vec<(f64, f64)> = dist
        .atoms()
        .map(|(x, p)| (x, p * (1.0 + eps * rng.gen_range(-1.0..1.0))))
        .collect();
    let total: f64 = raw.iter().map(|a| a.1).sum();
    DiscreteDistribution::new(raw.into_iter().map(|(x, p)| (x, p / total))).expect("normalized")
}

fn propriety(rng: &mut ChaCha8Rng, t: &mut Tally) -> Result<()> {
    let mut crps_margin = f64::INFINITY;
    let mut pairs = 0;
    while pairs < 10_000 {
        let q = random_distribution(rng, 32);
        let p = if rng.gen_bool(0.3) && q.len() > 1 {
            let eps = 10f64.powf(rng.gen_range(-4.0..-2.0));
            perturbed(rng, &q, eps)
        } else {
            random_distribution(rng, 32)
        };
        if p == q {
            continue;
        }
        pairs += 1;
        let truth = expected_score(&ScoringRule::Crps, &q, &q)?.value();
        let other = expected_score(&ScoringRule::Crps, &p, &q)?.value();
        crps_margin = crps_margin.min(other - truth);
        t.check(truth < other, || format!("crps: truth {truth} vs forecast {other}"));
    }

    let mut log_margin = f64::INFINITY;
    let mut pairs = 0;
    while pairs < 10_000 {
        let k = rng.gen_range(2..=16);
        let support: Vec<f64> = (0..k).map(|i| i as f64).collect();
        let pmf = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|v| v / total).collect()
        };
        let qm = pmf(rng);
        let pm: Vec<f64> = if rng.gen_bool(0.3) {
            let eps = 10f64.powf(rng.gen_range(-5.0..-3.0));
            let raw: Vec<f64> = qm.iter().map(|v| v * (1.0 + eps * rng.gen_range(-1.0..1.0))).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|v| v / total).collect()
        } else {
            pmf(rng)
        };
        let tv = 0.5 * qm.iter().zip(&pm).map(|(a, b)| (a - b).abs()).sum::<f64>();
        if tv < 1e-6 {
            continue;
        }
        pairs += 1;
        let q = DiscreteDistribution::new(support.iter().copied().zip(qm.iter().copied()))?;
        let p = DiscreteDistribution::new(support.iter().copied().zip(pm.iter().copied()))?;
        let truth = expected_score(&ScoringRule::LogScore, &q, &q)?.value();
        let other = expected_score(&ScoringRule::LogScore, &p, &q)?.value();
        log_margin = log_margin.min(other - truth);
        t.check(truth < other, || format!("log: tv {tv}, truth {truth} vs forecast {other}"));
    }
    t.note(format!(
        "smallest margins: crps {crps_margin:.3e}, log {log_margin:.3e}"
    ));
    Ok(())
}

/// Grid sizes 2^6, 2^8, ..., 2^18.
pub const CONVERGENCE_GRID: [usize; 7] = [1 << 6, 1 << 8, 1 << 10, 1 << 12, 1 << 14, 1 << 16, 1 << 18];

/// Errors `|crps_quantile_numeric(F, y, n) − crps(F, y)|` for one fixed case.
pub fn convergence_errors(seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_distribution(&mut rng, 64);
    let y = random_point(&mut rng, &f, 1.0);
    let exact = crps(&f, y, CrpsMethod::Energy)?.value();
    CONVERGENCE_GRID
        .iter()
        .map(|&n| Ok((crps_quantile_numeric(&f, y, n)?.value() - exact).abs()))
        .collect()
}

fn quantile_crps_convergence(seed: u64, t: &mut Tally) -> Result<()> {
    let mut non_monotone = 0;
    let mut worst_final: f64 = 0.0;
    for i in 0..10 {
        let errors = convergence_errors(seed.wrapping_add(i))?;
        let monotone = errors.windows(2).all(|w| w[1] < w[0]);
        let last = errors[errors.len() - 1];
        worst_final = worst_final.max(last);
        if !monotone {
            non_monotone += 1;
        }
        t.check(monotone, || {
            let shown: Vec<String> = errors.iter().map(|e| format!("{e:.2e}")).collect();
            format!("case {i} not monotone: [{}]", shown.join(", "))
        });
        t.check(last <= 1e-3, || format!("case {i}: error {last:.3e} at n = 2^18"));
    }
    t.note(format!(
        "{non_monotone}/10 cases non-monotone, worst error at 2^18 {worst_final:.3e}"
    ));
    Ok(())
}
