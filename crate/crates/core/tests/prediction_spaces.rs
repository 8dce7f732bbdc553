use std::collections::BTreeMap;

use idealcast::functionals::quantile_lower;
use idealcast::prediction_space::{
    conditional_kernel, expected_probabilistic_score, ideal_point_forecast, is_measurable,
    FinitePredictionSpace, Functional, MarkovKernel, Outcome,
};
use idealcast::scoring::ScoringRule;
use idealcast::DiscreteDistribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_space(rng: &mut ChaCha8Rng) -> (FinitePredictionSpace, usize) {
    let n = rng.gen_range(2..=20);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let outcomes = raw
        .iter()
        .enumerate()
        .map(|(i, p)| Outcome {
            label: format!("w{i}"),
            probability: p / total,
            y: f64::from(rng.gen_range(-6i32..=6)) / 2.0,
        })
        .collect();
    let cells = rng.gen_range(1..=n);
    let ids: Vec<String> = (0..n).map(|_| format!("c{}", rng.gen_range(0..cells))).collect();
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let space = FinitePredictionSpace::new(outcomes, BTreeMap::new())
        .unwrap()
        .with_partition("G", &refs)
        .unwrap();
    (space, n)
}

/// P(F ∩ {Y ∈ B}) = Σ_{ω ∈ F} κ(ω; B) P(ω) for every cell union F and every
/// set B of support points.
#[test]
fn conditional_kernel_satisfies_the_defining_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let (space, _) = random_space(&mut rng);
        let kernel = conditional_kernel(&space, "G").unwrap();
        let cells = space.cells("G").unwrap().to_vec();
        let assignment = space.assignment("G").unwrap().to_vec();
        let support = space.law().unwrap().values().to_vec();
        assert!(cells.len() <= 12 && support.len() <= 13);
        for cell_mask in 1u32..(1 << cells.len()) {
            let in_union = |i: usize| cell_mask & (1 << assignment[i]) != 0;
            for _ in 0..8 {
                let set_mask: u32 = rng.gen_range(1..(1u32 << support.len()));
                let in_set = |y: f64| {
                    let k = support.iter().position(|&s| s == y).unwrap();
                    set_mask & (1 << k) != 0
                };
                let mut direct = 0.0;
                let mut via_kernel = 0.0;
                for (i, o) in space.outcomes().iter().enumerate() {
                    if !in_union(i) {
                        continue;
                    }
                    if in_set(o.y) {
                        direct += o.probability;
                    }
                    let law = kernel.law_at(i);
                    let mass: f64 = law.atoms().filter(|&(y, _)| in_set(y)).map(|a| a.1).sum();
                    via_kernel += mass * o.probability;
                }
                assert!((direct - via_kernel).abs() <= 1e-12, "{direct} vs {via_kernel}");
            }
        }
    }
}

#[test]
fn ideal_forecasts_are_measurable() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (space, _) = random_space(&mut rng);
        let alpha = rng.gen_range(0.01..0.99);
        for t in [
            Functional::Mean,
            Functional::QuantileLower(alpha),
            Functional::Expectile(alpha),
            Functional::EsUpper(alpha),
        ] {
            let f = ideal_point_forecast(&space, "G", &t).unwrap();
            assert!(is_measurable(&f, &space, "G").unwrap());
        }
    }
}

fn random_law(rng: &mut ChaCha8Rng) -> DiscreteDistribution {
    let n = rng.gen_range(1..=6);
    let raw: Vec<(f64, f64)> = (0..n)
        .map(|_| (f64::from(rng.gen_range(-6i32..=6)) / 2.0, rng.gen_range(0.05..1.0)))
        .collect();
    let total: f64 = raw.iter().map(|a| a.1).sum();
    DiscreteDistribution::new(raw.into_iter().map(|(x, p)| (x, p / total))).unwrap()
}

#[test]
fn ideal_kernel_dominates_competing_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1_000 {
        let (space, _) = random_space(&mut rng);
        let ideal = conditional_kernel(&space, "G").unwrap();
        let best = expected_probabilistic_score(&space, &ideal, &ScoringRule::Crps)
            .unwrap()
            .value();
        let competitor = MarkovKernel::new(
            &space,
            "G",
            space
                .cells("G")
                .unwrap()
                .iter()
                .map(|c| (c.clone(), random_law(&mut rng)))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let other = expected_probabilistic_score(&space, &competitor, &ScoringRule::Crps)
            .unwrap()
            .value();
        assert!(best <= other + 1e-15, "ideal {best} vs competitor {other}");
    }
}

#[test]
fn quantile_forecast_matches_cellwise_quantile() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (space, _) = random_space(&mut rng);
    let kernel = conditional_kernel(&space, "G").unwrap();
    let f = ideal_point_forecast(&space, "G", &Functional::QuantileLower(0.3)).unwrap();
    for (i, v) in f.values().iter().enumerate() {
        assert_eq!(*v, quantile_lower(kernel.law_at(i), 0.3).unwrap());
    }
}
