use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use titl_mars::model::{random_model, RandomModelSpec};
use titl_mars::{fit, parse_model, serialize_model, solve, Dataset, FitConfig, GaPreset, Sense, SolverConfig};

fn model(seed: u64, dim: usize, bases: usize) -> titl_mars::TitlMarsModel {
    let spec = RandomModelSpec {
        dim,
        bases,
        integer_prob: 0.25,
        ..RandomModelSpec::default()
    };
    random_model(&mut ChaCha8Rng::seed_from_u64(seed), &spec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn certified_range_brackets_every_point(
        seed in any::<u64>(),
        dim in 1usize..=4,
        bases in 1usize..=12,
        unit in prop::collection::vec(0.0f64..=1.0, 4),
    ) {
        let m = model(seed, dim, bases);
        let cfg = SolverConfig::default();
        let max = solve(&m, Sense::Max, &cfg).unwrap();
        let min = solve(&m, Sense::Min, &cfg).unwrap();
        let x: Vec<f64> = (0..dim)
            .map(|v| {
                let p = m.lower()[v] + unit[v] * (m.upper()[v] - m.lower()[v]);
                if m.kinds()[v] == titl_mars::VarKind::Integer { p.round() } else { p }
            })
            .collect();
        let f = m.eval(&x);
        let tol = 1e-9 * f.abs().max(1.0);
        prop_assert!(f <= max.bound + tol && f >= min.bound - tol);
        prop_assert!(m.contains(&max.x) && m.contains(&min.x));
        prop_assert!((m.eval(&max.x) - max.value).abs() <= tol.max(1e-9 * max.value.abs()));
    }

    #[test]
    fn document_round_trip_is_exact(seed in any::<u64>(), dim in 1usize..=5, bases in 0usize..=15) {
        let m = model(seed, dim, bases);
        let text = serialize_model(&m);
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(serialize_model(&back), text);
    }

    #[test]
    fn ga_never_beats_the_certificate(seed in any::<u64>(), dim in 1usize..=3, bases in 1usize..=8) {
        let m = model(seed, dim, bases);
        let mut params = GaPreset::Grefenstette.params(seed);
        params.generations = 40;
        let cfg = SolverConfig::default();
        for sense in [Sense::Max, Sense::Min] {
            let opt = solve(&m, sense, &cfg).unwrap();
            let ga = titl_mars::ga::optimize(&m, sense, &params).unwrap();
            let tol = 1e-9 * opt.bound.abs().max(1.0);
            prop_assert!(!sense.better(ga.value, opt.bound - sense.to_min() * tol));
        }
    }
}

#[test]
fn fitted_surrogate_optimum_matches_its_samples() {
    // y = 1 + |x - 0.4| sampled on a grid; the surrogate minimum sits at the kink
    let rows: Vec<Vec<f64>> = (0..=50).map(|i| vec![i as f64 / 50.0]).collect();
    let y: Vec<f64> = rows.iter().map(|x| 1.0 + (x[0] - 0.4).abs()).collect();
    let data = Dataset::from_rows(&rows, y).unwrap();
    let m = fit(&data, &FitConfig::default()).unwrap();
    let min = solve(&m, Sense::Min, &SolverConfig::default()).unwrap();
    assert!((min.value - 1.0).abs() < 1e-9, "{}", min.value);
    assert!((min.x[0] - 0.4).abs() < 1e-9, "{:?}", min.x);
    let max = solve(&m, Sense::Max, &SolverConfig::default()).unwrap();
    assert!((max.value - 1.6).abs() < 1e-9, "{}", max.value);
}
