use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn grid2(n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let g = grid(n, lo, hi);
    let mut rows = Vec::new();
    for &a in &g {
        for &b in &g {
            rows.push(vec![a, b]);
        }
    }
    rows
}

fn dataset(rows: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> Dataset {
    let y = rows.iter().map(|r| f(r)).collect();
    Dataset::from_rows(rows, y).unwrap()
}

fn all_knots_are_samples(model: &TitlMarsModel, data: &Dataset) -> bool {
    model.bases().iter().all(|b| {
        b.terms()
            .iter()
            .all(|t| data.column(t.var).contains(&t.knot))
    })
}

fn gcv_of(model: &TitlMarsModel, data: &Dataset, penalty: f64) -> f64 {
    let refs: Vec<&BasisFunction> = model.bases().iter().collect();
    gcv(lack_of_fit(model, data), data.len(), effective_params(&refs, penalty))
}

#[test]
fn gcv_examples() {
    assert_eq!(gcv(0.0, 10, 3.0), 0.0);
    assert_eq!(gcv(10.0, 10, 0.0), 1.0);
    assert_eq!(gcv(10.0, 10, 5.0), 4.0);
    assert_eq!(gcv(10.0, 10, 10.0), f64::INFINITY);
    assert_eq!(gcv(10.0, 10, 12.0), f64::INFINITY);
}

#[test]
fn constant_response_gives_intercept_only() {
    let rows: Vec<Vec<f64>> = grid(20, 0.0, 1.0).into_iter().map(|x| vec![x]).collect();
    let data = dataset(&rows, |_| 4.25);
    let model = fit(&data, &FitConfig::default()).unwrap();
    assert_eq!(model.num_bases(), 0);
    assert_eq!(model.intercept(), 4.25);
}

#[test]
fn too_few_samples() {
    let data = Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![0.0, 1.0]).unwrap();
    assert!(matches!(fit(&data, &FitConfig::default()), Err(Error::Fit(_))));
    let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], vec![0.0, 1.0, 0.0]).unwrap();
    let cfg = FitConfig {
        max_basis: 0,
        ..FitConfig::default()
    };
    assert!(matches!(fit(&data, &cfg), Err(Error::Config(_))));
}

#[test]
fn recovers_two_basis_model() {
    // knots on the sample grid so the true model is reachable
    let truth = TitlMarsModel::real(
        2.0,
        vec![3.0, -2.0],
        vec![
            BasisFunction::single(TruncatedTerm::new(Sign::Plus, 0, 0.4)),
            BasisFunction::pair(
                TruncatedTerm::new(Sign::Minus, 1, 0.6),
                TruncatedTerm::new(Sign::Plus, 0, 0.2),
            )
            .unwrap(),
        ],
        vec![0.0, 0.0],
        vec![1.0, 1.0],
    )
    .unwrap();
    let g = grid(11, 0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<Vec<f64>> = (0..500)
        .map(|_| vec![g[rng.random_range(0..11)], g[rng.random_range(0..11)]])
        .collect();
    let data = dataset(&rows, |x| truth.eval(x));
    let model = fit(&data, &FitConfig::default()).unwrap();
    let range = data.y().iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - data.y().iter().copied().fold(f64::INFINITY, f64::min);
    let rmse = (lack_of_fit(&model, &data) / data.len() as f64).sqrt();
    assert!(rmse < 1e-6 * range, "rmse {rmse}, range {range}");
    assert!(all_knots_are_samples(&model, &data));
}

#[test]
fn fits_smooth_surface() {
    let rows = grid2(41, -20.0, 20.0);
    let data = dataset(&rows, |x| {
        (std::f64::consts::PI * x[0] / 12.0).sin() * (std::f64::consts::PI * x[1] / 16.0).cos()
    });
    let model = fit(&data, &FitConfig::default()).unwrap();
    let r2 = r_squared(&model, &data);
    assert!(r2 >= 0.95, "R^2 = {r2}");
    assert!(model.bases().iter().all(|b| b.order() <= MAX_INTERACTION));
}

#[test]
fn step_knot_near_half() {
    let xs = grid(101, 0.0, 1.0);
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let data = dataset(&rows, |x| (x[0] - 0.5).max(0.0));
    let fw = forward_pass(&data, &FitConfig::default()).unwrap();
    let first = fw.model.bases()[0].terms()[0];
    assert!((first.knot - 0.5).abs() <= 0.01 + 1e-12, "knot {}", first.knot);
}

#[test]
fn product_data_gives_interaction() {
    let rows = grid2(21, -1.0, 1.0);
    let data = dataset(&rows, |x| x[0].max(0.0) * x[1].max(0.0));
    let model = fit(&data, &FitConfig::default()).unwrap();
    let pair = model.bases().iter().any(|b| {
        b.order() == 2 && b.uses_var(0) && b.uses_var(1)
    });
    assert!(pair, "{}", crate::model::serialize_model(&model));
    assert!(r_squared(&model, &data) > 1.0 - 1e-9);
}

#[test]
fn junk_basis_is_pruned() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| 1.0 + 4.0 * (r[0] - 0.3).max(0.0) + rng.random_range(-0.01..0.01))
        .collect();
    let data = Dataset::from_rows(&rows, y).unwrap();
    let k0 = data.column(0)[0];
    let k1 = data.column(1)[7];
    let junk = BasisFunction::single(TruncatedTerm::new(Sign::Plus, 1, k1));
    let real = BasisFunction::single(TruncatedTerm::new(Sign::Plus, 0, k0));
    let candidate = TitlMarsModel::real(
        0.0,
        vec![1.0, 1.0],
        vec![real.clone(), junk.clone()],
        data.lower().to_vec(),
        data.upper().to_vec(),
    )
    .unwrap();
    let pruned = backward_pass(&candidate, &data, &FitConfig::default()).unwrap();
    assert!(!pruned.bases().contains(&junk));
    assert!(pruned.bases().contains(&real));
}

#[test]
fn backward_does_not_raise_gcv() {
    let rows = grid2(15, 0.0, 3.0);
    let data = dataset(&rows, |x| (x[0] * x[1]).sin() + 0.3 * x[0]);
    let cfg = FitConfig::default();
    let fw = forward_pass(&data, &cfg).unwrap();
    let bw = backward_pass(&fw.model, &data, &cfg).unwrap();
    let before = gcv_of(&fw.model, &data, cfg.penalty);
    let after = gcv_of(&bw, &data, cfg.penalty);
    assert!(after <= before * (1.0 + 1e-9) + 1e-15, "{after} > {before}");
    assert!(lack_of_fit(&bw, &data) <= crate::fit::total_sum_of_squares(data.y()) * (1.0 + 1e-12));
}

#[test]
fn forward_trace_is_monotone() {
    let rows = grid2(12, -2.0, 2.0);
    let data = dataset(&rows, |x| (x[0] * x[0] - x[1]).exp().min(20.0));
    let fw = forward_pass(&data, &FitConfig::default()).unwrap();
    for w in fw.ssr_trace.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{w:?}");
    }
    assert!(fw.model.num_bases() <= 40);
}

#[test]
fn max_basis_is_respected() {
    let rows = grid2(10, 0.0, 1.0);
    let data = dataset(&rows, |x| (5.0 * x[0]).sin() * x[1]);
    for m in [1, 2, 3, 7] {
        let cfg = FitConfig {
            max_basis: m,
            ..FitConfig::default()
        };
        let fw = forward_pass(&data, &cfg).unwrap();
        assert!(fw.model.num_bases() <= m);
        assert!(fw.model.num_bases() >= 1);
    }
}

#[test]
fn fitting_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let data = dataset(&rows, |x| x[0] * x[1] - x[2].abs());
    let a = fit(&data, &FitConfig::default()).unwrap();
    let b = fit(&data, &FitConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn quantile_candidates_are_capped() {
    let xs = grid(1000, 0.0, 1.0);
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let data = dataset(&rows, |x| x[0] * x[0]);
    let s = Scaled::new(&data, KnotCandidates::Quantiles(100));
    assert_eq!(s.knots[0].len(), 100);
    assert_eq!(s.knots[0][0], 0.0);
    assert_eq!(*s.knots[0].last().unwrap(), 1.0);
    let s = Scaled::new(&data, KnotCandidates::All);
    assert_eq!(s.knots[0].len(), 1000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fitted_models_are_valid(seed in 0u64..1000, n in 5usize..60, dim in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = Dataset::from_rows(&rows, y).unwrap();
        let model = fit(&data, &FitConfig { max_basis: 8, ..FitConfig::default() }).unwrap();
        prop_assert!(all_knots_are_samples(&model, &data));
        for b in model.bases() {
            prop_assert!(b.order() <= 2);
            if b.order() == 2 {
                prop_assert_ne!(b.terms()[0].var, b.terms()[1].var);
            }
        }
        let sst = total_sum_of_squares(data.y());
        prop_assert!(lack_of_fit(&model, &data) <= sst * (1.0 + 1e-9) + 1e-12);
    }
}
