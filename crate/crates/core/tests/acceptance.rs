//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the binary exits non-zero if any fails.

use std::io::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use titl_mars::bench::{run_benchmark, sample_function, BenchJob, BenchSpec, Format, TestFunction};
use titl_mars::lp::{solve_lp, LpStatus, SimplexOptions};
use titl_mars::model::{random_model, RandomModelSpec};
use titl_mars::windfarm::{
    combined_speed, monte_carlo_power_grid, shading_groups, turbine_power, wake_speed, FarmConfig,
    WindScenario,
};
use titl_mars::{
    build_miqp, fit, oracle_optimum, solve, BasisFunction, Dataset, FitConfig, OracleConfig, Sense,
    Sign, SolveStatus, SolverConfig, TitlMarsModel, TruncatedTerm,
};

type Outcome = Result<String, String>;

fn random_spec(rng: &mut ChaCha8Rng) -> RandomModelSpec {
    RandomModelSpec {
        dim: rng.random_range(2..=4),
        bases: rng.random_range(1..=20),
        coeff: 10.0,
        ..RandomModelSpec::default()
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let spec = random_spec(&mut rng);
        let model = random_model(&mut rng, &spec);
        for sense in [Sense::Max, Sense::Min] {
            let sol = solve(&model, sense, &SolverConfig::default()).map_err(|e| e.to_string())?;
            let ora = oracle_optimum(&model, sense, &OracleConfig::default()).map_err(|e| e.to_string())?;
            if sol.status != SolveStatus::Optimal {
                return Err(format!("model {i} {sense}: status {:?}", sol.status));
            }
            let err = (sol.value - ora.value).abs() / ora.value.abs().max(1.0);
            worst = worst.max(err);
            if !rel_close(sol.value, ora.value, 1e-6) {
                return Err(format!("model {i} {sense}: solver {} oracle {}", sol.value, ora.value));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 120.0 {
        return Err(format!("took {secs:.1} s"));
    }
    Ok(format!("200 solves, worst rel err {worst:.2e}, {secs:.1} s"))
}

fn embedding_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..1000 {
        let spec = random_spec(&mut rng);
        let model = random_model(&mut rng, &spec);
        let x: Vec<f64> = (0..model.dim())
            .map(|v| rng.random_range(model.lower()[v]..=model.upper()[v]))
            .collect();
        let sense = if i % 2 == 0 { Sense::Max } else { Sense::Min };
        let p = build_miqp(&model, sense);
        let z = p.embed(&x);
        // direct evaluation from the basis definitions
        let mut want = model.intercept();
        for (a, b) in model.terms() {
            want += a * b
                .terms()
                .iter()
                .map(|t| (t.sign.value() * (x[t.var] - t.knot)).max(0.0))
                .product::<f64>();
        }
        if !rel_close(p.model_value_at(&z), want, 1e-9) {
            return Err(format!("pair {i}: miqp {} model {want}", p.model_value_at(&z)));
        }
        let scale = z.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if p.max_violation(&z) > 1e-9 * scale {
            return Err(format!("pair {i}: violation {}", p.max_violation(&z)));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 10.0 {
        return Err(format!("took {secs:.1} s"));
    }
    Ok(format!("1000 pairs, {secs:.2} s"))
}

fn benchmark_spec() -> BenchSpec {
    let mut jobs: Vec<BenchJob> = TestFunction::ALL.iter().map(|&f| BenchJob::function(f)).collect();
    jobs.extend(["fw1", "fw2", "fw3", "fw4"].map(BenchJob::scenario));
    BenchSpec {
        jobs,
        ..BenchSpec::default()
    }
}

/// Certified dominance and desk-scale performance share one full benchmark run.
fn dominance_and_performance() -> (Outcome, Outcome) {
    let spec = benchmark_spec();
    let (report, outcomes) = match run_benchmark(&spec) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };

    let mut violations = 0;
    let mut runs = 0;
    for out in &outcomes {
        for (_, sense, values) in &out.ga.values {
            let opt = out.opt.iter().find(|s| s.sense == *sense).expect("opt per sense");
            for &v in values {
                runs += 1;
                let beaten = match sense {
                    Sense::Max => v > opt.value,
                    Sense::Min => v < opt.value,
                };
                if beaten && !rel_close(v, opt.value, 1e-9) {
                    violations += 1;
                }
            }
        }
    }
    let dominance = if outcomes.len() != spec.jobs.len() {
        Err(format!("only {} of {} jobs produced models", outcomes.len(), spec.jobs.len()))
    } else if violations > 0 {
        Err(format!("{violations} of {runs} GA runs beat the certified optimum"))
    } else {
        Ok(format!("{runs} GA runs over {} models, 0 violations", outcomes.len()))
    };

    let mut failures = Vec::new();
    let mut slowest: f64 = 0.0;
    for row in report.rows.iter().filter(|r| r.method == "opt") {
        let secs = row.time_mean_s.unwrap_or(f64::INFINITY);
        slowest = slowest.max(secs);
        if row.incomplete || row.gap.is_none_or(|g| g > 1e-6) || secs > 60.0 {
            failures.push(format!("{} {}", row.function, row.sense));
        }
    }
    for out in &outcomes {
        let m = &out.model.model;
        if m.dim() > 10 || m.num_bases() > 40 {
            failures.push(format!("{} has V={} M={}", out.model.name, m.dim(), m.num_bases()));
        }
    }
    let performance = if failures.is_empty() {
        Ok(format!("{} solves closed, slowest {slowest:.3} s", 2 * outcomes.len()))
    } else {
        Err(format!("incomplete: {}", failures.join(", ")))
    };
    (dominance, performance)
}

fn big_m_probe() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let opts = SimplexOptions::default();
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let spec = random_spec(&mut rng);
        let model = random_model(&mut rng, &spec);
        let p = build_miqp(&model, Sense::Max);
        for _ in 0..500 {
            let x: Vec<f64> = (0..model.dim())
                .map(|v| rng.random_range(model.lower()[v]..=model.upper()[v]))
                .collect();
            let z = p.embed(&x);
            let mut lower = p.lower.clone();
            let mut upper = p.upper.clone();
            for (v, &slot) in p.index.x.iter().enumerate() {
                lower[slot] = x[v];
                upper[slot] = x[v];
            }
            for h in &p.index.hinges {
                lower[h.y] = z[h.y];
                upper[h.y] = z[h.y];
            }
            // minimising and maximising the sum of eta bounds every eta from both sides
            for dir in [1.0, -1.0] {
                let mut obj = vec![0.0; p.dim];
                for h in &p.index.hinges {
                    obj[h.eta] = dir;
                }
                let mut lp = p.linear_relaxation(obj);
                lp.lower = lower.clone();
                lp.upper = upper.clone();
                let sol = solve_lp(&lp, &opts);
                if sol.status != LpStatus::Optimal {
                    return Err(format!("model {i}: LP status {:?}", sol.status));
                }
                for h in &p.index.hinges {
                    let want = (h.sign.value() * (x[h.var] - h.knot)).max(0.0);
                    let err = (sol.x[h.eta] - want).abs();
                    worst = worst.max(err);
                    if err > 1e-7 {
                        return Err(format!("model {i}: eta {} want {want}", sol.x[h.eta]));
                    }
                }
            }
        }
    }
    Ok(format!("100000 points, worst err {worst:.2e}"))
}

fn wake_pins() -> Outcome {
    let mut bad = Vec::new();
    for v0 in [3.0, 8.0, 12.0, 17.5] {
        let w = wake_speed(v0, 40.0, 40.0).map_err(|e| e.to_string())?;
        if w != v0 / 3.0 {
            bad.push(format!("wake_speed({v0}, R, R) = {w}"));
        }
        if combined_speed(v0, &[]) != v0 {
            bad.push(format!("combined_speed({v0}, []) = {}", combined_speed(v0, &[])));
        }
    }
    if turbine_power(15.0) != 629.1 {
        bad.push(format!("P(15) = {}", turbine_power(15.0)));
    }
    let left = turbine_power(12.8f64.next_down());
    if (left - 629.1456).abs() > 1e-9 {
        bad.push(format!("P(12.8-) = {left}"));
    }
    if turbine_power(12.8) != 629.1 {
        bad.push(format!("P(12.8) = {}", turbine_power(12.8)));
    }
    if bad.is_empty() {
        Ok(format!("P(12.8-) = {left:.6}"))
    } else {
        Err(bad.join("; "))
    }
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn directional_shading() -> Outcome {
    let start = Instant::now();
    let farm = FarmConfig::default();
    let scenario = WindScenario::builtin("fw1").map_err(|e| e.to_string())?;
    let grid = monte_carlo_power_grid(&farm, &scenario, 1000, 0).map_err(|e| e.to_string())?;
    let direction = scenario.cases()[0].direction;
    let (up, down) = shading_groups(&grid, direction, 5);
    let ((m1, v1), (m2, v2)) = (mean_var(&up), mean_var(&down));
    let (n1, n2) = (up.len() as f64, down.len() as f64);
    let se2 = v1 / n1 + v2 / n2;
    let t = (m1 - m2) / se2.sqrt();
    let df = se2 * se2 / ((v1 / n1).powi(2) / (n1 - 1.0) + (v2 / n2).powi(2) / (n2 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| e.to_string())?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    let secs = start.elapsed().as_secs_f64();
    let msg = format!(
        "upwind {m1:.3} (n {n1}) vs downwind {m2:.3} (n {n2}), Welch t {t:.3}, p {p:.4}, {secs:.1} s"
    );
    if m1 > m2 && p < 0.01 && secs < 60.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fitter_recovery() -> Outcome {
    let hinge = |s, v, t| TruncatedTerm::new(s, v, t);
    let truth = TitlMarsModel::real(
        1.0,
        vec![2.0, -1.5],
        vec![
            BasisFunction::single(hinge(Sign::Plus, 0, 0.3)),
            BasisFunction::pair(hinge(Sign::Minus, 1, 0.6), hinge(Sign::Plus, 0, 0.2)).map_err(|e| e.to_string())?,
        ],
        vec![0.0, 0.0],
        vec![1.0, 1.0],
    )
    .map_err(|e| e.to_string())?;
    let rows: Vec<Vec<f64>> = (0..=20)
        .flat_map(|i| (0..=20).map(move |j| vec![i as f64 / 20.0, j as f64 / 20.0]))
        .collect();
    let y: Vec<f64> = rows.iter().map(|x| truth.eval(x)).collect();
    let data = Dataset::from_rows(&rows, y.clone()).map_err(|e| e.to_string())?;
    let model = fit(&data, &FitConfig::default()).map_err(|e| e.to_string())?;
    let rmse = (rows.iter().zip(&y).map(|(x, t)| (model.eval(x) - t).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let range = y.iter().copied().fold(f64::NEG_INFINITY, f64::max) - y.iter().copied().fold(f64::INFINITY, f64::min);

    let f2 = sample_function(TestFunction::F2, Some(41), 0, 0).map_err(|e| e.to_string())?;
    let f2_model = fit(&f2, &FitConfig::default()).map_err(|e| e.to_string())?;
    let ys = f2.y();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sst: f64 = ys.iter().map(|v| (v - mean).powi(2)).sum();
    let ssr: f64 = (0..f2.len()).map(|i| (f2_model.eval(&f2.row(i)) - ys[i]).powi(2)).sum();
    let r2 = 1.0 - ssr / sst;

    let msg = format!("RMSE/range {:.2e}, f2 R^2 {r2:.4} with M={}", rmse / range, f2_model.num_bases());
    if rmse < 1e-6 * range && r2 >= 0.95 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Outcome {
    let spec = BenchSpec {
        jobs: vec![
            BenchJob::function(TestFunction::F1),
            BenchJob::function(TestFunction::F3),
            BenchJob {
                layouts: 200,
                ..BenchJob::scenario("fw2")
            },
        ],
        repetitions: 5,
        deterministic: true,
        threads: Some(1),
        ..BenchSpec::default()
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let (report, outcomes) = run_benchmark(&spec).map_err(|e| e.to_string())?;
        let out = dir.path().join(format!("run{run}"));
        titl_mars::bench::write_outputs(&report, &outcomes, &spec, &out, Format::Csv).map_err(|e| e.to_string())?;
        outputs.push(std::fs::read(out.join("report.csv")).map_err(|e| e.to_string())?);
    }
    if outputs[0] == outputs[1] {
        Ok(format!("{} identical bytes", outputs[0].len()))
    } else {
        Err("report.csv differs between runs".into())
    }
}

fn main() {
    let mut stdout = std::io::stdout();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome, took: Duration| {
        let (tag, msg) = match outcome {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        let _ = writeln!(stdout, "{tag} criterion {n} {name}: {msg} [{:.1} s]", took.as_secs_f64());
    };

    let t = Instant::now();
    report(1, "oracle equivalence", oracle_equivalence(), t.elapsed());
    let t = Instant::now();
    report(2, "embedding equivalence", embedding_equivalence(), t.elapsed());
    let t = Instant::now();
    let (dominance, performance) = dominance_and_performance();
    let bench_time = t.elapsed();
    report(3, "certified dominance over GA", dominance, bench_time);
    let t = Instant::now();
    report(4, "big-M exactness", big_m_probe(), t.elapsed());
    let t = Instant::now();
    report(5, "wake model pins", wake_pins(), t.elapsed());
    let t = Instant::now();
    report(6, "directional shading", directional_shading(), t.elapsed());
    let t = Instant::now();
    report(7, "fitter recovery", fitter_recovery(), t.elapsed());
    let t = Instant::now();
    report(8, "bench determinism", determinism(), t.elapsed());
    report(9, "desk-scale performance", performance, bench_time);

    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
