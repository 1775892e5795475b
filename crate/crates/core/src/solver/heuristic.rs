use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::node::Context;
use crate::model::{KnotGrid, TitlMarsModel, VarKind};

/// Box centre plus `random` uniform points, integer coordinates rounded.
pub(crate) fn starting_points(
    model: &TitlMarsModel,
    rng: &mut ChaCha8Rng,
    random: usize,
) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(random + 1);
    let round = |v: usize, x: f64| {
        if model.kinds()[v] == VarKind::Integer {
            x.round()
        } else {
            x
        }
    };
    pts.push(
        (0..model.dim())
            .map(|v| round(v, 0.5 * (model.lower()[v] + model.upper()[v])))
            .collect(),
    );
    for _ in 0..random {
        pts.push(
            (0..model.dim())
                .map(|v| round(v, rng.random_range(model.lower()[v]..=model.upper()[v])))
                .collect(),
        );
    }
    pts
}

/// Coordinate descent over knot-grid coordinates. The model is piecewise
/// linear along each axis, so the best move along one axis is always to a
/// breakpoint. Returns `(minimised objective, point, evaluations)`.
pub fn coordinate_search(ctx: &Context<'_>, start: &[f64]) -> (f64, Vec<f64>, u64) {
    let grid = KnotGrid::candidates(ctx.model);
    let mut x = start.to_vec();
    let mut f = ctx.objective(&x);
    let mut evals = 1u64;
    for _sweep in 0..100 {
        let mut improved = false;
        for v in 0..x.len() {
            let keep = x[v];
            let mut best = (f, keep);
            for &c in grid.var(v) {
                if c == keep {
                    continue;
                }
                x[v] = c;
                let g = ctx.objective(&x);
                evals += 1;
                if g < best.0 {
                    best = (g, c);
                }
            }
            x[v] = best.1;
            if best.0 < f {
                f = best.0;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    (f, x, evals)
}
