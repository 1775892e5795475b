//! Exhaustive search over knot-grid vertices.
//!
//! Inside a knot cell the model is affine in each coordinate when the others
//! are held fixed, so box extrema sit on cell vertices. Enumerating the
//! Cartesian product of per-variable breakpoints therefore gives the exact
//! optimum whenever that product is small enough to walk.

use std::time::Instant;

use rayon::prelude::*;

use super::{KnotGrid, TitlMarsModel};
use crate::error::{Error, Result};
use crate::solution::{Sense, Solution, SolveStats, SolveStatus};

pub const DEFAULT_VERTEX_CAP: u64 = 2_000_000;

#[derive(Clone, Copy, Debug)]
pub struct OracleConfig {
    pub vertex_cap: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }
}

const CHUNK: u64 = 1 << 14;

/// Global optimum of `model` over its box by vertex enumeration.
pub fn oracle_optimum(model: &TitlMarsModel, sense: Sense, cfg: &OracleConfig) -> Result<Solution> {
    let start = Instant::now();
    let grid = KnotGrid::candidates(model);
    let count = grid.vertex_count();
    if count > cfg.vertex_cap as u128 {
        return Err(Error::Capacity(format!(
            "oracle needs {count} vertices, cap is {}",
            cfg.vertex_cap
        )));
    }
    let count = count as u64;
    let dim = model.dim();
    let radix: Vec<usize> = (0..dim).map(|v| grid.var(v).len()).collect();

    // hinge tables: table[h][i] = value of hinge h at breakpoint i of its variable
    let mut tables: Vec<Vec<f64>> = Vec::new();
    let mut basis_hinges: Vec<(f64, Vec<(usize, usize)>)> = Vec::new();
    for (a, basis) in model.terms() {
        let mut hs = Vec::new();
        for t in basis.terms() {
            tables.push(grid.var(t.var).iter().map(|&x| t.eval_at(x)).collect());
            hs.push((tables.len() - 1, t.var));
        }
        basis_hinges.push((a, hs));
    }

    let eval_idx = |idx: &[usize]| -> f64 {
        let mut f = model.intercept();
        for (a, hs) in &basis_hinges {
            let mut p = *a;
            for &(h, v) in hs {
                p *= tables[h][idx[v]];
            }
            f += p;
        }
        f
    };

    let key = sense.to_min();
    let chunks = count.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(count);
            let mut idx = vec![0usize; dim];
            let mut rem = lo;
            for v in 0..dim {
                idx[v] = (rem % radix[v] as u64) as usize;
                rem /= radix[v] as u64;
            }
            let mut best = (f64::INFINITY, u64::MAX);
            for lin in lo..hi {
                let f = key * eval_idx(&idx);
                if f < best.0 {
                    best = (f, lin);
                }
                for v in 0..dim {
                    idx[v] += 1;
                    if idx[v] < radix[v] {
                        break;
                    }
                    idx[v] = 0;
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );

    let mut rem = best.1;
    let mut x = vec![0.0; dim];
    for v in 0..dim {
        x[v] = grid.var(v)[(rem % radix[v] as u64) as usize];
        rem /= radix[v] as u64;
    }
    let value = model.eval(&x);
    Ok(Solution {
        sense,
        x,
        value,
        bound: value,
        gap: 0.0,
        status: SolveStatus::Optimal,
        stats: SolveStats {
            nodes: 0,
            lp_iterations: 0,
            evaluations: count,
            wall_time: start.elapsed(),
        },
    })
}
