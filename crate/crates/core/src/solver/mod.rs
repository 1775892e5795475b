//! Certified global optimization of TITL-MARS models by branch-and-bound.
//!
//! Nodes are boxes of the variable space. Each node is bounded by an LP over
//! `(x, eta, y, w)`: hinges whose knot cuts the box keep their big-M rows
//! (with the big-M tightened to the box), hinges on one side of their knot are
//! substituted by their affine piece, and every two-way product `eta_1 eta_2`
//! is replaced by `w` under McCormick envelopes. Boxes that lie inside one knot
//! cell are closed exactly by vertex enumeration, since the model is
//! multilinear there.

mod heuristic;
mod node;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use heuristic::coordinate_search;
pub use node::{
    mccormick_envelope, BranchRule, Branching, Context, HingeState, Node, Relaxation, FEASIBILITY_TOL,
    INTEGRALITY_TOL,
};

use crate::error::{Error, Result};
use crate::model::TitlMarsModel;
use crate::solution::{relative_gap, Sense, Solution, SolveStats, SolveStatus};

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Relative gap `|value - bound| / max(1, |value|)` at which to stop.
    pub gap: f64,
    pub node_limit: u64,
    pub time_limit: Duration,
    pub branching: BranchRule,
    /// 0 keeps branching ties deterministic; any other value randomises them.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gap: 1e-6,
            node_limit: 10_000_000,
            time_limit: Duration::from_secs(600),
            branching: BranchRule::Priority,
            seed: 0,
        }
    }
}

struct Queued {
    node: Node,
    id: u64,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // max-heap: smallest bound first, then deepest, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .node
            .bound
            .total_cmp(&self.node.bound)
            .then(self.node.depth.cmp(&other.node.depth))
            .then(other.id.cmp(&self.id))
    }
}

struct Incumbent {
    value: f64,
    x: Vec<f64>,
}

impl Incumbent {
    fn offer(&mut self, value: f64, x: &[f64]) -> bool {
        if value < self.value {
            self.value = value;
            self.x = x.to_vec();
            true
        } else {
            false
        }
    }

    fn tolerance(&self, gap: f64) -> f64 {
        gap * self.value.abs().max(1.0)
    }
}

fn round_integers(model: &TitlMarsModel, x: &mut [f64]) {
    for (v, xv) in x.iter_mut().enumerate() {
        *xv = xv.clamp(model.lower()[v], model.upper()[v]);
        if model.kinds()[v] == crate::model::VarKind::Integer {
            *xv = xv.round();
        }
    }
}

/// Global optimum of `model` over its box, with a gap certificate.
pub fn solve(model: &TitlMarsModel, sense: Sense, cfg: &SolverConfig) -> Result<Solution> {
    if !(cfg.gap > 0.0) {
        return Err(Error::Input(format!("gap tolerance must be positive, got {}", cfg.gap)));
    }
    for v in 0..model.dim() {
        if model.lower()[v] > model.upper()[v] {
            return Err(Error::Input(format!("empty box on variable {v}")));
        }
    }
    let start = Instant::now();
    let ctx = Context::new(model, sense);
    let mut rng = (cfg.seed != 0).then(|| ChaCha8Rng::seed_from_u64(cfg.seed));
    let mut stats = SolveStats::default();

    let mut inc = Incumbent {
        value: f64::INFINITY,
        x: Vec::new(),
    };
    let mut heur_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for x in heuristic::starting_points(model, &mut heur_rng, 8) {
        let (f, xs, evals) = coordinate_search(&ctx, &x);
        stats.evaluations += evals;
        inc.offer(f, &xs);
    }

    let mut queue = BinaryHeap::new();
    let mut next_id = 0u64;
    queue.push(Queued {
        node: ctx.root(),
        id: next_id,
    });
    next_id += 1;
    // smallest bound among nodes discarded by the bound test
    let mut pruned_bound = f64::INFINITY;
    let mut limit_hit = false;

    while let Some(Queued { node, .. }) = queue.pop() {
        if node.bound >= inc.value - inc.tolerance(cfg.gap) {
            pruned_bound = pruned_bound.min(node.bound);
            continue;
        }
        if stats.nodes >= cfg.node_limit || start.elapsed() >= cfg.time_limit {
            queue.push(Queued { node, id: 0 });
            limit_hit = true;
            break;
        }
        stats.nodes += 1;

        if ctx.is_leaf(&node) {
            let (f, x) = ctx.finalize_leaf(&node);
            stats.evaluations += 1 << ctx.model.dim().min(25);
            inc.offer(f, &x);
            continue;
        }

        let Some(relax) = ctx.relax(&node) else {
            continue;
        };
        stats.lp_iterations += relax.iterations;
        let bound = relax.bound.max(node.bound);

        let mut x = relax.x.clone();
        round_integers(model, &mut x);
        let f = ctx.objective(&x);
        stats.evaluations += 1;
        if f < inc.value {
            let (f, xs, evals) = coordinate_search(&ctx, &x);
            stats.evaluations += evals;
            inc.offer(f, &xs);
        }

        if bound >= inc.value - inc.tolerance(cfg.gap) {
            pruned_bound = pruned_bound.min(bound);
            continue;
        }

        let Some((_, a, b)) = ctx.branch(&node, &relax, cfg.branching, rng.as_mut()) else {
            // nothing left to split although the node is not a leaf: only
            // possible through numerical trouble, so close it at its bound
            pruned_bound = pruned_bound.min(bound);
            continue;
        };
        for mut child in [a, b] {
            if child.lo.iter().zip(&child.hi).any(|(l, h)| l > h) {
                continue;
            }
            child.bound = bound;
            queue.push(Queued {
                node: child,
                id: next_id,
            });
            next_id += 1;
        }
    }

    let open_bound = queue
        .iter()
        .map(|q| q.node.bound)
        .fold(f64::INFINITY, f64::min);
    let best_bound = inc.value.min(pruned_bound).min(open_bound);
    stats.wall_time = start.elapsed();

    let s = sense.to_min();
    let value = model.eval(&inc.x);
    let bound = s * best_bound;
    let gap = relative_gap(value, bound);
    let status = if limit_hit && gap > cfg.gap {
        SolveStatus::Incomplete
    } else {
        SolveStatus::Optimal
    };
    Ok(Solution {
        sense,
        x: inc.x,
        value,
        bound,
        gap,
        status,
        stats,
    })
}
