//! Node relaxation, branching and leaf evaluation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, SimplexOptions};
use crate::miqp::{build_miqp, MiqpProblem};
use crate::model::{TitlMarsModel, VarKind};
use crate::solution::Sense;

pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// A box of the search tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Per-hinge indicator fixed by branching (`None` while free).
    pub y_fixed: Vec<Option<bool>>,
    /// Lower bound on the minimised objective inherited from the parent
    /// until the node's own relaxation is solved.
    pub bound: f64,
    pub depth: u32,
}

/// Where a hinge sits relative to its knot over a node box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HingeState {
    /// `eta = s (x - t)` on the whole box
    Active,
    /// `eta = 0` on the whole box
    Inactive,
    /// the knot cuts the box
    Straddle,
}

/// LP relaxation result for one node.
#[derive(Clone, Debug)]
pub struct Relaxation {
    /// Lower bound on the minimised objective over the node.
    pub bound: f64,
    /// Relaxed point in MIQP slot layout `(1, x, eta, y, ...)`.
    pub z: Vec<f64>,
    /// Relaxed model coordinates.
    pub x: Vec<f64>,
    /// Per-hinge `|eta - max(s (x - t), 0)|`.
    pub hinge_violation: Vec<f64>,
    /// Per-basis `|a_m| * |w - eta_1 eta_2|` for two-way bases (0 otherwise).
    pub product_violation: Vec<f64>,
    pub iterations: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchRule {
    /// Fractional indicators, then fractional integers, then knot splits.
    Priority,
    /// Knot splits only.
    Spatial,
}

impl std::str::FromStr for BranchRule {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "priority" => Ok(BranchRule::Priority),
            "spatial" => Ok(BranchRule::Spatial),
            other => Err(crate::Error::Input(format!("unknown branching rule `{other}`"))),
        }
    }
}

/// McCormick envelope of `w = e1 * e2` over `[l1, u1] x [l2, u2]` at `(e1, e2)`:
/// the largest under-estimator and smallest over-estimator.
pub fn mccormick_envelope(e1: f64, e2: f64, l1: f64, u1: f64, l2: f64, u2: f64) -> (f64, f64) {
    let lower = (l2 * e1 + l1 * e2 - l1 * l2).max(u2 * e1 + u1 * e2 - u1 * u2);
    let upper = (u2 * e1 + l1 * e2 - l1 * u2).min(l2 * e1 + u1 * e2 - u1 * l2);
    (lower, upper)
}

/// What `branch` decided.
#[derive(Clone, Debug, PartialEq)]
pub enum Branching {
    Indicator { hinge: usize },
    Integer { var: usize, at: f64 },
    Knot { var: usize, at: f64 },
    Bisect { var: usize, at: f64 },
}

/// Minimisation view of a model shared by all nodes.
pub struct Context<'a> {
    pub model: &'a TitlMarsModel,
    pub sense: Sense,
    pub miqp: MiqpProblem,
    /// `sense.to_min() * a_m`
    coeff: Vec<f64>,
    intercept: f64,
    /// hinge indices per basis
    basis_hinges: Vec<Vec<usize>>,
    pub leaf_vertex_log2_cap: u32,
    simplex: SimplexOptions,
}

#[derive(Clone, Copy, Debug)]
struct Factor {
    /// (LP column, coefficient); `None` for a constant factor
    lin: Option<(usize, f64)>,
    constant: f64,
    lo: f64,
    hi: f64,
}

impl Factor {
    fn value(&self, sol: &[f64]) -> f64 {
        self.constant + self.lin.map_or(0.0, |(j, a)| a * sol[j])
    }
}

impl<'a> Context<'a> {
    pub fn new(model: &'a TitlMarsModel, sense: Sense) -> Self {
        let miqp = build_miqp(model, sense);
        let mut basis_hinges = vec![Vec::new(); model.num_bases()];
        for (i, h) in miqp.index.hinges.iter().enumerate() {
            basis_hinges[h.basis].push(i);
        }
        let s = sense.to_min();
        Context {
            model,
            sense,
            coeff: model.coeffs().iter().map(|a| s * a).collect(),
            intercept: s * model.intercept(),
            miqp,
            basis_hinges,
            leaf_vertex_log2_cap: 25,
            simplex: SimplexOptions {
                feasibility_tol: FEASIBILITY_TOL,
                ..SimplexOptions::default()
            },
        }
    }

    pub fn num_hinges(&self) -> usize {
        self.miqp.index.hinges.len()
    }

    /// Minimised objective at a model point.
    #[inline]
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.sense.to_min() * self.model.eval(x)
    }

    pub fn root(&self) -> Node {
        Node {
            lo: self.model.lower().to_vec(),
            hi: self.model.upper().to_vec(),
            y_fixed: vec![None; self.num_hinges()],
            bound: f64::NEG_INFINITY,
            depth: 0,
        }
    }

    pub fn hinge_state(&self, node: &Node, h: usize) -> HingeState {
        match node.y_fixed[h] {
            Some(true) => return HingeState::Active,
            Some(false) => return HingeState::Inactive,
            None => {}
        }
        let hs = &self.miqp.index.hinges[h];
        let s = hs.sign.value();
        let a = s * (node.lo[hs.var] - hs.knot);
        let b = s * (node.hi[hs.var] - hs.knot);
        let (umin, umax) = (a.min(b), a.max(b));
        if umin >= 0.0 {
            HingeState::Active
        } else if umax <= 0.0 {
            HingeState::Inactive
        } else {
            HingeState::Straddle
        }
    }

    /// True when no knot cuts the node box: the model is multilinear on it.
    pub fn is_cell_pure(&self, node: &Node) -> bool {
        (0..self.num_hinges()).all(|h| self.hinge_state(node, h) != HingeState::Straddle)
    }

    fn free_dims(&self, node: &Node) -> Vec<usize> {
        let mut used = vec![false; self.model.dim()];
        for h in &self.miqp.index.hinges {
            used[h.var] = true;
        }
        (0..self.model.dim())
            .filter(|&v| used[v] && node.hi[v] > node.lo[v])
            .collect()
    }

    /// True when the node is cell-pure and small enough to enumerate.
    pub fn is_leaf(&self, node: &Node) -> bool {
        self.is_cell_pure(node) && self.free_dims(node).len() as u32 <= self.leaf_vertex_log2_cap
    }

    /// Best vertex of a cell-pure node: `(minimised objective, x)`.
    pub fn finalize_leaf(&self, node: &Node) -> (f64, Vec<f64>) {
        debug_assert!(self.is_leaf(node));
        let dims = self.free_dims(node);
        let mut x: Vec<f64> = node.lo.clone();
        let mut best = (self.objective(&x), x.clone());
        let count = 1u64 << dims.len();
        for mask in 1..count {
            for (b, &v) in dims.iter().enumerate() {
                x[v] = if mask >> b & 1 == 1 { node.hi[v] } else { node.lo[v] };
            }
            let f = self.objective(&x);
            if f < best.0 {
                best = (f, x.clone());
            }
        }
        best
    }

    /// Solves the node LP. `None` when the node is infeasible.
    pub fn relax(&self, node: &Node) -> Option<Relaxation> {
        let model = self.model;
        let nv = model.dim();
        let mut lp = LinearProgram::new();
        for v in 0..nv {
            lp.add_var(0.0, node.lo[v], node.hi[v]);
        }
        let mut constant = self.intercept;
        let nh = self.num_hinges();
        let mut factors = Vec::with_capacity(nh);
        let mut y_col = vec![None; nh];
        for (h, hs) in self.miqp.index.hinges.iter().enumerate() {
            let s = hs.sign.value();
            let xv = hs.var;
            let a = s * (node.lo[xv] - hs.knot);
            let b = s * (node.hi[xv] - hs.knot);
            let (umin, umax) = (a.min(b), a.max(b));
            let f = match self.hinge_state(node, h) {
                HingeState::Inactive => {
                    if umin > FEASIBILITY_TOL {
                        // y fixed to 0 but the box is on the active side
                        return None;
                    }
                    Factor {
                        lin: None,
                        constant: 0.0,
                        lo: 0.0,
                        hi: 0.0,
                    }
                }
                HingeState::Active => {
                    if umax < -FEASIBILITY_TOL {
                        return None;
                    }
                    Factor {
                        lin: Some((xv, s)),
                        constant: -s * hs.knot,
                        lo: umin.max(0.0),
                        hi: umax.max(0.0),
                    }
                }
                HingeState::Straddle => {
                    let eta = lp.add_var(0.0, 0.0, umax);
                    let y = lp.add_var(0.0, 0.0, 1.0);
                    let l = -umin;
                    // eta >= s (x - t)
                    lp.add_row(vec![(eta, 1.0), (xv, -s)], Relation::Ge, -s * hs.knot);
                    // eta <= s (x - t) + L (1 - y)
                    lp.add_row(
                        vec![(eta, 1.0), (xv, -s), (y, l)],
                        Relation::Le,
                        -s * hs.knot + l,
                    );
                    // eta <= U y
                    lp.add_row(vec![(eta, 1.0), (y, -umax)], Relation::Le, 0.0);
                    y_col[h] = Some(y);
                    Factor {
                        lin: Some((eta, 1.0)),
                        constant: 0.0,
                        lo: 0.0,
                        hi: umax,
                    }
                }
            };
            factors.push(f);
        }

        let mut w_col = vec![None; model.num_bases()];
        for (m, hinges) in self.basis_hinges.iter().enumerate() {
            let a = self.coeff[m];
            if a == 0.0 {
                continue;
            }
            match hinges.as_slice() {
                [h] => {
                    let f = factors[*h];
                    constant += a * f.constant;
                    if let Some((j, c)) = f.lin {
                        lp.objective[j] += a * c;
                    }
                }
                [h1, h2] => {
                    let (f1, f2) = (factors[*h1], factors[*h2]);
                    if f1.hi == 0.0 || f2.hi == 0.0 {
                        continue;
                    }
                    let w = lp.add_var(a, f1.lo * f2.lo, f1.hi * f2.hi);
                    w_col[m] = Some(w);
                    // w (rel) p * e1 + q * e2 + r, with e = lin + constant
                    let mut add = |p: f64, q: f64, r: f64, rel: Relation| {
                        let mut coeffs = vec![(w, 1.0)];
                        let rhs = r + p * f1.constant + q * f2.constant;
                        for (f, k) in [(f1, p), (f2, q)] {
                            if let Some((j, c)) = f.lin {
                                coeffs.push((j, -k * c));
                            }
                        }
                        lp.add_row(coeffs, rel, rhs);
                    };
                    let (l1, u1, l2, u2) = (f1.lo, f1.hi, f2.lo, f2.hi);
                    if a > 0.0 {
                        add(l2, l1, -l1 * l2, Relation::Ge);
                        add(u2, u1, -u1 * u2, Relation::Ge);
                    } else {
                        add(u2, l1, -l1 * u2, Relation::Le);
                        add(l2, u1, -u1 * l2, Relation::Le);
                    }
                }
                _ => unreachable!("bases have one or two hinges"),
            }
        }

        let sol = solve_lp(&lp, &self.simplex);
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return None,
            LpStatus::Unbounded => unreachable!("node LPs are bounded"),
            LpStatus::IterationLimit => {
                // no valid bound from an unfinished primal simplex; fall back to interval arithmetic
                return Some(self.interval_relaxation(node, sol.iterations));
            }
        }
        let bound = sol.objective + constant;

        let x: Vec<f64> = sol.x[..nv].to_vec();
        let mut z = vec![0.0; self.miqp.dim];
        z[0] = 1.0;
        for v in 0..nv {
            z[self.miqp.index.x[v]] = x[v];
        }
        let mut hinge_violation = vec![0.0; nh];
        for (h, hs) in self.miqp.index.hinges.iter().enumerate() {
            let eta = factors[h].value(&sol.x);
            let y = match (y_col[h], factors[h].lin) {
                (Some(y), _) => sol.x[y],
                (None, Some(_)) => 1.0,
                (None, None) => 0.0,
            };
            z[hs.eta] = eta;
            z[hs.y] = y;
            let exact = (hs.sign.value() * (x[hs.var] - hs.knot)).max(0.0);
            hinge_violation[h] = (eta - exact).abs();
        }
        let mut product_violation = vec![0.0; model.num_bases()];
        for (m, hinges) in self.basis_hinges.iter().enumerate() {
            if let (Some(w), [h1, h2]) = (w_col[m], hinges.as_slice()) {
                let p = factors[*h1].value(&sol.x) * factors[*h2].value(&sol.x);
                product_violation[m] = self.coeff[m].abs() * (sol.x[w] - p).abs();
            }
        }
        Some(Relaxation {
            bound,
            z,
            x,
            hinge_violation,
            product_violation,
            iterations: sol.iterations,
        })
    }

    /// Crude but valid bound from per-basis interval products.
    fn interval_relaxation(&self, node: &Node, iterations: u64) -> Relaxation {
        let mut bound = self.intercept;
        for (m, basis) in self.model.bases().iter().enumerate() {
            let (mut lo, mut hi) = (1.0, 1.0);
            for t in basis.terms() {
                let a = t.eval_at(node.lo[t.var]);
                let b = t.eval_at(node.hi[t.var]);
                lo *= a.min(b);
                hi *= a.max(b);
            }
            let a = self.coeff[m];
            bound += (a * lo).min(a * hi);
        }
        let x: Vec<f64> = node
            .lo
            .iter()
            .zip(&node.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect();
        Relaxation {
            bound,
            z: self.miqp.embed(&x),
            x,
            hinge_violation: vec![1.0; self.num_hinges()],
            product_violation: vec![0.0; self.model.num_bases()],
            iterations,
        }
    }

    fn split_var(&self, node: &Node, var: usize, at: f64) -> (Node, Node) {
        let mut a = node.clone();
        let mut b = node.clone();
        a.depth += 1;
        b.depth += 1;
        if self.model.kinds()[var] == VarKind::Integer {
            let f = at.floor();
            a.hi[var] = f;
            b.lo[var] = f + 1.0;
        } else {
            a.hi[var] = at;
            b.lo[var] = at;
        }
        (a, b)
    }

    /// Splits a node. Returns `None` when nothing is left to branch on,
    /// in which case the node is a leaf.
    pub fn branch(
        &self,
        node: &Node,
        relax: &Relaxation,
        rule: BranchRule,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Option<(Branching, Node, Node)> {
        let pick = |cands: &[(f64, usize)], rng: Option<&mut ChaCha8Rng>| -> Option<usize> {
            let best = cands.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
            let ties: Vec<usize> = cands
                .iter()
                .filter(|c| c.0 >= best - 1e-12)
                .map(|c| c.1)
                .collect();
            match (ties.len(), rng) {
                (0, _) => None,
                (1, _) | (_, None) => Some(ties[0]),
                (n, Some(r)) => Some(ties[r.random_range(0..n)]),
            }
        };
        let mut rng = rng;
        let hinges = &self.miqp.index.hinges;
        let straddle: Vec<usize> = (0..self.num_hinges())
            .filter(|&h| self.hinge_state(node, h) == HingeState::Straddle)
            .collect();

        if rule == BranchRule::Priority {
            // (1) most fractional free indicator
            let cands: Vec<(f64, usize)> = straddle
                .iter()
                .map(|&h| {
                    let y = relax.z[hinges[h].y];
                    (y.min(1.0 - y), h)
                })
                .filter(|c| c.0 > INTEGRALITY_TOL)
                .collect();
            if !cands.is_empty() {
                let h = pick(&cands, rng.as_deref_mut())?;
                let hs = &hinges[h];
                let (below, above) = self.split_var(node, hs.var, hs.knot);
                let (mut off, mut on) = match hs.sign {
                    crate::model::Sign::Plus => (below, above),
                    crate::model::Sign::Minus => (above, below),
                };
                off.y_fixed[h] = Some(false);
                on.y_fixed[h] = Some(true);
                return Some((Branching::Indicator { hinge: h }, off, on));
            }
            // (2) fractional integer coordinate
            let cands: Vec<(f64, usize)> = (0..self.model.dim())
                .filter(|&v| self.model.kinds()[v] == VarKind::Integer && node.hi[v] > node.lo[v])
                .map(|v| {
                    let f = relax.x[v] - relax.x[v].floor();
                    (f.min(1.0 - f), v)
                })
                .filter(|c| c.0 > INTEGRALITY_TOL)
                .collect();
            if !cands.is_empty() {
                let v = pick(&cands, rng.as_deref_mut())?;
                let at = relax.x[v];
                let (a, b) = self.split_var(node, v, at);
                return Some((Branching::Integer { var: v, at }, a, b));
            }
            return self.spatial(node, relax, &straddle, rng);
        }
        self.spatial(node, relax, &straddle, rng)
    }

    fn spatial(
        &self,
        node: &Node,
        relax: &Relaxation,
        straddle: &[usize],
        rng: Option<&mut ChaCha8Rng>,
    ) -> Option<(Branching, Node, Node)> {
        let hinges = &self.miqp.index.hinges;
        if !straddle.is_empty() {
            let mut cands: Vec<(f64, usize)> = straddle
                .iter()
                .map(|&h| {
                    let hs = &hinges[h];
                    let a = self.coeff[hs.basis].abs();
                    let score = a * relax.hinge_violation[h] + relax.product_violation[hs.basis];
                    (score, h)
                })
                .collect();
            // a hinge split also has to make progress on integer variables
            cands.retain(|&(_, h)| {
                let hs = &hinges[h];
                self.model.kinds()[hs.var] == VarKind::Real
                    || (hs.knot.floor() >= node.lo[hs.var] && hs.knot.floor() < node.hi[hs.var])
            });
            let best = cands.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
            let mut ties: Vec<usize> = cands
                .iter()
                .filter(|c| c.0 >= best - 1e-12)
                .map(|c| c.1)
                .collect();
            ties.sort_unstable();
            if !ties.is_empty() {
                let h = match rng {
                    Some(r) if ties.len() > 1 => ties[r.random_range(0..ties.len())],
                    _ => ties[0],
                };
                let hs = &hinges[h];
                let (a, b) = self.split_var(node, hs.var, hs.knot);
                return Some((Branching::Knot { var: hs.var, at: hs.knot }, a, b));
            }
        }
        if self.is_cell_pure(node) && !self.is_leaf(node) {
            // too many free coordinates for vertex enumeration: bisect the widest
            let v = self
                .free_dims(node)
                .into_iter()
                .max_by(|&a, &b| {
                    (node.hi[a] - node.lo[a])
                        .total_cmp(&(node.hi[b] - node.lo[b]))
                        .then(b.cmp(&a))
                })?;
            let at = 0.5 * (node.lo[v] + node.hi[v]);
            let (a, b) = self.split_var(node, v, at);
            return Some((Branching::Bisect { var: v, at }, a, b));
        }
        None
    }
}
