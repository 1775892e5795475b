//! Bounded-variable primal simplex on a dense tableau.
//!
//! Problems are stated as `min c'x` subject to linear rows and per-variable
//! bounds. Every row gets a slack whose bounds encode the relation, so the
//! working form is `A x + s = b` with `lo <= (x, s) <= hi`. Nonbasic columns sit
//! at one of their bounds. Phase 1 minimises the sum of artificial columns added
//! for rows the initial slack basis cannot satisfy.
//!
//! Entering columns use Dantzig pricing; after too many consecutive
//! degenerate pivots the routine switches to Bland's rule for the remainder of
//! the phase.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min objective'x` subject to `rows` and `lower <= x <= upper`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds a column and returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|(j, a)| a * x[*j]).sum();
            let viol = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// `None` means a size-based default.
    pub max_iterations: Option<u64>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: None,
        }
    }
}

struct Tableau {
    m: usize,
    ncol: usize,
    /// row-major `m x ncol`, equal to `B^-1 [A I Art]`
    t: Vec<f64>,
    basis: Vec<usize>,
    value: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    is_basic: Vec<bool>,
    first_art: usize,
    iterations: u64,
    opts: SimplexOptions,
    max_iterations: u64,
    scratch: Vec<f64>,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    Limit,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncol + j]
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncol..(i + 1) * self.ncol];
                for (dj, tij) in d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, q: usize, d: &mut [f64]) {
        let nc = self.ncol;
        let piv = self.t[r * nc + q];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[q] = 1.0;
            self.scratch.clear();
            self.scratch.extend_from_slice(row);
        }
        let pr = &self.scratch;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            for (v, p) in row.iter_mut().zip(pr) {
                *v -= f * p;
            }
            row[q] = 0.0;
        }
        let f = d[q];
        if f != 0.0 {
            for (v, p) in d.iter_mut().zip(pr) {
                *v -= f * p;
            }
            d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    fn run(&mut self, cost: &[f64], allow: impl Fn(usize) -> bool) -> PhaseEnd {
        let mut d = self.reduced_costs(cost);
        let mut degenerate = 0u64;
        let bland_after = 10 * self.ncol as u64;
        let mut bland = false;
        let tol = self.opts.optimality_tol;
        let ptol = self.opts.pivot_tol;
        loop {
            if self.iterations >= self.max_iterations {
                return PhaseEnd::Limit;
            }
            // pricing
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.ncol {
                if self.is_basic[j] || !allow(j) {
                    continue;
                }
                let (lo, hi, v) = (self.lo[j], self.hi[j], self.value[j]);
                if hi - lo <= 0.0 {
                    continue;
                }
                let dj = d[j];
                let dir = if dj < -tol && v < hi {
                    1.0
                } else if dj > tol && v > lo {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    enter = Some((j, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return PhaseEnd::Optimal;
            };

            // ratio test
            let mut theta = self.hi[q] - self.lo[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0;
            for i in 0..self.m {
                let alpha = self.at(i, q) * dir;
                let b = self.basis[i];
                let (ratio, to_upper) = if alpha > ptol {
                    if self.lo[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    (((self.value[b] - self.lo[b]) / alpha).max(0.0), false)
                } else if alpha < -ptol {
                    if self.hi[b] == f64::INFINITY {
                        continue;
                    }
                    (((self.hi[b] - self.value[b]) / -alpha).max(0.0), true)
                } else {
                    continue;
                };
                let better = match leave {
                    None => ratio < theta,
                    Some((r, _)) => {
                        if bland {
                            ratio < theta || (ratio == theta && b < self.basis[r])
                        } else {
                            ratio < theta - 1e-12
                                || (ratio <= theta + 1e-12 && alpha.abs() > leave_alpha)
                        }
                    }
                };
                if better {
                    theta = if leave.is_none() { ratio } else { ratio.min(theta) };
                    leave = Some((i, to_upper));
                    leave_alpha = alpha.abs();
                }
            }
            if theta == f64::INFINITY {
                return PhaseEnd::Unbounded;
            }
            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate += 1;
                if degenerate > bland_after {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }

            if theta > 0.0 {
                for i in 0..self.m {
                    let a = self.at(i, q);
                    if a != 0.0 {
                        let b = self.basis[i];
                        self.value[b] -= a * dir * theta;
                    }
                }
                self.value[q] += dir * theta;
            }
            match leave {
                None => {
                    // bound flip
                    self.value[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                }
                Some((r, to_upper)) => {
                    let b = self.basis[r];
                    self.value[b] = if to_upper { self.hi[b] } else { self.lo[b] };
                    self.pivot(r, q, &mut d);
                }
            }
        }
    }
}

/// Solves `lp` with the bounded-variable primal simplex method.
pub fn solve_lp(lp: &LinearProgram, opts: &SimplexOptions) -> LpSolution {
    let n = lp.num_vars();
    let m = lp.rows.len();

    let mut lo = lp.lower.clone();
    let mut hi = lp.upper.clone();
    for j in 0..n {
        if lo[j] > hi[j] {
            return LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
                iterations: 0,
            };
        }
    }
    let mut value: Vec<f64> = (0..n)
        .map(|j| {
            if lo[j].is_finite() {
                lo[j]
            } else if hi[j].is_finite() {
                hi[j]
            } else {
                0.0
            }
        })
        .collect();

    // slack bounds encode the relation: row + s = rhs
    for row in &lp.rows {
        let (l, u) = match row.relation {
            Relation::Le => (0.0, f64::INFINITY),
            Relation::Ge => (f64::NEG_INFINITY, 0.0),
            Relation::Eq => (0.0, 0.0),
        };
        lo.push(l);
        hi.push(u);
    }

    // residuals decide which rows need an artificial
    let mut needs_art = Vec::new();
    let mut resid = vec![0.0; m];
    for (i, row) in lp.rows.iter().enumerate() {
        let lhs: f64 = row.coeffs.iter().map(|(j, a)| a * value[*j]).sum();
        let r = row.rhs - lhs;
        resid[i] = r;
        let (l, u) = (lo[n + i], hi[n + i]);
        if r < l - opts.feasibility_tol || r > u + opts.feasibility_tol {
            needs_art.push(i);
        }
    }
    let first_art = n + m;
    let ncol = n + m + needs_art.len();
    let mut t = vec![0.0; m * ncol];
    let mut basis = vec![0usize; m];
    value.resize(ncol, 0.0);
    lo.resize(ncol, 0.0);
    hi.resize(ncol, f64::INFINITY);
    let mut art_of_row = vec![None; m];
    for (k, &i) in needs_art.iter().enumerate() {
        art_of_row[i] = Some(first_art + k);
    }
    for (i, row) in lp.rows.iter().enumerate() {
        let base = i * ncol;
        for &(j, a) in &row.coeffs {
            t[base + j] += a;
        }
        t[base + n + i] = 1.0;
        let r = resid[i];
        match art_of_row[i] {
            None => {
                basis[i] = n + i;
                value[n + i] = r.clamp(lo[n + i], hi[n + i]);
            }
            Some(a) => {
                let s = r.clamp(lo[n + i], hi[n + i]);
                value[n + i] = s;
                let sigma = if r - s >= 0.0 { 1.0 } else { -1.0 };
                t[base + a] = sigma;
                // make the artificial column a unit column in this row
                for v in &mut t[base..base + ncol] {
                    *v *= sigma;
                }
                basis[i] = a;
                value[a] = (r - s).abs();
            }
        }
    }
    let mut is_basic = vec![false; ncol];
    for &b in &basis {
        is_basic[b] = true;
    }
    let max_iterations = opts
        .max_iterations
        .unwrap_or(50 * (m + ncol) as u64 + 1000);

    let mut tab = Tableau {
        m,
        ncol,
        t,
        basis,
        value,
        lo,
        hi,
        is_basic,
        first_art,
        iterations: 0,
        opts: *opts,
        max_iterations,
        scratch: Vec::with_capacity(ncol),
    };

    let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);

    if !needs_art.is_empty() {
        let mut cost = vec![0.0; ncol];
        for c in cost.iter_mut().skip(first_art) {
            *c = 1.0;
        }
        match tab.run(&cost, |_| true) {
            PhaseEnd::Optimal => {}
            PhaseEnd::Limit => return finish(&tab, lp, LpStatus::IterationLimit),
            PhaseEnd::Unbounded => unreachable!("phase 1 objective is bounded below"),
        }
        let infeas: f64 = tab.value[first_art..].iter().sum();
        if infeas > opts.feasibility_tol * scale {
            return finish(&tab, lp, LpStatus::Infeasible);
        }
        // drive basic artificials out where possible, then pin all of them at zero
        for r in 0..m {
            if tab.basis[r] < first_art {
                continue;
            }
            let mut best = None;
            let mut best_abs = 1e-7;
            for j in 0..first_art {
                let a = tab.at(r, j).abs();
                if !tab.is_basic[j] && a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            if let Some(q) = best {
                let mut dummy = vec![0.0; ncol];
                tab.pivot(r, q, &mut dummy);
            }
        }
        for j in first_art..ncol {
            tab.lo[j] = 0.0;
            tab.hi[j] = 0.0;
            if !tab.is_basic[j] {
                tab.value[j] = 0.0;
            }
        }
    }

    let mut cost = vec![0.0; ncol];
    cost[..n].copy_from_slice(&lp.objective);
    let fa = tab.first_art;
    let status = match tab.run(&cost, |j| j < fa) {
        PhaseEnd::Optimal => LpStatus::Optimal,
        PhaseEnd::Unbounded => LpStatus::Unbounded,
        PhaseEnd::Limit => LpStatus::IterationLimit,
    };
    finish(&tab, lp, status)
}

fn finish(tab: &Tableau, lp: &LinearProgram, status: LpStatus) -> LpSolution {
    let n = lp.num_vars();
    let x: Vec<f64> = (0..n)
        .map(|j| tab.value[j].clamp(lp.lower[j], lp.upper[j]))
        .collect();
    let objective = if status == LpStatus::Optimal {
        lp.objective_at(&x)
    } else {
        f64::NAN
    };
    LpSolution {
        status,
        x,
        objective,
        iterations: tab.iterations,
    }
}
