//! Forward/backward MARS fitting restricted to two-way interactions.
//!
//! Inputs are rescaled to `[0, 1]` per column internally; hinge columns then
//! differ from the original-unit ones by a positive factor, so the selection
//! is unchanged and coefficients convert back exactly.

mod dataset;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use dataset::Dataset;

use crate::error::{Error, Result};
use crate::model::{BasisFunction, Sign, TitlMarsModel, TruncatedTerm};

/// Highest interaction order a fitted basis may have.
pub const MAX_INTERACTION: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KnotCandidates {
    /// every distinct sample value
    All,
    /// at most this many sample quantiles per variable
    Quantiles(usize),
}

#[derive(Clone, Debug)]
pub struct FitConfig {
    /// bases excluding the intercept
    pub max_basis: usize,
    pub knots: KnotCandidates,
    /// GCV cost per knot
    pub penalty: f64,
    /// forward pass stops when an addition removes less than this share of the total sum of squares
    pub min_improvement: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_basis: 40,
            knots: KnotCandidates::Quantiles(100),
            penalty: 3.0,
            min_improvement: 1e-6,
        }
    }
}

/// Generalized cross-validation score; `+inf` once the parameters use up the data.
pub fn gcv(ssr: f64, n: usize, effective_params: f64) -> f64 {
    let n = n as f64;
    if effective_params >= n {
        return f64::INFINITY;
    }
    let shrink = 1.0 - effective_params / n;
    (ssr / n) / (shrink * shrink)
}

/// Effective parameter count `1 + M + d * (distinct knots)` of a basis set.
pub fn effective_params(bases: &[&BasisFunction], penalty: f64) -> f64 {
    let mut knots: Vec<(usize, u64)> = bases
        .iter()
        .flat_map(|b| b.terms().iter().map(|t| (t.var, t.knot.to_bits())))
        .collect();
    knots.sort_unstable();
    knots.dedup();
    1.0 + bases.len() as f64 + penalty * knots.len() as f64
}

/// Sum of squared residuals of `model` on `data`.
pub fn lack_of_fit(model: &TitlMarsModel, data: &Dataset) -> f64 {
    (0..data.len())
        .map(|i| {
            let e = model.eval(&data.row(i)) - data.y()[i];
            e * e
        })
        .sum()
}

/// Coefficient of determination of `model` on `data`.
pub fn r_squared(model: &TitlMarsModel, data: &Dataset) -> f64 {
    let sst = total_sum_of_squares(data.y());
    if sst == 0.0 {
        return 1.0;
    }
    1.0 - lack_of_fit(model, data) / sst
}

fn total_sum_of_squares(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// Data rescaled to the unit box, plus per-variable sort orders and knot candidates.
struct Scaled {
    n: usize,
    offset: Vec<f64>,
    width: Vec<f64>,
    cols: Vec<Vec<f64>>,
    order: Vec<Vec<usize>>,
    /// candidate knots per variable, ascending, in original units
    knots: Vec<Vec<f64>>,
}

impl Scaled {
    fn new(data: &Dataset, knots: KnotCandidates) -> Self {
        let n = data.len();
        let mut offset = Vec::new();
        let mut width = Vec::new();
        let mut cols = Vec::new();
        let mut order = Vec::new();
        let mut cands = Vec::new();
        for v in 0..data.dim() {
            let c = data.column(v);
            let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w = if hi > lo { hi - lo } else { 1.0 };
            offset.push(lo);
            width.push(w);
            cols.push(c.iter().map(|x| (x - lo) / w).collect());
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| c[a].total_cmp(&c[b]).then(a.cmp(&b)));
            let mut distinct: Vec<f64> = idx.iter().map(|&i| c[i]).collect();
            distinct.dedup();
            if let KnotCandidates::Quantiles(q) = knots {
                let q = q.max(2);
                if distinct.len() > q {
                    let d = distinct.len() - 1;
                    let mut picked: Vec<f64> = (0..q)
                        .map(|i| distinct[((i * d) as f64 / (q - 1) as f64).round() as usize])
                        .collect();
                    picked.dedup();
                    distinct = picked;
                }
            }
            order.push(idx);
            cands.push(distinct);
        }
        Scaled {
            n,
            offset,
            width,
            cols,
            order,
            knots: cands,
        }
    }

    fn scale_knot(&self, v: usize, t: f64) -> f64 {
        (t - self.offset[v]) / self.width[v]
    }

    fn column(&self, basis: &BasisFunction) -> Vec<f64> {
        let mut col = vec![1.0; self.n];
        for t in basis.terms() {
            let ts = self.scale_knot(t.var, t.knot);
            let s = t.sign.value();
            for (c, x) in col.iter_mut().zip(&self.cols[t.var]) {
                *c *= (s * (x - ts)).max(0.0);
            }
        }
        col
    }

    /// Product of term widths; converts a scaled-column coefficient to original units.
    fn basis_scale(&self, basis: &BasisFunction) -> f64 {
        basis.terms().iter().map(|t| self.width[t.var]).product()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Addition {
    Pair,
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    decrease: f64,
    var: usize,
    knot_index: usize,
    /// `None` for the intercept, else an index into the basis list
    parent: Option<usize>,
    addition: Addition,
}

impl Candidate {
    /// Higher decrease wins; ties go to lower variable, smaller knot, earlier parent, `+` first.
    fn beats(&self, other: &Candidate) -> bool {
        if self.decrease != other.decrease {
            return self.decrease > other.decrease;
        }
        let key = |c: &Candidate| {
            (
                c.var,
                c.knot_index,
                c.parent.map_or(0, |p| p + 1),
                c.addition != Addition::Pair,
                c.addition == Addition::Minus,
            )
        };
        key(self) < key(other)
    }
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.beats(&a) { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Forward state: orthonormal basis `q` of the current column span and the residual.
struct Forward<'a> {
    scaled: &'a Scaled,
    q: Vec<Vec<f64>>,
    resid: Vec<f64>,
}

impl Forward<'_> {
    /// Best hinge addition on `(parent, v)`, sweeping knots from the top down.
    fn sweep(
        &self,
        parent: &[f64],
        parent_id: Option<usize>,
        v: usize,
        pair_allowed: bool,
    ) -> Option<Candidate> {
        let k = self.q.len();
        let x = &self.scaled.cols[v];
        let order = &self.scaled.order[v];
        let knots = &self.scaled.knots[v];

        let mut t0 = vec![0.0; k];
        let mut t1 = vec![0.0; k];
        let (mut r0t, mut r1t, mut p0t, mut p1t, mut p2t) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..self.scaled.n {
            let p = parent[i];
            if p == 0.0 {
                continue;
            }
            let xi = x[i];
            for j in 0..k {
                let qp = self.q[j][i] * p;
                t0[j] += qp;
                t1[j] += qp * xi;
            }
            r0t += self.resid[i] * p;
            r1t += self.resid[i] * p * xi;
            p0t += p * p;
            p1t += p * p * xi;
            p2t += p * p * xi * xi;
        }
        if p0t == 0.0 {
            return None;
        }

        let mut s0 = vec![0.0; k];
        let mut s1 = vec![0.0; k];
        let (mut r0, mut r1, mut q0, mut q1, mut q2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut a = vec![0.0; k];
        let mut b = vec![0.0; k];
        let mut ptr = order.len();
        let mut best: Option<Candidate> = None;

        for (ki, &knot) in knots.iter().enumerate().rev() {
            let t = self.scaled.scale_knot(v, knot);
            while ptr > 0 && x[order[ptr - 1]] > t {
                ptr -= 1;
                let i = order[ptr];
                let p = parent[i];
                if p == 0.0 {
                    continue;
                }
                let xi = x[i];
                for j in 0..k {
                    let qp = self.q[j][i] * p;
                    s0[j] += qp;
                    s1[j] += qp * xi;
                }
                r0 += self.resid[i] * p;
                r1 += self.resid[i] * p * xi;
                q0 += p * p;
                q1 += p * p * xi;
                q2 += p * p * xi * xi;
            }
            // c+ = p (x - t) on x > t, c- = p (t - x) on x <= t
            let cc_plus = (q2 - 2.0 * t * q1 + t * t * q0).max(0.0);
            let cc_minus = ((p2t - q2) - 2.0 * t * (p1t - q1) + t * t * (p0t - q0)).max(0.0);
            let g_plus = r1 - t * r0;
            let g_minus = t * (r0t - r0) - (r1t - r1);
            for j in 0..k {
                a[j] = s1[j] - t * s0[j];
                b[j] = t * (t0[j] - s0[j]) - (t1[j] - s1[j]);
            }
            let d_plus = cc_plus - dot(&a, &a);
            let d_minus = cc_minus - dot(&b, &b);
            let floor = 1e-18 * p0t;
            let ok_plus = cc_plus > floor && d_plus > 1e-9 * cc_plus;
            let ok_minus = cc_minus > floor && d_minus > 1e-9 * cc_minus;

            let mut consider = |decrease: f64, addition: Addition| {
                let c = Candidate {
                    decrease,
                    var: v,
                    knot_index: ki,
                    parent: parent_id,
                    addition,
                };
                best = better(best, Some(c));
            };
            if ok_plus {
                consider(g_plus * g_plus / d_plus, Addition::Plus);
            }
            if ok_minus {
                consider(g_minus * g_minus / d_minus, Addition::Minus);
            }
            if pair_allowed && ok_plus && ok_minus {
                // disjoint supports: c+ . c- = 0
                let off = -dot(&a, &b);
                let det = d_plus * d_minus - off * off;
                if det > 1e-9 * d_plus * d_minus {
                    let dec = (g_plus * g_plus * d_minus - 2.0 * g_plus * g_minus * off
                        + g_minus * g_minus * d_plus)
                        / det;
                    consider(dec, Addition::Pair);
                }
            }
        }
        best
    }

    /// Adds `col` to the span; returns false when it is numerically dependent.
    fn push(&mut self, mut col: Vec<f64>) -> bool {
        let norm0 = dot(&col, &col);
        if norm0 == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for q in &self.q {
                let c = dot(q, &col);
                for (x, qi) in col.iter_mut().zip(q) {
                    *x -= c * qi;
                }
            }
        }
        let norm = dot(&col, &col);
        if norm <= 1e-10 * norm0 {
            return false;
        }
        let inv = 1.0 / norm.sqrt();
        col.iter_mut().for_each(|x| *x *= inv);
        let c = dot(&col, &self.resid);
        for (r, qi) in self.resid.iter_mut().zip(&col) {
            *r -= c * qi;
        }
        self.q.push(col);
        true
    }
}

/// Outcome of the forward pass.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    /// least-squares model on every selected basis
    pub model: TitlMarsModel,
    /// training SSR after the intercept and after each iteration
    pub ssr_trace: Vec<f64>,
}

fn check_inputs(data: &Dataset, cfg: &FitConfig) -> Result<()> {
    if data.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 samples, got {}", data.len())));
    }
    if cfg.max_basis == 0 {
        return Err(Error::Config("max_basis must be at least 1".into()));
    }
    if !(cfg.penalty >= 0.0) || !(cfg.min_improvement >= 0.0) {
        return Err(Error::Config("penalty and min_improvement must be non-negative".into()));
    }
    if let KnotCandidates::Quantiles(q) = cfg.knots {
        if q < 2 {
            return Err(Error::Config("quantile knot count must be at least 2".into()));
        }
    }
    Ok(())
}

fn is_constant(y: &[f64]) -> bool {
    y.iter().all(|v| *v == y[0])
}

fn intercept_only(data: &Dataset) -> Result<TitlMarsModel> {
    let mean = data.y().iter().sum::<f64>() / data.len() as f64;
    let a0 = if is_constant(data.y()) { data.y()[0] } else { mean };
    TitlMarsModel::real(a0, vec![], vec![], data.lower().to_vec(), data.upper().to_vec())
        .map_err(|e| Error::Fit(e.to_string()))
}

/// Forward stepwise selection of reflected hinge pairs.
pub fn forward_pass(data: &Dataset, cfg: &FitConfig) -> Result<ForwardPass> {
    check_inputs(data, cfg)?;
    let y = data.y();
    let n = data.len();
    let sst = total_sum_of_squares(y);
    if is_constant(y) || sst == 0.0 {
        return Ok(ForwardPass {
            model: intercept_only(data)?,
            ssr_trace: vec![0.0],
        });
    }
    let scaled = Scaled::new(data, cfg.knots);
    let ones = vec![1.0 / (n as f64).sqrt(); n];
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut fw = Forward {
        scaled: &scaled,
        q: vec![ones],
        resid: y.iter().map(|v| v - mean).collect(),
    };
    let mut bases: Vec<BasisFunction> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut trace = vec![dot(&fw.resid, &fw.resid)];
    let intercept_col = vec![1.0; n];

    while bases.len() < cfg.max_basis {
        let pair_allowed = bases.len() + 2 <= cfg.max_basis;
        let mut parents: Vec<Option<usize>> = vec![None];
        parents.extend((0..bases.len()).filter(|&m| bases[m].order() == 1).map(Some));
        let jobs: Vec<(Option<usize>, usize)> = parents
            .iter()
            .flat_map(|&p| (0..data.dim()).map(move |v| (p, v)))
            .filter(|&(p, v)| p.is_none_or(|m| !bases[m].uses_var(v)))
            .collect();
        let best = jobs
            .par_iter()
            .map(|&(p, v)| {
                let col = p.map_or(&intercept_col, |m| &cols[m]);
                fw.sweep(col, p, v, pair_allowed)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(None, better);
        let Some(best) = best else { break };
        if best.decrease < cfg.min_improvement * sst {
            break;
        }
        let knot = scaled.knots[best.var][best.knot_index];
        let signs: &[Sign] = match best.addition {
            Addition::Pair => &[Sign::Plus, Sign::Minus],
            Addition::Plus => &[Sign::Plus],
            Addition::Minus => &[Sign::Minus],
        };
        let mut added = false;
        for &s in signs {
            let term = TruncatedTerm::new(s, best.var, knot);
            let basis = match best.parent {
                None => BasisFunction::single(term),
                Some(m) => BasisFunction::pair(bases[m].terms()[0], term)?,
            };
            let col = scaled.column(&basis);
            if fw.push(col.clone()) {
                bases.push(basis);
                cols.push(col);
                added = true;
            }
        }
        if !added {
            break;
        }
        trace.push(dot(&fw.resid, &fw.resid));
    }

    let all: Vec<usize> = (0..bases.len()).collect();
    let model = refit(data, &scaled, &bases, &all)?;
    Ok(ForwardPass {
        model,
        ssr_trace: trace,
    })
}

/// Least-squares model on `bases[subset]`, in original units.
fn refit(
    data: &Dataset,
    scaled: &Scaled,
    bases: &[BasisFunction],
    subset: &[usize],
) -> Result<TitlMarsModel> {
    let n = data.len();
    let p = subset.len() + 1;
    let mut x = DMatrix::<f64>::zeros(n, p);
    x.column_mut(0).fill(1.0);
    for (j, &m) in subset.iter().enumerate() {
        let col = scaled.column(&bases[m]);
        x.column_mut(j + 1).copy_from_slice(&col);
    }
    let y = DVector::from_column_slice(data.y());
    let svd = x.svd(true, true);
    let beta = svd
        .solve(&y, 1e-12)
        .map_err(|e| Error::Fit(format!("least squares failed: {e}")))?;
    let coeffs = subset
        .iter()
        .enumerate()
        .map(|(j, &m)| beta[j + 1] / scaled.basis_scale(&bases[m]))
        .collect();
    let chosen = subset.iter().map(|&m| bases[m].clone()).collect();
    TitlMarsModel::real(
        beta[0],
        coeffs,
        chosen,
        data.lower().to_vec(),
        data.upper().to_vec(),
    )
    .map_err(|e| Error::Fit(e.to_string()))
}

/// Normal-equation SSR of subsets of a fixed column set.
struct Gram {
    g: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
}

impl Gram {
    fn new(cols: &[Vec<f64>], y: &[f64]) -> Self {
        let n = y.len();
        let mean = y.iter().sum::<f64>() / n as f64;
        let yc: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let p = cols.len() + 1;
        let mut g = DMatrix::<f64>::zeros(p, p);
        let mut xty = DVector::<f64>::zeros(p);
        g[(0, 0)] = n as f64;
        xty[0] = yc.iter().sum();
        for (a, ca) in cols.iter().enumerate() {
            g[(0, a + 1)] = ca.iter().sum();
            g[(a + 1, 0)] = g[(0, a + 1)];
            xty[a + 1] = dot(ca, &yc);
            for (b, cb) in cols.iter().enumerate().skip(a) {
                let v = dot(ca, cb);
                g[(a + 1, b + 1)] = v;
                g[(b + 1, a + 1)] = v;
            }
        }
        Gram {
            g,
            xty,
            yty: dot(&yc, &yc),
        }
    }

    /// SSR using the intercept and the columns in `subset`.
    fn ssr(&self, subset: &[usize]) -> f64 {
        let idx: Vec<usize> = std::iter::once(0).chain(subset.iter().map(|m| m + 1)).collect();
        let p = idx.len();
        let gs = DMatrix::from_fn(p, p, |i, j| self.g[(idx[i], idx[j])]);
        let bs = DVector::from_fn(p, |i, _| self.xty[idx[i]]);
        let beta = match gs.clone().cholesky() {
            Some(ch) => ch.solve(&bs),
            None => {
                let ridge = 1e-8 * gs.diagonal().max().max(1.0);
                let mut gr = gs;
                for i in 0..p {
                    gr[(i, i)] += ridge;
                }
                match gr.cholesky() {
                    Some(ch) => ch.solve(&bs),
                    None => return f64::INFINITY,
                }
            }
        };
        (self.yty - beta.dot(&bs)).max(0.0)
    }
}

/// Deletes bases one at a time and keeps the subset with the lowest GCV.
pub fn backward_pass(
    candidate: &TitlMarsModel,
    data: &Dataset,
    cfg: &FitConfig,
) -> Result<TitlMarsModel> {
    check_inputs(data, cfg)?;
    if candidate.dim() != data.dim() {
        return Err(Error::Input(format!(
            "model has {} variables, data has {}",
            candidate.dim(),
            data.dim()
        )));
    }
    let scaled = Scaled::new(data, cfg.knots);
    let bases = candidate.bases();
    let cols: Vec<Vec<f64>> = bases.iter().map(|b| scaled.column(b)).collect();
    let gram = Gram::new(&cols, data.y());
    let n = data.len();
    let score = |subset: &[usize]| {
        let refs: Vec<&BasisFunction> = subset.iter().map(|&m| &bases[m]).collect();
        gcv(gram.ssr(subset), n, effective_params(&refs, cfg.penalty))
    };

    let mut current: Vec<usize> = (0..bases.len()).collect();
    let mut best = (score(&current), current.clone());
    while !current.is_empty() {
        let trials: Vec<(f64, usize)> = (0..current.len())
            .into_par_iter()
            .map(|pos| {
                let mut s = current.clone();
                s.remove(pos);
                (score(&s), pos)
            })
            .collect();
        let (g, pos) = trials
            .into_iter()
            .fold((f64::INFINITY, usize::MAX), |acc, t| if t.0 < acc.0 { t } else { acc });
        if pos == usize::MAX {
            break;
        }
        current.remove(pos);
        if g < best.0 {
            best = (g, current.clone());
        }
    }
    refit(data, &scaled, bases, &best.1)
}

/// Fits a TITL-MARS model: forward selection followed by GCV pruning.
pub fn fit(data: &Dataset, cfg: &FitConfig) -> Result<TitlMarsModel> {
    let fw = forward_pass(data, cfg)?;
    if fw.model.num_bases() == 0 {
        return Ok(fw.model);
    }
    backward_pass(&fw.model, data, cfg)
}

#[cfg(test)]
mod tests;
