//! Two-way interaction truncated linear MARS models.
//!
//! A model is `a0 + sum_m a_m * B_m(x)` where every basis `B_m` is the product of
//! one or two hinges `max(s * (x_v - t), 0)` on distinct variables. Inside any
//! cell of the knot grid the model is multilinear, which is what the oracle and
//! the branch-and-bound leaves rely on.

mod document;
mod oracle;
mod random;

pub use document::{parse_model, serialize_model};
pub use oracle::{oracle_optimum, OracleConfig, DEFAULT_VERTEX_CAP};
pub use random::{random_model, RandomModelSpec};

use crate::error::{Error, Result};

/// Direction of a hinge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_int(s: i64) -> Option<Sign> {
        match s {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// Kind of a decision variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    Real,
    Integer,
}

/// `max(sign * (x[var] - knot), 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedTerm {
    pub sign: Sign,
    pub var: usize,
    pub knot: f64,
}

impl TruncatedTerm {
    pub fn new(sign: Sign, var: usize, knot: f64) -> Self {
        TruncatedTerm { sign, var, knot }
    }

    /// Signed distance `sign * (x - knot)` before truncation.
    #[inline]
    pub fn linear(&self, xv: f64) -> f64 {
        self.sign.value() * (xv - self.knot)
    }

    /// Hinge value for a scalar coordinate.
    #[inline]
    pub fn eval_at(&self, xv: f64) -> f64 {
        self.linear(xv).max(0.0)
    }

    /// Hinge value at a full point. Panics if `var` is out of range.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_at(x[self.var])
    }

    /// Range of `sign * (x - knot)` for `x` in `[lo, hi]`.
    pub fn linear_range(&self, lo: f64, hi: f64) -> (f64, f64) {
        let a = self.linear(lo);
        let b = self.linear(hi);
        (a.min(b), a.max(b))
    }
}

/// Checked hinge evaluation.
pub fn eval_term(term: &TruncatedTerm, x: &[f64]) -> Result<f64> {
    if term.var >= x.len() {
        return Err(Error::Structural(format!(
            "term references variable {} but point has length {}",
            term.var,
            x.len()
        )));
    }
    Ok(term.eval(x))
}

/// Product of one or two hinges on distinct variables.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisFunction {
    terms: Vec<TruncatedTerm>,
}

impl BasisFunction {
    pub fn new(terms: Vec<TruncatedTerm>) -> Result<Self> {
        match terms.len() {
            1 => {}
            2 => {
                if terms[0].var == terms[1].var {
                    return Err(Error::Validation(format!(
                        "distinct variables: two-way basis uses variable {} twice",
                        terms[0].var
                    )));
                }
            }
            k => {
                return Err(Error::Validation(format!(
                    "interaction order: basis has {k} terms, allowed 1 or 2"
                )))
            }
        }
        Ok(BasisFunction { terms })
    }

    pub fn single(term: TruncatedTerm) -> Self {
        BasisFunction { terms: vec![term] }
    }

    pub fn pair(a: TruncatedTerm, b: TruncatedTerm) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn terms(&self) -> &[TruncatedTerm] {
        &self.terms
    }

    /// Interaction order `K_m`.
    pub fn order(&self) -> usize {
        self.terms.len()
    }

    pub fn uses_var(&self, v: usize) -> bool {
        self.terms.iter().any(|t| t.var == v)
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut p = 1.0;
        for t in &self.terms {
            p *= t.eval(x);
            if p == 0.0 {
                return 0.0;
            }
        }
        p
    }
}

/// Checked basis evaluation.
pub fn eval_basis(basis: &BasisFunction, x: &[f64]) -> Result<f64> {
    let mut p = 1.0;
    for t in basis.terms() {
        p *= eval_term(t, x)?;
    }
    Ok(p)
}

/// A validated TITL-MARS model together with its variable box.
#[derive(Clone, Debug, PartialEq)]
pub struct TitlMarsModel {
    intercept: f64,
    coeffs: Vec<f64>,
    bases: Vec<BasisFunction>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    kinds: Vec<VarKind>,
}

impl TitlMarsModel {
    pub fn new(
        intercept: f64,
        coeffs: Vec<f64>,
        bases: Vec<BasisFunction>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        kinds: Vec<VarKind>,
    ) -> Result<Self> {
        let model = TitlMarsModel {
            intercept,
            coeffs,
            bases,
            lower,
            upper,
            kinds,
        };
        model.validate()?;
        Ok(model)
    }

    /// All-real model over `[lower, upper]`.
    pub fn real(
        intercept: f64,
        coeffs: Vec<f64>,
        bases: Vec<BasisFunction>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let kinds = vec![VarKind::Real; lower.len()];
        Self::new(intercept, coeffs, bases, lower, upper, kinds)
    }

    fn validate(&self) -> Result<()> {
        let v = self.lower.len();
        if v == 0 {
            return Err(Error::Validation("model needs at least one variable".into()));
        }
        if self.upper.len() != v || self.kinds.len() != v {
            return Err(Error::Validation(format!(
                "bound vectors disagree: lower {}, upper {}, kinds {}",
                v,
                self.upper.len(),
                self.kinds.len()
            )));
        }
        if self.coeffs.len() != self.bases.len() {
            return Err(Error::Validation(format!(
                "coefficient count {} does not match basis count {}",
                self.coeffs.len(),
                self.bases.len()
            )));
        }
        if !self.intercept.is_finite() || self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Validation("non-finite coefficient".into()));
        }
        for i in 0..v {
            let (l, u) = (self.lower[i], self.upper[i]);
            if !(l.is_finite() && u.is_finite()) || l >= u {
                return Err(Error::Validation(format!(
                    "bounds of variable {i} must satisfy l < u, got [{l}, {u}]"
                )));
            }
            if self.kinds[i] == VarKind::Integer && (l.fract() != 0.0 || u.fract() != 0.0) {
                return Err(Error::Validation(format!(
                    "integer variable {i} has non-integer bounds [{l}, {u}]"
                )));
            }
        }
        for (m, basis) in self.bases.iter().enumerate() {
            // re-run the basis checks: fields may come from a parsed document
            BasisFunction::new(basis.terms.clone())?;
            for t in basis.terms() {
                if t.var >= v {
                    return Err(Error::Validation(format!(
                        "basis {m} references variable {} of {v}",
                        t.var
                    )));
                }
                if !t.knot.is_finite() || t.knot < self.lower[t.var] || t.knot > self.upper[t.var]
                {
                    return Err(Error::Validation(format!(
                        "knot {} of basis {m} lies outside bounds [{}, {}] of variable {}",
                        t.knot, self.lower[t.var], self.upper[t.var], t.var
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of variables `V`.
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Number of basis functions `M`.
    pub fn num_bases(&self) -> usize {
        self.bases.len()
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn bases(&self) -> &[BasisFunction] {
        &self.bases
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn kinds(&self) -> &[VarKind] {
        &self.kinds
    }

    /// `(coefficient, basis)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (f64, &BasisFunction)> {
        self.coeffs.iter().copied().zip(self.bases.iter())
    }

    /// Total number of hinges, `sum_m K_m`.
    pub fn num_hinges(&self) -> usize {
        self.bases.iter().map(|b| b.order()).sum()
    }

    /// Evaluates the model. Defined everywhere, not just inside the box.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let mut f = self.intercept;
        for (a, b) in self.coeffs.iter().zip(&self.bases) {
            f += a * b.eval(x);
        }
        f
    }

    /// Length-checked evaluation.
    pub fn try_eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Structural(format!(
                "point has length {}, model has {} variables",
                x.len(),
                self.dim()
            )));
        }
        Ok(self.eval(x))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (l, u))| *xi >= *l && *xi <= *u)
    }

    /// The same model with a different box. Knots must stay inside it.
    pub fn with_bounds(&self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::new(
            self.intercept,
            self.coeffs.clone(),
            self.bases.clone(),
            lower,
            upper,
            self.kinds.clone(),
        )
    }

    pub fn with_kinds(&self, kinds: Vec<VarKind>) -> Result<Self> {
        Self::new(
            self.intercept,
            self.coeffs.clone(),
            self.bases.clone(),
            self.lower.clone(),
            self.upper.clone(),
            kinds,
        )
    }

    /// Knots on each variable, sorted and deduplicated.
    pub fn knots_by_var(&self) -> Vec<Vec<f64>> {
        let mut knots = vec![Vec::new(); self.dim()];
        for b in &self.bases {
            for t in b.terms() {
                knots[t.var].push(t.knot);
            }
        }
        for k in &mut knots {
            k.sort_by(f64::total_cmp);
            k.dedup();
        }
        knots
    }
}

/// Evaluates `model` at `x`, checking the dimension.
pub fn eval_model(model: &TitlMarsModel, x: &[f64]) -> Result<f64> {
    model.try_eval(x)
}

/// Per-variable breakpoints `{l_v} ∪ knots ∪ {u_v}`, strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotGrid {
    points: Vec<Vec<f64>>,
}

impl KnotGrid {
    pub fn new(model: &TitlMarsModel) -> Self {
        let knots = model.knots_by_var();
        let points = knots
            .into_iter()
            .enumerate()
            .map(|(v, k)| {
                let mut p = Vec::with_capacity(k.len() + 2);
                p.push(model.lower[v]);
                p.extend(k);
                p.push(model.upper[v]);
                p.dedup();
                p
            })
            .collect();
        KnotGrid { points }
    }

    /// Candidate coordinates for exhaustive search: the breakpoints for real
    /// variables; for integer variables the integers next to every breakpoint.
    pub fn candidates(model: &TitlMarsModel) -> Self {
        let mut grid = Self::new(model);
        for (v, pts) in grid.points.iter_mut().enumerate() {
            if model.kinds[v] == VarKind::Integer {
                let (l, u) = (model.lower[v], model.upper[v]);
                let mut ints: Vec<f64> = pts
                    .iter()
                    .flat_map(|t| [t.floor(), t.ceil()])
                    .filter(|z| *z >= l && *z <= u)
                    .collect();
                ints.sort_by(f64::total_cmp);
                ints.dedup();
                *pts = ints;
            }
        }
        grid
    }

    pub fn var(&self, v: usize) -> &[f64] {
        &self.points[v]
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    /// Number of grid vertices, saturating.
    pub fn vertex_count(&self) -> u128 {
        self.points
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128))
    }

    /// Index of the cell `[p[i], p[i+1]]` that contains `x`, clamped to the grid.
    pub fn cell_of(&self, v: usize, x: f64) -> usize {
        let p = &self.points[v];
        if p.len() < 2 {
            return 0;
        }
        let i = p.partition_point(|t| *t <= x);
        i.saturating_sub(1).min(p.len() - 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: i64, v: usize, k: f64) -> TruncatedTerm {
        TruncatedTerm::new(Sign::from_int(s).unwrap(), v, k)
    }

    #[test]
    fn term_values() {
        assert_eq!(eval_term(&t(1, 0, 3.0), &[5.0]).unwrap(), 2.0);
        assert_eq!(eval_term(&t(1, 0, 3.0), &[1.0]).unwrap(), 0.0);
        assert_eq!(eval_term(&t(-1, 0, 3.0), &[1.0]).unwrap(), 2.0);
        assert!(matches!(
            eval_term(&t(1, 2, 0.0), &[1.0]),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn basis_values() {
        let single = BasisFunction::single(t(1, 0, 3.0));
        assert_eq!(eval_basis(&single, &[5.0]).unwrap(), 2.0);
        let both = BasisFunction::pair(t(1, 0, 3.0), t(1, 1, 1.0)).unwrap();
        assert_eq!(eval_basis(&both, &[5.0, 4.0]).unwrap(), 6.0);
        let cut = BasisFunction::pair(t(1, 0, 3.0), t(-1, 1, 1.0)).unwrap();
        assert_eq!(eval_basis(&cut, &[5.0, 4.0]).unwrap(), 0.0);
    }

    #[test]
    fn basis_rejects_bad_orders() {
        let err = BasisFunction::new(vec![t(1, 0, 0.0), t(1, 1, 0.0), t(1, 2, 0.0)]).unwrap_err();
        assert!(err.to_string().contains("interaction order"));
        assert!(BasisFunction::new(vec![]).is_err());
        let err = BasisFunction::pair(t(1, 0, 0.0), t(-1, 0, 1.0)).unwrap_err();
        assert!(err.to_string().contains("distinct"));
    }

    #[test]
    fn model_values() {
        let m = TitlMarsModel::real(7.0, vec![], vec![], vec![0.0], vec![1.0]).unwrap();
        assert_eq!(m.eval(&[0.3]), 7.0);

        let m = TitlMarsModel::real(
            1.0,
            vec![2.0],
            vec![BasisFunction::single(t(1, 0, 3.0))],
            vec![0.0],
            vec![10.0],
        )
        .unwrap();
        assert_eq!(eval_model(&m, &[5.0]).unwrap(), 5.0);
        // outside the box is still defined
        assert_eq!(m.eval(&[20.0]), 35.0);

        let m = TitlMarsModel::real(
            0.0,
            vec![1.0],
            vec![BasisFunction::pair(t(1, 0, 0.0), t(1, 1, 0.0)).unwrap()],
            vec![-5.0, -5.0],
            vec![5.0, 5.0],
        )
        .unwrap();
        assert_eq!(m.eval(&[2.0, 3.0]), 6.0);
        assert!(m.try_eval(&[1.0]).is_err());
    }

    #[test]
    fn model_invariants() {
        let b = BasisFunction::single(t(1, 0, 3.0));
        let err = TitlMarsModel::real(0.0, vec![1.0, 2.0], vec![b.clone()], vec![0.0], vec![5.0])
            .unwrap_err();
        assert!(err.to_string().contains("does not match"));
        let err = TitlMarsModel::real(0.0, vec![1.0], vec![b.clone()], vec![0.0], vec![2.0])
            .unwrap_err();
        assert!(err.to_string().contains("outside bounds"));
        assert!(TitlMarsModel::real(0.0, vec![], vec![], vec![1.0], vec![1.0]).is_err());
        assert!(TitlMarsModel::new(
            0.0,
            vec![],
            vec![],
            vec![0.5],
            vec![3.0],
            vec![VarKind::Integer]
        )
        .is_err());
        let b = BasisFunction::single(t(1, 3, 0.5));
        assert!(TitlMarsModel::real(0.0, vec![1.0], vec![b], vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn knot_grid() {
        let m = TitlMarsModel::new(
            0.0,
            vec![1.0, 1.0, 1.0],
            vec![
                BasisFunction::single(t(1, 0, 2.5)),
                BasisFunction::single(t(-1, 0, 2.5)),
                BasisFunction::pair(t(1, 0, 0.0), t(1, 1, 1.5)).unwrap(),
            ],
            vec![0.0, 0.0],
            vec![4.0, 3.0],
            vec![VarKind::Real, VarKind::Integer],
        )
        .unwrap();
        let g = KnotGrid::new(&m);
        assert_eq!(g.var(0), &[0.0, 2.5, 4.0]);
        assert_eq!(g.var(1), &[0.0, 1.5, 3.0]);
        let c = KnotGrid::candidates(&m);
        assert_eq!(c.var(1), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(c.vertex_count(), 12);
        assert_eq!(g.cell_of(0, 1.0), 0);
        assert_eq!(g.cell_of(0, 2.5), 1);
        assert_eq!(g.cell_of(0, 4.0), 1);
    }
}
