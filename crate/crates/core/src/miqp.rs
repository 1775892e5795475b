//! Big-M mixed-integer quadratic reformulation of a TITL-MARS model.
//!
//! Every hinge `eta = max(s (x_v - t), 0)` gets a continuous slot `eta` and a
//! binary slot `y` tied together by
//!
//! ```text
//! s (x_v - t) <= eta <= s (x_v - t) + M (1 - y)
//! 0 <= eta <= M y
//! ```
//!
//! which forces `eta` to the hinge value for either choice of `y` that is
//! consistent with the sign of `s (x_v - t)`. Univariate bases become linear
//! objective entries on their `eta`; two-way bases become one symmetric entry
//! pair in `Q`, so `(1/2) z'Qz` contributes `a_m eta_1 eta_2`.
//!
//! Slot layout: `z = (1, x_0 .. x_{V-1}, eta_{1,1}, y_{1,1}, [eta_{2,1}, y_{2,1}], ...)`,
//! so `D = 1 + V + 2 * sum_m K_m`.

use std::fmt::Write as _;

use crate::lp::{LinearProgram, Relation, Row};
use crate::model::{Sign, TitlMarsModel, VarKind};
use crate::solution::Sense;

const BIG_M_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    Continuous,
    Integer,
    Binary,
}

/// Slots and data belonging to one hinge of one basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HingeSlots {
    pub basis: usize,
    /// position of the hinge inside its basis (0 or 1)
    pub k: usize,
    pub var: usize,
    pub sign: Sign,
    pub knot: f64,
    pub big_m: f64,
    pub eta: usize,
    pub y: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexMap {
    pub constant: usize,
    pub x: Vec<usize>,
    pub hinges: Vec<HingeSlots>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiqpProblem {
    pub dim: usize,
    /// symmetric, both `(i, j)` and `(j, i)` stored
    pub q: Vec<(usize, usize, f64)>,
    pub c: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub kinds: Vec<SlotKind>,
    pub index: IndexMap,
    pub sense: Sense,
}

/// Per-hinge big-M, `max(u_v - t, t - l_v)` floored at `1e-9`, in basis order.
pub fn compute_big_m(model: &TitlMarsModel) -> Vec<Vec<f64>> {
    model
        .bases()
        .iter()
        .map(|b| {
            b.terms()
                .iter()
                .map(|t| {
                    let (l, u) = (model.lower()[t.var], model.upper()[t.var]);
                    (u - t.knot).max(t.knot - l).max(BIG_M_FLOOR)
                })
                .collect()
        })
        .collect()
}

/// Builds the MIQP whose minimum equals the model's optimum in `sense`.
/// Maximization is encoded by negating `Q` and `c`.
pub fn build_miqp(model: &TitlMarsModel, sense: Sense) -> MiqpProblem {
    let nv = model.dim();
    let dim = 1 + nv + 2 * model.num_hinges();
    let sign = sense.to_min();
    let big_m = compute_big_m(model);

    let mut c = vec![0.0; dim];
    let mut q = Vec::new();
    let mut rows = Vec::new();
    let mut lower = vec![0.0; dim];
    let mut upper = vec![0.0; dim];
    let mut kinds = vec![SlotKind::Continuous; dim];

    lower[0] = 1.0;
    upper[0] = 1.0;
    c[0] = sign * model.intercept();
    let x: Vec<usize> = (0..nv).map(|v| 1 + v).collect();
    for v in 0..nv {
        lower[x[v]] = model.lower()[v];
        upper[x[v]] = model.upper()[v];
        if model.kinds()[v] == VarKind::Integer {
            kinds[x[v]] = SlotKind::Integer;
        }
    }

    let mut hinges = Vec::with_capacity(model.num_hinges());
    let mut next = 1 + nv;
    for (m, (a, basis)) in model.terms().enumerate() {
        let first = hinges.len();
        for (k, t) in basis.terms().iter().enumerate() {
            let h = HingeSlots {
                basis: m,
                k,
                var: t.var,
                sign: t.sign,
                knot: t.knot,
                big_m: big_m[m][k],
                eta: next,
                y: next + 1,
            };
            next += 2;
            lower[h.eta] = 0.0;
            upper[h.eta] = h.big_m;
            lower[h.y] = 0.0;
            upper[h.y] = 1.0;
            kinds[h.y] = SlotKind::Binary;

            let xs = x[h.var];
            let big = h.big_m;
            let (s, tk) = (t.sign.value(), t.knot);
            // s x - eta - M y >= s t - M
            rows.push(Row {
                coeffs: vec![(xs, s), (h.eta, -1.0), (h.y, -big)],
                relation: Relation::Ge,
                rhs: s * tk - big,
            });
            // -s x + eta >= -s t
            rows.push(Row {
                coeffs: vec![(xs, -s), (h.eta, 1.0)],
                relation: Relation::Ge,
                rhs: -s * tk,
            });
            // -eta + M y >= 0
            rows.push(Row {
                coeffs: vec![(h.eta, -1.0), (h.y, big)],
                relation: Relation::Ge,
                rhs: 0.0,
            });
            hinges.push(h);
        }
        match basis.order() {
            1 => c[hinges[first].eta] = sign * a,
            _ => {
                let (e1, e2) = (hinges[first].eta, hinges[first + 1].eta);
                q.push((e1, e2, sign * a));
                q.push((e2, e1, sign * a));
            }
        }
    }

    MiqpProblem {
        dim,
        q,
        c,
        rows,
        lower,
        upper,
        kinds,
        index: IndexMap {
            constant: 0,
            x,
            hinges,
        },
        sense,
    }
}

impl MiqpProblem {
    /// `(1/2) z'Qz + c'z` exactly as stored (negated for maximization).
    pub fn objective_at(&self, z: &[f64]) -> f64 {
        assert_eq!(z.len(), self.dim, "z has wrong length");
        let quad: f64 = self.q.iter().map(|&(i, j, v)| v * z[i] * z[j]).sum();
        let lin: f64 = self.c.iter().zip(z).map(|(c, v)| c * v).sum();
        0.5 * quad + lin
    }

    /// Objective in the model's own sense (undoes the maximization negation).
    pub fn model_value_at(&self, z: &[f64]) -> f64 {
        self.sense.to_min() * self.objective_at(z)
    }

    /// Canonical lift of a model point: hinge values and their indicators.
    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        z[self.index.constant] = 1.0;
        for (v, &slot) in self.index.x.iter().enumerate() {
            z[slot] = x[v];
        }
        for h in &self.index.hinges {
            let u = h.sign.value() * (x[h.var] - h.knot);
            z[h.eta] = u.max(0.0);
            z[h.y] = if u >= 0.0 { 1.0 } else { 0.0 };
        }
        z
    }

    /// Largest violation of any row, bound or integrality requirement at `z`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.dim {
            worst = worst
                .max(self.lower[j] - z[j])
                .max(z[j] - self.upper[j]);
            if self.kinds[j] != SlotKind::Continuous {
                worst = worst.max((z[j] - z[j].round()).abs());
            }
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|(j, a)| a * z[*j]).sum();
            let v = match row.relation {
                Relation::Ge => row.rhs - lhs,
                Relation::Le => lhs - row.rhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    /// The rows and bounds of the problem as an LP with a caller-chosen
    /// linear objective (integrality and `Q` dropped).
    pub fn linear_relaxation(&self, objective: Vec<f64>) -> LinearProgram {
        assert_eq!(objective.len(), self.dim);
        LinearProgram {
            objective,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            rows: self.rows.clone(),
        }
    }

    /// Human-readable dump of slots, objective and rows.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "miqp sense {} dim {}", self.sense, self.dim);
        let _ = writeln!(s, "slot 0 const");
        for (v, slot) in self.index.x.iter().enumerate() {
            let _ = writeln!(s, "slot {slot} x{v}");
        }
        for h in &self.index.hinges {
            let _ = writeln!(
                s,
                "slot {} eta[{},{}] sign {} var {} knot {} M {}",
                h.eta,
                h.k,
                h.basis,
                h.sign.as_int(),
                h.var,
                h.knot,
                h.big_m
            );
            let _ = writeln!(s, "slot {} y[{},{}]", h.y, h.k, h.basis);
        }
        for j in 0..self.dim {
            let kind = match self.kinds[j] {
                SlotKind::Continuous => "cont",
                SlotKind::Integer => "int",
                SlotKind::Binary => "bin",
            };
            let _ = writeln!(s, "bound {j} {} {} {kind}", self.lower[j], self.upper[j]);
        }
        for (j, c) in self.c.iter().enumerate() {
            if *c != 0.0 {
                let _ = writeln!(s, "c {j} {c}");
            }
        }
        for (i, j, v) in &self.q {
            let _ = writeln!(s, "q {i} {j} {v}");
        }
        for row in &self.rows {
            let lhs: Vec<String> = row.coeffs.iter().map(|(j, a)| format!("{a}*z{j}")).collect();
            let rel = match row.relation {
                Relation::Ge => ">=",
                Relation::Le => "<=",
                Relation::Eq => "=",
            };
            let _ = writeln!(s, "row {} {rel} {}", lhs.join(" + "), row.rhs);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BasisFunction, TruncatedTerm};

    fn hinge(s: Sign, v: usize, t: f64) -> TruncatedTerm {
        TruncatedTerm::new(s, v, t)
    }

    #[test]
    fn big_m_values() {
        let m = TitlMarsModel::real(
            0.0,
            vec![1.0, 1.0, 1.0],
            vec![
                BasisFunction::single(hinge(Sign::Plus, 0, 3.0)),
                BasisFunction::single(hinge(Sign::Minus, 1, 0.0)),
                BasisFunction::single(hinge(Sign::Plus, 0, 10.0)),
            ],
            vec![0.0, -2.0],
            vec![10.0, 2.0],
        )
        .unwrap();
        assert_eq!(compute_big_m(&m), vec![vec![7.0], vec![2.0], vec![10.0]]);
    }

    #[test]
    fn intercept_only() {
        let m = TitlMarsModel::real(5.0, vec![], vec![], vec![0.0], vec![1.0]).unwrap();
        let p = build_miqp(&m, Sense::Min);
        // the constant slot plus the x slot; no hinge rows
        assert_eq!(p.dim, 2);
        assert_eq!(p.c, vec![5.0, 0.0]);
        assert!(p.rows.is_empty());
        assert_eq!((p.lower[0], p.upper[0]), (1.0, 1.0));
    }

    #[test]
    fn single_hinge_rows_match_the_construction() {
        let m = TitlMarsModel::real(
            0.0,
            vec![2.0],
            vec![BasisFunction::single(hinge(Sign::Plus, 0, 3.0))],
            vec![0.0],
            vec![10.0],
        )
        .unwrap();
        let p = build_miqp(&m, Sense::Min);
        assert_eq!(p.dim, 4);
        let h = p.index.hinges[0];
        assert_eq!((h.eta, h.y), (2, 3));
        assert_eq!(p.c[h.eta], 2.0);
        assert_eq!(p.kinds[h.y], SlotKind::Binary);
        let want = vec![
            Row {
                coeffs: vec![(1, 1.0), (2, -1.0), (3, -7.0)],
                relation: Relation::Ge,
                rhs: -4.0,
            },
            Row {
                coeffs: vec![(1, -1.0), (2, 1.0)],
                relation: Relation::Ge,
                rhs: -3.0,
            },
            Row {
                coeffs: vec![(2, -1.0), (3, 7.0)],
                relation: Relation::Ge,
                rhs: 0.0,
            },
        ];
        assert_eq!(p.rows, want);
    }

    #[test]
    fn two_way_basis_goes_to_q() {
        let m = TitlMarsModel::real(
            1.0,
            vec![3.0],
            vec![BasisFunction::pair(hinge(Sign::Plus, 0, 0.0), hinge(Sign::Minus, 1, 1.0)).unwrap()],
            vec![-1.0, -1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let p = build_miqp(&m, Sense::Min);
        assert_eq!(p.dim, 1 + 2 + 4);
        assert_eq!(p.q, vec![(3, 5, 3.0), (5, 3, 3.0)]);
        let mut z = vec![0.0; p.dim];
        z[0] = 1.0;
        z[3] = 2.0;
        z[5] = 4.0;
        assert_eq!(p.objective_at(&z), 1.0 + 24.0);
        let pmax = build_miqp(&m, Sense::Max);
        assert_eq!(pmax.objective_at(&z), -25.0);
        assert_eq!(pmax.model_value_at(&z), 25.0);
    }

    #[test]
    fn embedding_is_feasible_and_exact() {
        let m = TitlMarsModel::real(
            -0.5,
            vec![2.0, -1.5],
            vec![
                BasisFunction::single(hinge(Sign::Minus, 1, 0.25)),
                BasisFunction::pair(hinge(Sign::Plus, 0, 0.5), hinge(Sign::Plus, 1, -0.5)).unwrap(),
            ],
            vec![0.0, -1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let p = build_miqp(&m, Sense::Min);
        for x in [[0.0, -1.0], [0.5, 0.25], [1.0, 1.0], [0.7, -0.2]] {
            let z = p.embed(&x);
            assert!(p.max_violation(&z) <= 1e-12);
            assert!((p.objective_at(&z) - m.eval(&x)).abs() < 1e-12);
        }
        assert!(p.to_text().contains("eta[1,1]"));
    }
}
