use rand::Rng;

use super::{BasisFunction, Sign, TitlMarsModel, TruncatedTerm, VarKind};

/// Shape of randomly generated models.
#[derive(Clone, Debug)]
pub struct RandomModelSpec {
    pub dim: usize,
    pub bases: usize,
    /// coefficients are uniform in `[-coeff, coeff]`
    pub coeff: f64,
    /// probability that a basis is a two-way product (needs `dim >= 2`)
    pub pair_prob: f64,
    /// probability that a variable is integer
    pub integer_prob: f64,
    /// if set, knots are drawn from this many equally spaced interior points
    pub knot_lattice: Option<usize>,
}

impl Default for RandomModelSpec {
    fn default() -> Self {
        RandomModelSpec {
            dim: 2,
            bases: 10,
            coeff: 10.0,
            pair_prob: 0.5,
            integer_prob: 0.0,
            knot_lattice: None,
        }
    }
}

/// Draws a model with random box, knots uniform in the box and uniform coefficients.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, spec: &RandomModelSpec) -> TitlMarsModel {
    let dim = spec.dim.max(1);
    let mut lower = Vec::with_capacity(dim);
    let mut upper = Vec::with_capacity(dim);
    let mut kinds = Vec::with_capacity(dim);
    for _ in 0..dim {
        if rng.random_bool(spec.integer_prob) {
            let l = rng.random_range(-6i32..=0) as f64;
            lower.push(l);
            upper.push(l + rng.random_range(1i32..=8) as f64);
            kinds.push(VarKind::Integer);
        } else {
            let l: f64 = rng.random_range(-5.0..0.0);
            lower.push(l);
            upper.push(l + rng.random_range(0.5..5.0));
            kinds.push(VarKind::Real);
        }
    }
    let knot = |rng: &mut R, v: usize| -> f64 {
        let (l, u) = (lower[v], upper[v]);
        match spec.knot_lattice {
            Some(n) => {
                let i = rng.random_range(1..=n.max(1));
                l + (u - l) * i as f64 / (n + 1) as f64
            }
            None => rng.random_range(l..=u),
        }
    };
    let sign = |rng: &mut R| if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus };
    let mut coeffs = Vec::with_capacity(spec.bases);
    let mut bases = Vec::with_capacity(spec.bases);
    for _ in 0..spec.bases {
        let v1 = rng.random_range(0..dim);
        let t1 = TruncatedTerm::new(sign(rng), v1, knot(rng, v1));
        let basis = if dim >= 2 && rng.random_bool(spec.pair_prob) {
            let mut v2 = rng.random_range(0..dim - 1);
            if v2 >= v1 {
                v2 += 1;
            }
            let t2 = TruncatedTerm::new(sign(rng), v2, knot(rng, v2));
            BasisFunction::pair(t1, t2).expect("distinct variables")
        } else {
            BasisFunction::single(t1)
        };
        coeffs.push(rng.random_range(-spec.coeff..=spec.coeff));
        bases.push(basis);
    }
    let intercept = rng.random_range(-spec.coeff..=spec.coeff);
    TitlMarsModel::new(intercept, coeffs, bases, lower, upper, kinds)
        .expect("random model satisfies invariants")
}
