//! Plain-text model documents.
//!
//! ```text
//! titl-mars v1
//! vars V
//! bound <v> <l> <u> <real|int>
//! intercept <a0>
//! basis <a_m> <K_m> [<s> <v> <t>]...
//! ```
//!
//! `#` starts a comment. Reals are written with 17 significant digits so a
//! document round-trips bit-for-bit.

use std::fmt::Write as _;

use super::{BasisFunction, Sign, TitlMarsModel, TruncatedTerm, VarKind};
use crate::error::{Error, Result};

const HEADER: &str = "titl-mars v1";

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn serialize_model(model: &TitlMarsModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "vars {}", model.dim());
    for v in 0..model.dim() {
        let kind = match model.kinds()[v] {
            VarKind::Real => "real",
            VarKind::Integer => "int",
        };
        let _ = writeln!(
            out,
            "bound {v} {} {} {kind}",
            real(model.lower()[v]),
            real(model.upper()[v])
        );
    }
    let _ = writeln!(out, "intercept {}", real(model.intercept()));
    for (a, basis) in model.terms() {
        let _ = write!(out, "basis {} {}", real(a), basis.order());
        for t in basis.terms() {
            let _ = write!(out, " {} {} {}", t.sign.as_int(), t.var, real(t.knot));
        }
        out.push('\n');
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let content = raw.split('#').next().unwrap_or("").trim();
            self.last = i + 1;
            if !content.is_empty() {
                return Some((i + 1, content.split_whitespace().collect()));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        let last = self.last;
        self.next().ok_or_else(|| Error::Parse {
            line: last + 1,
            message: format!("unexpected end of document, expected {what}"),
        })
    }
}

fn parse_f64(tok: &str, line: usize, field: &str) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("field `{field}`: cannot parse `{tok}` as a real"),
    })
}

fn parse_usize(tok: &str, line: usize, field: &str) -> Result<usize> {
    tok.parse::<usize>().map_err(|_| Error::Parse {
        line,
        message: format!("field `{field}`: cannot parse `{tok}` as a non-negative integer"),
    })
}

fn keyword(fields: &[&str], line: usize, kw: &str, arity: usize) -> Result<()> {
    if fields[0] != kw {
        return Err(Error::Parse {
            line,
            message: format!("expected `{kw}`, found `{}`", fields[0]),
        });
    }
    if fields.len() != arity + 1 {
        return Err(Error::Parse {
            line,
            message: format!("`{kw}` takes {arity} fields, found {}", fields.len() - 1),
        });
    }
    Ok(())
}

pub fn parse_model(text: &str) -> Result<TitlMarsModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };

    let (ln, header) = lines.expect("header")?;
    if header.join(" ") != HEADER {
        return Err(Error::Parse {
            line: ln,
            message: format!("expected header `{HEADER}`"),
        });
    }

    let (ln, f) = lines.expect("`vars`")?;
    keyword(&f, ln, "vars", 1)?;
    let dim = parse_usize(f[1], ln, "vars")?;

    let mut lower = vec![f64::NAN; dim];
    let mut upper = vec![f64::NAN; dim];
    let mut kinds = vec![VarKind::Real; dim];
    let mut seen = vec![false; dim];
    for _ in 0..dim {
        let (ln, f) = lines.expect("`bound`")?;
        keyword(&f, ln, "bound", 4)?;
        let v = parse_usize(f[1], ln, "bound.var")?;
        if v >= dim {
            return Err(Error::Parse {
                line: ln,
                message: format!("bound for variable {v} but vars is {dim}"),
            });
        }
        if seen[v] {
            return Err(Error::Parse {
                line: ln,
                message: format!("duplicate bound for variable {v}"),
            });
        }
        seen[v] = true;
        lower[v] = parse_f64(f[2], ln, "bound.lower")?;
        upper[v] = parse_f64(f[3], ln, "bound.upper")?;
        kinds[v] = match f[4] {
            "real" => VarKind::Real,
            "int" => VarKind::Integer,
            other => {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("field `bound.kind`: expected `real` or `int`, found `{other}`"),
                })
            }
        };
    }

    let (ln, f) = lines.expect("`intercept`")?;
    keyword(&f, ln, "intercept", 1)?;
    let intercept = parse_f64(f[1], ln, "intercept")?;

    let mut coeffs = Vec::new();
    let mut bases = Vec::new();
    while let Some((ln, f)) = lines.next() {
        if f[0] != "basis" {
            return Err(Error::Parse {
                line: ln,
                message: format!("expected `basis`, found `{}`", f[0]),
            });
        }
        if f.len() < 3 {
            return Err(Error::Parse {
                line: ln,
                message: "`basis` needs a coefficient and a term count".into(),
            });
        }
        let a = parse_f64(f[1], ln, "basis.coeff")?;
        let k = parse_usize(f[2], ln, "basis.order")?;
        if f.len() != 3 + 3 * k {
            return Err(Error::Parse {
                line: ln,
                message: format!(
                    "basis declares {k} terms but has {} trailing fields",
                    f.len() - 3
                ),
            });
        }
        let mut terms = Vec::with_capacity(k);
        for j in 0..k {
            let s: i64 = f[3 + 3 * j].parse().map_err(|_| Error::Parse {
                line: ln,
                message: format!("field `term.sign`: cannot parse `{}`", f[3 + 3 * j]),
            })?;
            let sign = Sign::from_int(s).ok_or_else(|| {
                Error::Validation(format!("line {ln}: term sign must be +1 or -1, found {s}"))
            })?;
            let var = parse_usize(f[4 + 3 * j], ln, "term.var")?;
            let knot = parse_f64(f[5 + 3 * j], ln, "term.knot")?;
            terms.push(TruncatedTerm::new(sign, var, knot));
        }
        let basis = BasisFunction::new(terms).map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("line {ln}: {msg}")),
            other => other,
        })?;
        coeffs.push(a);
        bases.push(basis);
    }

    TitlMarsModel::new(intercept, coeffs, bases, lower, upper, kinds)
}
