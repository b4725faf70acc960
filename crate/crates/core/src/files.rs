//! Text formats for operators and substitutions.
//!
//! Operator file:
//!
//! ```text
//! # comment
//! param a = 1/2
//! param b
//! kmax 30
//! u_1 Dx^1 sym
//! -(a + u^2) Dx^3
//! ```
//!
//! A `sym` term `c Dx^k sym` stands for `c∘D^k + D^k∘c`; a plain term for
//! `c∘D^k`. `Dx` alone is `Dx^1` and a bare expression is `Dx^0`.
//!
//! Substitution file, in the coordinates `y, v, v_k`:
//!
//! ```text
//! x = y
//! u = I*v
//! ```

use std::collections::BTreeSet;
use std::fmt;

use rustc_hash::FxHashMap;

use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use crate::expr::{parse_with, Atom, Dialect, Expr, ParseContext, RatFn};
use crate::transform::Substitution;

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: Expr,
    pub power: usize,
    pub symmetrized: bool,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct OperatorFile {
    pub params: Vec<(String, Option<Expr>)>,
    pub kmax: Option<usize>,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubstitutionFile {
    pub params: Vec<(String, Option<Expr>)>,
    pub phi: Expr,
    pub psi: Expr,
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim_end()
}

/// Column of `part` inside `line`, 0-based.
fn offset_in(line: &str, part: &str) -> usize {
    (part.as_ptr() as usize).saturating_sub(line.as_ptr() as usize)
}

fn shift_col(e: Error, line_no: usize, offset: usize) -> Error {
    match e {
        Error::Parse { col, msg, .. } => Error::Parse { line: line_no, col: col + offset, msg },
        e => e,
    }
}

fn parse_expr_at(src: &str, line: &str, line_no: usize, ctx: &ParseContext) -> Result<Expr> {
    let mut ctx = ctx.clone();
    ctx.line = line_no;
    parse_with(src, &ctx).map_err(|e| shift_col(e, line_no, offset_in(line, src)))
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

const RESERVED: &[&str] = &["x", "u", "y", "v", "I", "sin", "cos", "exp", "ln", "sqrt", "Dx", "sym", "param", "kmax"];

/// Parses `param name [= value]`; `rest` follows the keyword.
fn parse_param(rest: &str, line: &str, line_no: usize) -> Result<(String, Option<Expr>)> {
    let (name, value) = match rest.split_once('=') {
        Some((n, v)) => (n.trim(), Some(v.trim())),
        None => (rest.trim(), None),
    };
    let col = offset_in(line, name) + 1;
    let reserved = RESERVED.contains(&name)
        || (name.starts_with('u') || name.starts_with('v')) && name[1..].trim_start_matches('_').chars().all(|c| c.is_ascii_digit());
    if !is_ident(name) || reserved {
        return Err(Error::parse(line_no, col, format!("invalid parameter name '{name}'")));
    }
    let value = match value {
        Some(v) if v.is_empty() => return Err(Error::parse(line_no, col, "missing parameter value")),
        Some(v) => Some(parse_expr_at(v, line, line_no, &ParseContext::new())?),
        None => None,
    };
    Ok((name.to_string(), value))
}

fn param_context(params: &[(String, Option<Expr>)], dialect: Dialect) -> ParseContext {
    ParseContext::with_params(params.iter().map(|(n, _)| n.clone())).dialect(dialect)
}

fn param_values(params: &[(String, Option<Expr>)]) -> Result<FxHashMap<crate::expr::VarId, RatFn>> {
    let mut map = FxHashMap::default();
    for (name, value) in params {
        if let Some(v) = value {
            map.insert(Atom::param(name).id()?, v.to_ratfn()?);
        }
    }
    Ok(map)
}

fn bind(e: &Expr, values: &FxHashMap<crate::expr::VarId, RatFn>) -> Result<RatFn> {
    let r = e.to_ratfn()?;
    if values.is_empty() {
        Ok(r)
    } else {
        r.substitute(values)
    }
}

/// Splits `… Dx^k [sym]` into the coefficient text, power and flag.
fn split_term(body: &str) -> std::result::Result<(&str, usize, bool), String> {
    let mut rest = body.trim_end();
    let mut symmetrized = false;
    if let Some(r) = rest.strip_suffix("sym") {
        if r.is_empty() || r.ends_with(char::is_whitespace) {
            rest = r.trim_end();
            symmetrized = true;
        }
    }
    let Some(pos) = rest.rfind("Dx") else {
        return Ok((rest, 0, symmetrized));
    };
    let tail = rest[pos + 2..].trim();
    let power = if tail.is_empty() {
        1
    } else {
        let digits = tail.strip_prefix('^').map(str::trim).ok_or_else(|| format!("expected '^' after Dx, found '{tail}'"))?;
        digits.parse::<usize>().map_err(|_| format!("invalid power '{digits}'"))?
    };
    Ok((rest[..pos].trim_end(), power, symmetrized))
}

impl OperatorFile {
    pub fn parse(src: &str) -> Result<OperatorFile> {
        let mut file = OperatorFile::default();
        let mut pending: Vec<(usize, &str, &str)> = Vec::new();
        for (i, raw) in src.lines().enumerate() {
            let line_no = i + 1;
            let line = strip_comment(raw);
            let trimmed = line.trim_start();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("param ") {
                let p = parse_param(rest, raw, line_no)?;
                if file.params.iter().any(|(n, _)| *n == p.0) {
                    return Err(Error::parse(line_no, 1, format!("parameter '{}' declared twice", p.0)));
                }
                file.params.push(p);
            } else if let Some(rest) = trimmed.strip_prefix("kmax ") {
                let k = rest.trim().parse::<usize>().map_err(|_| {
                    Error::parse(line_no, offset_in(raw, rest) + 1, "kmax expects a positive integer")
                })?;
                file.kmax = Some(k);
            } else {
                pending.push((line_no, raw, trimmed));
            }
        }
        let ctx = param_context(&file.params, Dialect::Jet);
        for (line_no, raw, body) in pending {
            let (coeff, power, symmetrized) =
                split_term(body).map_err(|m| Error::parse(line_no, offset_in(raw, body) + 1, m))?;
            if coeff.is_empty() {
                return Err(Error::parse(line_no, offset_in(raw, body) + 1, "missing coefficient"));
            }
            let coeff = parse_expr_at(coeff, raw, line_no, &ctx)?;
            file.terms.push(Term { coeff, power, symmetrized });
        }
        if file.terms.is_empty() {
            return Err(Error::parse(src.lines().count().max(1), 1, "operator file has no terms"));
        }
        Ok(file)
    }

    pub fn to_operator(&self) -> Result<DiffOp> {
        let values = param_values(&self.params)?;
        let mut op = DiffOp::zero();
        for t in &self.terms {
            let c = bind(&t.coeff, &values)?;
            if t.symmetrized {
                op = op.add(&DiffOp::from_symmetrized(&[(c, t.power)])?);
            } else {
                op = op.add(&DiffOp::from_terms(&[(c, t.power)]));
            }
        }
        Ok(op)
    }

    /// Plain terms of `op`, with every parameter declared.
    pub fn from_operator(op: &DiffOp) -> OperatorFile {
        let mut names = BTreeSet::new();
        for c in op.coeffs() {
            for id in c.all_vars() {
                if let Atom::Param(name) = Atom::from_id(id) {
                    names.insert(name.to_string());
                }
            }
        }
        OperatorFile {
            params: names.into_iter().map(|n| (n, None)).collect(),
            kmax: None,
            terms: op
                .to_terms()
                .into_iter()
                .map(|(coeff, power)| Term { coeff, power, symmetrized: false })
                .collect(),
        }
    }
}

fn write_params(f: &mut fmt::Formatter<'_>, params: &[(String, Option<Expr>)]) -> fmt::Result {
    for (name, value) in params {
        match value {
            Some(v) => writeln!(f, "param {name} = {v}")?,
            None => writeln!(f, "param {name}")?,
        }
    }
    Ok(())
}

impl fmt::Display for OperatorFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_params(f, &self.params)?;
        if let Some(k) = self.kmax {
            writeln!(f, "kmax {k}")?;
        }
        for t in &self.terms {
            write!(f, "{} Dx^{}", t.coeff, t.power)?;
            if t.symmetrized {
                write!(f, " sym")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn parse_operator(src: &str) -> Result<DiffOp> {
    OperatorFile::parse(src)?.to_operator()
}

pub fn print_operator(op: &DiffOp) -> String {
    OperatorFile::from_operator(op).to_string()
}

impl SubstitutionFile {
    pub fn parse(src: &str) -> Result<SubstitutionFile> {
        let mut params = Vec::new();
        let mut eqs: Vec<(usize, &str, &str, &str)> = Vec::new();
        for (i, raw) in src.lines().enumerate() {
            let line_no = i + 1;
            let line = strip_comment(raw);
            let trimmed = line.trim_start();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("param ") {
                params.push(parse_param(rest, raw, line_no)?);
                continue;
            }
            let Some((lhs, rhs)) = trimmed.split_once('=') else {
                return Err(Error::parse(line_no, offset_in(raw, trimmed) + 1, "expected 'x = …' or 'u = …'"));
            };
            eqs.push((line_no, raw, lhs.trim(), rhs.trim()));
        }
        let ctx = param_context(&params, Dialect::Substitution);
        let (mut phi, mut psi) = (None, None);
        for (line_no, raw, lhs, rhs) in eqs {
            let slot = match lhs {
                "x" => &mut phi,
                "u" => &mut psi,
                _ => return Err(Error::parse(line_no, offset_in(raw, lhs) + 1, format!("unknown left-hand side '{lhs}'"))),
            };
            if slot.is_some() {
                return Err(Error::parse(line_no, 1, format!("'{lhs}' given twice")));
            }
            if rhs.is_empty() {
                return Err(Error::parse(line_no, raw.len() + 1, "missing right-hand side"));
            }
            *slot = Some(parse_expr_at(rhs, raw, line_no, &ctx)?);
        }
        // an omitted line keeps the coordinate
        Ok(SubstitutionFile { params, phi: phi.unwrap_or(Expr::X), psi: psi.unwrap_or(Expr::Jet(0)) })
    }

    pub fn to_substitution(&self) -> Result<Substitution> {
        let values = param_values(&self.params)?;
        Substitution::new(bind(&self.phi, &values)?, bind(&self.psi, &values)?)
    }
}

/// Renders an expression in the coordinates `y, v, v_k`.
pub fn substitution_dialect(e: &Expr) -> String {
    // x, u, u_k are the only places the letters appear as atoms
    let s = e.to_string();
    let mut out = String::with_capacity(s.len());
    let bytes = s.as_bytes();
    for (i, ch) in s.char_indices() {
        let prev_alpha = i > 0 && (bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_');
        let next_alpha = bytes.get(i + 1).is_some_and(|b| b.is_ascii_alphabetic());
        match ch {
            'x' if !prev_alpha && !next_alpha => out.push('y'),
            'u' if !prev_alpha && !next_alpha => out.push('v'),
            _ => out.push(ch),
        }
    }
    out
}

impl fmt::Display for SubstitutionFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_params(f, &self.params)?;
        writeln!(f, "x = {}", substitution_dialect(&self.phi))?;
        writeln!(f, "u = {}", substitution_dialect(&self.psi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build, FamilySpec, Sign, UnitParams};
    use crate::expr::parse;

    fn rf(s: &str) -> RatFn {
        parse(s).unwrap().to_ratfn().unwrap()
    }

    #[test]
    fn symmetrized_and_plain_terms() {
        let op = parse_operator("u_1 Dx^1 sym\n# comment\n2 Dx^3\n").unwrap();
        let expected = DiffOp::from_symmetrized(&[(rf("u_1"), 1)]).unwrap().add(&DiffOp::dx_pow(3).scale(&crate::expr::Coeff::int(2)));
        assert_eq!(op, expected);
        assert_eq!(parse_operator("Dx").unwrap_err(), Error::parse(1, 1, "missing coefficient"));
        assert_eq!(parse_operator("u").unwrap(), DiffOp::mult(RatFn::u()));
        assert_eq!(parse_operator("1 Dx").unwrap(), DiffOp::dx());
    }

    #[test]
    fn parameters_declared_and_bound() {
        let op = parse_operator("param a = 1/2\na*u Dx^1 sym").unwrap();
        assert_eq!(op, DiffOp::from_symmetrized(&[(rf("u/2"), 1)]).unwrap());
        let op = parse_operator("param a\na Dx^3").unwrap();
        assert_eq!(op.coeff(3), RatFn::param("a"));
        assert!(matches!(parse_operator("a Dx^3"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_operator("param u_2\n1 Dx").is_err());
    }

    #[test]
    fn error_positions() {
        match parse_operator("1 Dx^1\nu + * 2 Dx^3") {
            Err(Error::Parse { line, col, .. }) => {
                assert_eq!(line, 2);
                assert!(col >= 3, "col {col}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_operator("u Dx^q"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_operator("kmax -3\nu Dx"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_operator("# nothing\n").is_err());
    }

    #[test]
    fn kmax_header() {
        let f = OperatorFile::parse("kmax 30\nu Dx").unwrap();
        assert_eq!(f.kmax, Some(30));
    }

    #[test]
    fn catalog_round_trip() {
        let specs = [
            FamilySpec::fifth_inverse_quartic(Sign::Plus, rf("1/2"), rf("-1")),
            FamilySpec::fifth_inverse_quartic(Sign::Minus, rf("sin(u)"), rf("sin(u) + u")),
            FamilySpec::fifth_unit(Sign::Plus, UnitParams::Explicit { alpha: rf("x"), beta: rf("0"), gamma: rf("0") }),
            FamilySpec::third_conjugated(Sign::Minus, rf("u^2")),
            FamilySpec::third_linear(Sign::Plus, rf("3")),
            FamilySpec::third_constant(Sign::Plus, RatFn::param("A")),
        ];
        for spec in specs {
            let op = build(&spec).unwrap();
            let text = print_operator(&op);
            assert_eq!(parse_operator(&text).unwrap(), op, "{text}");
        }
    }

    #[test]
    fn substitution_files() {
        let f = SubstitutionFile::parse("x = y\nu = I*v").unwrap();
        let s = f.to_substitution().unwrap();
        assert_eq!(s.psi(), &RatFn::imag_unit().mul(&RatFn::u()));
        let text = f.to_string();
        assert_eq!(SubstitutionFile::parse(&text).unwrap(), f);
        let f = SubstitutionFile::parse("param c = 2\nu = c*v_1 + y").unwrap();
        assert_eq!(f.phi, Expr::X);
        assert_eq!(f.to_substitution().unwrap().psi(), &rf("2*u_1 + x"));
        assert!(SubstitutionFile::parse("w = v").is_err());
        assert!(SubstitutionFile::parse("u = u").is_err());
    }

    #[test]
    fn dialect_rendering() {
        assert_eq!(substitution_dialect(&parse("x + u_1*exp(u)").unwrap()), "y + v_1*exp(v)");
    }
}
