//! Symbolic expressions over the jet ring.
//!
//! [`Expr`] is the tree users write; [`RatFn`] is the canonical rational form
//! every computation runs on.

mod atom;
mod eval;
mod number;
mod parse;
mod poly;
mod probe;
mod ratfn;
mod tree;

pub use atom::{
    classify, max_jet_order, set_max_jet_order, Atom, FuncArgs, FuncSym, IdKind, Kernel, VarId,
};
pub use eval::{eval, eval_ratfn, JetPoint};
pub use number::{Coeff, Rat, Scalar};
pub use parse::{parse, parse_with, Dialect, ParseContext};
pub use poly::{Mono, Poly};
pub use probe::{
    probabilistic_zero, probe_ratfn, probe_sum, sample_coordinate, ProbeConfig, ProbeReport,
    ZeroVerdict, DEFAULT_SEED, DEFAULT_TOL, DEFAULT_TRIALS,
};
pub use ratfn::{func_id, RatFn};
pub use tree::{rational, Expr};

use rustc_hash::FxHashMap;

use crate::error::Result;

/// Canonical rational form of `e`.
pub fn normalize(e: &Expr) -> Result<Expr> {
    e.normalize()
}

/// Exact partial derivative with respect to an atom.
pub fn diff_partial(e: &Expr, v: VarId) -> Result<Expr> {
    Ok(e.to_ratfn()?.diff(v)?.to_expr())
}

/// Simultaneous substitution followed by normalization.
pub fn substitute(e: &Expr, bindings: &[(VarId, Expr)]) -> Result<Expr> {
    let mut map = FxHashMap::default();
    for (v, b) in bindings {
        map.insert(*v, b.to_ratfn()?);
    }
    Ok(e.to_ratfn()?.substitute(&map)?.to_expr())
}

/// Id of `u_k`.
pub fn jet(k: usize) -> Result<VarId> {
    Atom::jet_id(k)
}

/// Id of `x`.
pub fn x() -> VarId {
    Atom::x_id()
}

/// Id of a named parameter.
pub fn param(name: &str) -> VarId {
    Atom::param(name).id().expect("parameters always intern")
}

pub(crate) use number::binomial;
