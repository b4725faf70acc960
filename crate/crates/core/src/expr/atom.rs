//! Indeterminates of the jet ring and their interning.
//!
//! Jet coordinates get fixed ids computed arithmetically so the hot paths
//! (total derivatives, evaluation) never touch the interner. Parameters,
//! unknown-function partials and kernel applications are interned on first
//! use.

use std::cmp::Ordering;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Arc;

use once_cell::sync::Lazy;
use parking_lot::RwLock;
use rustc_hash::FxHashMap;

use super::ratfn::RatFn;
use crate::error::{Error, Result};

pub type VarId = u32;

const X_ID: VarId = 0;
const JET_BASE: VarId = 1;
const JET_LIMIT: usize = 4095;
const TEST_BASE: VarId = 4096;
const TEST_STRIDE: VarId = 4096;
const TEST_SETS: u32 = 15;
const DYN_BASE: VarId = 1 << 20;

static MAX_JET_ORDER: AtomicUsize = AtomicUsize::new(24);

/// Current bound on jet indices.
pub fn max_jet_order() -> usize {
    MAX_JET_ORDER.load(AtomicOrdering::Relaxed)
}

/// Changes the bound on jet indices for the whole process.
pub fn set_max_jet_order(k: usize) -> Result<()> {
    if k >= JET_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "maximum jet order must be below {JET_LIMIT}"
        )));
    }
    MAX_JET_ORDER.store(k, AtomicOrdering::Relaxed);
    Ok(())
}

fn check_order(k: usize) -> Result<()> {
    let max = max_jet_order();
    if k > max {
        Err(Error::JetOrderOverflow { order: k, max })
    } else {
        Ok(())
    }
}

/// Analytic functions that are kept as opaque atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kernel {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Sin => "sin",
            Kernel::Cos => "cos",
            Kernel::Exp => "exp",
            Kernel::Ln => "ln",
            Kernel::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Kernel> {
        Some(match s {
            "sin" => Kernel::Sin,
            "cos" => Kernel::Cos,
            "exp" => Kernel::Exp,
            "ln" => Kernel::Ln,
            "sqrt" => Kernel::Sqrt,
            _ => return None,
        })
    }
}

/// Which of `x`, `u` an unknown function depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FuncArgs {
    X,
    U,
    XU,
}

impl FuncArgs {
    pub fn has_x(self) -> bool {
        matches!(self, FuncArgs::X | FuncArgs::XU)
    }

    pub fn has_u(self) -> bool {
        matches!(self, FuncArgs::U | FuncArgs::XU)
    }
}

/// A partial derivative `∂^{dx+du} F / ∂x^dx ∂u^du` of a named unknown function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncSym {
    pub name: Arc<str>,
    pub args: FuncArgs,
    pub dx: u32,
    pub du: u32,
}

impl FuncSym {
    pub fn new(name: &str, args: FuncArgs) -> FuncSym {
        FuncSym {
            name: name.into(),
            args,
            dx: 0,
            du: 0,
        }
    }

    pub fn with_derivs(&self, dx: u32, du: u32) -> FuncSym {
        FuncSym {
            name: self.name.clone(),
            args: self.args,
            dx,
            du,
        }
    }
}

impl fmt::Display for FuncSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if self.dx + self.du > 0 {
            write!(f, "_")?;
            for _ in 0..self.dx {
                write!(f, "x")?;
            }
            for _ in 0..self.du {
                write!(f, "u")?;
            }
        }
        let args = match self.args {
            FuncArgs::X => "x",
            FuncArgs::U => "u",
            FuncArgs::XU => "x,u",
        };
        write!(f, "({args})")
    }
}

/// One indeterminate of the extended jet ring.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    /// The independent variable.
    X,
    /// Jet coordinate `u_k`.
    Jet(u32),
    /// Jet `k` of formal test function number `set`.
    TestJet { set: u32, order: u32 },
    /// Named parameter.
    Param(Arc<str>),
    /// Unknown function partial.
    Func(FuncSym),
    /// Kernel applied to a normalized argument.
    Kernel(Kernel, Arc<RatFn>),
}

#[derive(Default)]
struct Interner {
    atoms: Vec<Atom>,
    ids: FxHashMap<Atom, VarId>,
}

static INTERNER: Lazy<RwLock<Interner>> = Lazy::new(|| RwLock::new(Interner::default()));

impl Atom {
    /// Id of `x`.
    pub const fn x_id() -> VarId {
        X_ID
    }

    /// Id of `u_k`, enforcing the jet-order bound.
    pub fn jet_id(k: usize) -> Result<VarId> {
        check_order(k)?;
        Ok(JET_BASE + k as VarId)
    }

    /// Id of the `order`-th jet of test function `set` (1-based sets).
    pub fn test_id(set: u32, order: usize) -> Result<VarId> {
        check_order(order)?;
        if set == 0 || set > TEST_SETS {
            return Err(Error::InvalidParameter(format!(
                "test function index {set} out of range"
            )));
        }
        Ok(TEST_BASE + (set - 1) * TEST_STRIDE + order as VarId)
    }

    pub fn param(name: &str) -> Atom {
        Atom::Param(name.into())
    }

    /// Interns the atom and returns its id.
    pub fn id(&self) -> Result<VarId> {
        match self {
            Atom::X => Ok(X_ID),
            Atom::Jet(k) => Atom::jet_id(*k as usize),
            Atom::TestJet { set, order } => Atom::test_id(*set, *order as usize),
            other => Ok(intern(other)),
        }
    }

    /// Looks an id back up.
    pub fn from_id(id: VarId) -> Atom {
        if id == X_ID {
            Atom::X
        } else if id < TEST_BASE {
            Atom::Jet(id - JET_BASE)
        } else if id < DYN_BASE {
            let off = id - TEST_BASE;
            Atom::TestJet {
                set: off / TEST_STRIDE + 1,
                order: off % TEST_STRIDE,
            }
        } else {
            INTERNER.read().atoms[(id - DYN_BASE) as usize].clone()
        }
    }

    pub fn is_kernel(&self) -> bool {
        matches!(self, Atom::Kernel(..))
    }

    fn rank(&self) -> u8 {
        match self {
            Atom::X => 0,
            Atom::Jet(_) => 1,
            Atom::TestJet { .. } => 2,
            Atom::Param(_) => 3,
            Atom::Func(_) => 4,
            Atom::Kernel(..) => 5,
        }
    }

    /// A deterministic order independent of interning history, used for
    /// printing.
    pub fn display_cmp(&self, o: &Atom) -> Ordering {
        match (self, o) {
            (Atom::Jet(a), Atom::Jet(b)) => a.cmp(b),
            (Atom::TestJet { set: s1, order: o1 }, Atom::TestJet { set: s2, order: o2 }) => {
                (s1, o1).cmp(&(s2, o2))
            }
            (Atom::Param(a), Atom::Param(b)) => a.cmp(b),
            (Atom::Func(a), Atom::Func(b)) => a.cmp(b),
            (Atom::Kernel(k1, a1), Atom::Kernel(k2, a2)) => k1
                .cmp(k2)
                .then_with(|| a1.to_expr().to_string().cmp(&a2.to_expr().to_string())),
            _ => self.rank().cmp(&o.rank()),
        }
    }
}

/// Fast classification of ids without consulting the interner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdKind {
    X,
    Jet(u32),
    TestJet(u32, u32),
    Dynamic,
}

pub fn classify(id: VarId) -> IdKind {
    if id == X_ID {
        IdKind::X
    } else if id < TEST_BASE {
        IdKind::Jet(id - JET_BASE)
    } else if id < DYN_BASE {
        let off = id - TEST_BASE;
        IdKind::TestJet(off / TEST_STRIDE + 1, off % TEST_STRIDE)
    } else {
        IdKind::Dynamic
    }
}

fn intern(atom: &Atom) -> VarId {
    if let Some(id) = INTERNER.read().ids.get(atom) {
        return *id;
    }
    let mut w = INTERNER.write();
    if let Some(id) = w.ids.get(atom) {
        return *id;
    }
    let id = DYN_BASE + w.atoms.len() as VarId;
    w.atoms.push(atom.clone());
    w.ids.insert(atom.clone(), id);
    id
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::X => write!(f, "x"),
            Atom::Jet(0) => write!(f, "u"),
            Atom::Jet(k) => write!(f, "u_{k}"),
            Atom::TestJet { set, order } => write!(f, "w{set}_{order}"),
            Atom::Param(p) => write!(f, "{p}"),
            Atom::Func(s) => write!(f, "{s}"),
            Atom::Kernel(k, arg) => write!(f, "{}({})", k.name(), arg.to_expr()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_ids_round_trip() {
        let u3 = Atom::jet_id(3).unwrap();
        assert_eq!(Atom::from_id(u3), Atom::Jet(3));
        let w = Atom::test_id(2, 5).unwrap();
        assert_eq!(Atom::from_id(w), Atom::TestJet { set: 2, order: 5 });
        assert_eq!(classify(w), IdKind::TestJet(2, 5));
    }

    #[test]
    fn jet_bound_is_an_error() {
        let max = max_jet_order();
        assert!(matches!(
            Atom::jet_id(max + 1),
            Err(Error::JetOrderOverflow { .. })
        ));
    }

    #[test]
    fn params_intern_once() {
        let a = Atom::param("lambda_test").id().unwrap();
        let b = Atom::param("lambda_test").id().unwrap();
        assert_eq!(a, b);
        assert_eq!(Atom::from_id(a), Atom::param("lambda_test"));
    }
}
