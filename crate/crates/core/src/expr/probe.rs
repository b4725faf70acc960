//! Randomized zero-testing.
//!
//! Each trial draws every free coordinate uniformly from
//! `[-2, -0.5] ∪ [0.5, 2]`. The value for a coordinate depends only on the
//! master seed, the trial index and the coordinate's printed name, so
//! results do not depend on interning order or on how trials are scheduled.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::atom::{classify, Atom, IdKind, VarId};
use super::eval::{eval_float, JetPoint};
use super::number::Scalar;
use super::ratfn::RatFn;
use super::tree::Expr;
use crate::error::{Error, Result};

pub const DEFAULT_TRIALS: usize = 64;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeConfig {
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> ProbeConfig {
        ProbeConfig {
            trials: DEFAULT_TRIALS,
            tol: DEFAULT_TOL,
            seed: DEFAULT_SEED,
        }
    }
}

impl ProbeConfig {
    pub fn new(trials: usize, tol: f64, seed: u64) -> ProbeConfig {
        ProbeConfig { trials, tol, seed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    /// The normal form is literally zero.
    ExactZero,
    /// Every non-singular trial was below tolerance.
    Zero,
    /// A point where the value exceeds tolerance.
    NonZero { witness: JetPoint, value: Complex64 },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::NonZero { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            ZeroVerdict::ExactZero => "exact-zero",
            ZeroVerdict::Zero => "zero",
            ZeroVerdict::NonZero { .. } => "nonzero",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub verdict: ZeroVerdict,
    pub trials: usize,
    pub singular: usize,
    /// Largest `|value| / (1 + scale)` seen.
    pub max_residual: f64,
}

impl ProbeReport {
    pub fn exact_zero() -> ProbeReport {
        ProbeReport {
            verdict: ZeroVerdict::ExactZero,
            trials: 0,
            singular: 0,
            max_residual: 0.0,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn name_hash(s: &str) -> u64 {
    // FNV-1a; stable across runs and platforms
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Sample for one coordinate in one trial.
pub fn sample_coordinate(seed: u64, trial: usize, name: &str) -> f64 {
    let s = splitmix(seed ^ splitmix(trial as u64 ^ name_hash(name).rotate_left(17)));
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let mag: f64 = rng.random_range(0.5..2.0);
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

/// Free coordinates of a set of expressions: everything except kernel
/// atoms, which are computed from their arguments.
pub(crate) fn free_coordinates(parts: &[&RatFn]) -> Vec<(VarId, String)> {
    let mut ids: Vec<VarId> = parts.iter().flat_map(|r| r.all_vars()).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter()
        .filter(|id| !(classify(*id) == IdKind::Dynamic && Atom::from_id(*id).is_kernel()))
        .map(|id| (id, Atom::from_id(id).to_string()))
        .collect()
}

enum Trial {
    Singular,
    Value {
        value: Complex64,
        scale: f64,
        point: FxHashMap<VarId, f64>,
    },
}

fn run_trial(parts: &[&RatFn], coords: &[(VarId, String)], seed: u64, t: usize) -> Trial {
    let point: FxHashMap<VarId, f64> = coords
        .iter()
        .map(|(id, name)| (*id, sample_coordinate(seed, t, name)))
        .collect();
    let base = |id: VarId| point.get(&id).map(|v| Complex64::new(*v, 0.0));
    let mut cache = FxHashMap::default();
    let mut total = Complex64::new(0.0, 0.0);
    let mut scale: f64 = 0.0;
    for p in parts {
        match eval_float(p, &base, &mut cache) {
            Ok((v, s)) => {
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Trial::Singular;
                }
                total += v;
                scale = scale.max(s).max(v.norm());
            }
            Err(_) => return Trial::Singular,
        }
    }
    Trial::Value {
        value: total,
        scale,
        point,
    }
}

/// Probes `Σ parts` numerically, evaluating each part separately so large
/// cancellations between parts are measured against the parts' sizes.
pub fn probe_sum(parts: &[&RatFn], cfg: &ProbeConfig) -> Result<ProbeReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let coords = free_coordinates(parts);
    let results: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(parts, &coords, cfg.seed, t))
        .collect();
    let mut singular = 0;
    let mut max_residual: f64 = 0.0;
    for r in results {
        match r {
            Trial::Singular => singular += 1,
            Trial::Value {
                value,
                scale,
                point,
            } => {
                let rel = value.norm() / (1.0 + scale);
                max_residual = max_residual.max(rel);
                if value.norm() > cfg.tol * (1.0 + scale) {
                    let mut witness = JetPoint::new();
                    witness.min_abs = Some(0.5);
                    for (id, v) in point {
                        witness.set(id, Scalar::float(v));
                    }
                    return Ok(ProbeReport {
                        verdict: ZeroVerdict::NonZero { witness, value },
                        trials: cfg.trials,
                        singular,
                        max_residual,
                    });
                }
            }
        }
    }
    if singular == cfg.trials {
        return Err(Error::Inconclusive { trials: cfg.trials });
    }
    Ok(ProbeReport {
        verdict: ZeroVerdict::Zero,
        trials: cfg.trials,
        singular,
        max_residual,
    })
}

/// Zero test of a normal form: exact when the numerator vanishes,
/// otherwise by sampling.
pub fn probe_ratfn(r: &RatFn, cfg: &ProbeConfig) -> Result<ProbeReport> {
    if r.is_zero() {
        return Ok(ProbeReport::exact_zero());
    }
    probe_sum(&[r], cfg)
}

pub fn probabilistic_zero(e: &Expr, trials: usize, tol: f64, seed: u64) -> Result<ProbeReport> {
    probe_ratfn(&e.to_ratfn()?, &ProbeConfig::new(trials, tol, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn trivial_verdicts() {
        let r = probabilistic_zero(&parse("(u+u) - 2*u").unwrap(), 16, 1e-9, 1).unwrap();
        assert_eq!(r.verdict, ZeroVerdict::ExactZero);
        let r = probabilistic_zero(&parse("u_1 - u_2").unwrap(), 16, 1e-9, 1).unwrap();
        assert!(matches!(r.verdict, ZeroVerdict::NonZero { .. }));
        let r =
            probabilistic_zero(&parse("sin(u)^2 + cos(u)^2 - 1").unwrap(), 16, 1e-9, 1).unwrap();
        assert_eq!(r.verdict, ZeroVerdict::Zero);
    }

    #[test]
    fn deterministic_under_seed() {
        let e = parse("u_1^3 - u_2*u").unwrap();
        let a = probabilistic_zero(&e, 8, 1e-9, 42).unwrap();
        let b = probabilistic_zero(&e, 8, 1e-9, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn samples_avoid_the_origin() {
        for t in 0..200 {
            let v = sample_coordinate(7, t, "u_1");
            assert!((0.5..=2.0).contains(&v.abs()));
        }
    }

    #[test]
    fn all_singular_is_inconclusive() {
        let r = probabilistic_zero(&parse("ln(-1 - u^2)").unwrap(), 8, 1e-9, 1);
        assert_eq!(r, Err(Error::Inconclusive { trials: 8 }));
    }
}
