//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hamjet::catalog::{audit_coefficient_relations, build, FamilySpec, Sign, UnitParams};
use hamjet::diffop::{DiffOp, HamiltonianReport, ZeroMethod};
use hamjet::expr::{parse, parse_with, probe_ratfn, Dialect, ParseContext, ProbeConfig, Scalar, ZeroVerdict};
use hamjet::jetcalc::{euler_operator, frechet_derivative, level, total_derivative};
use hamjet::momentum::{decide_momentum, solve_ode, verify_momentum_density, MomentumVerdict};
use hamjet::transform::{pushforward_operator, Substitution};
use hamjet::{Expr, RatFn};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rf(s: &str) -> RatFn {
    parse(s).unwrap().to_ratfn().unwrap()
}

fn yv(s: &str) -> RatFn {
    let ctx = ParseContext::new().dialect(Dialect::Substitution);
    parse_with(s, &ctx).unwrap().to_ratfn().unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|err| err.to_string())
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, format!("took {t:.1?}, limit {limit:?}"))
}

fn hamiltonian(op: &DiffOp, cfg: &ProbeConfig) -> Result<HamiltonianReport, String> {
    let r = e(op.is_hamiltonian(cfg))?;
    ensure(r.skew_adjoint, format!("not skew-adjoint: {op}"))?;
    ensure(r.jacobi.verdict.is_zero(), format!("Jacobi residual {}", r.jacobi.verdict.label()))?;
    Ok(r)
}

fn strict() -> ProbeConfig {
    ProbeConfig::new(128, 1e-9, 0xC0FFEE)
}

fn quartic_example() -> Outcome {
    let start = Instant::now();
    let op = e(build(&FamilySpec::fifth_inverse_quartic(Sign::Plus, rf("1/2"), rf("-1"))))?;
    let report = hamiltonian(&op, &strict())?;
    ensure(
        report.jacobi.verdict == ZeroVerdict::ExactZero || report.jacobi.trials >= 100,
        "Jacobi decided on fewer than 100 points",
    )?;
    ensure(e(verify_momentum_density(&op, &rf("-(1/4)*u^2"), &strict()))?, "density -u^2/4 rejected")?;
    let v = e(decide_momentum(&op, &strict()))?;
    let ode = v.ode().ok_or_else(|| format!("expected YES with an ODE, got {}", v.label()))?;
    let expected = [rf("0"), rf("-2"), rf("0"), rf("1"), rf("0"), rf("1")];
    ensure(ode.coeffs() == expected && ode.rhs() == &RatFn::one(), format!("ODE {ode}"))?;
    within(start, Duration::from_secs(120))?;
    Ok(format!("Jacobi {}, ODE {ode}", report.jacobi.verdict.label()))
}

fn kernel_example() -> Outcome {
    let cfg = ProbeConfig::new(128, 1e-8, 0xC0FFEE);
    let (alpha, beta) = (rf("sin(u)"), rf("sin(u) + u"));
    let op = e(build(&FamilySpec::fifth_inverse_quartic(Sign::Plus, alpha, beta)))?;
    let report = hamiltonian(&op, &cfg)?;
    ensure(e(verify_momentum_density(&op, &rf("u"), &cfg))?, "density u rejected")?;
    let v = e(decide_momentum(&op, &cfg))?;
    let ode = v.ode().ok_or_else(|| format!("expected an ODE, got {}", v.label()))?;
    let init = [1, 0, 0, 0, 0].map(Scalar::int);
    let sol = e(solve_ode(ode, &Scalar::int(0), &init, 12))?;
    ensure(sol.coeffs[0] == Scalar::int(1), "constant term is not 1")?;
    ensure(sol.coeffs[1..].iter().all(|c| c.is_zero()), "series is not constant")?;
    ensure(sol.residual < 1e-12, format!("series residual {}", sol.residual))?;
    Ok(format!(
        "Jacobi {} (max residual {:.1e}), ODE {ode}, series 1",
        report.jacobi.verdict.label(),
        report.jacobi.max_residual
    ))
}

fn third_order_suite() -> Outcome {
    let start = Instant::now();
    let cfg = strict();
    for f in ["0", "u", "u^2"] {
        for sign in [Sign::Plus, Sign::Minus] {
            hamiltonian(&e(build(&FamilySpec::third_conjugated(sign, rf(f))))?, &cfg)
                .map_err(|m| format!("conjugated f = {f}: {m}"))?;
        }
    }
    for a in [1, 3] {
        let op = e(build(&FamilySpec::third_linear(Sign::Plus, RatFn::int(a))))?;
        hamiltonian(&op, &cfg).map_err(|m| format!("linear A = {a}: {m}"))?;
        let v = e(decide_momentum(&op, &cfg))?;
        let d = v.density().ok_or_else(|| format!("linear A = {a}: {}", v.label()))?;
        let expected = rf("u").div(&RatFn::int(a)).unwrap();
        ensure(d == &expected, format!("linear A = {a}: density {}", d.to_expr()))?;
        ensure(e(verify_momentum_density(&op, d, &cfg))?, "density not verified")?;
    }
    for a in [-2, 0, 5] {
        let op = e(build(&FamilySpec::third_constant(Sign::Plus, RatFn::int(a))))?;
        let v = e(decide_momentum(&op, &cfg))?;
        ensure(v.label() == "NO", format!("constant A = {a}: {}", v.label()))?;
    }
    within(start, Duration::from_secs(60))?;
    Ok("conjugated f ∈ {0, u, u^2} Hamiltonian; linear A ∈ {1, 3} YES u/A; constant A ∈ {-2, 0, 5} NO".into())
}

fn unit_leading_suite() -> Outcome {
    let start = Instant::now();
    let cases = [
        ("(0, 0, 0)", UnitParams::Explicit { alpha: rf("0"), beta: rf("0"), gamma: rf("0") }),
        ("(0, 0, x)", UnitParams::Explicit { alpha: rf("0"), beta: rf("0"), gamma: rf("x") }),
        ("beta = 1, rho = 0", UnitParams::Rho { alpha: rf("0"), beta: rf("1"), rho: rf("0") }),
    ];
    let mut steps = Vec::new();
    for (name, p) in cases {
        let op = e(build(&FamilySpec::fifth_unit(Sign::Plus, p)))?;
        hamiltonian(&op, &strict()).map_err(|m| format!("{name}: {m}"))?;
        match e(decide_momentum(&op, &strict()))? {
            MomentumVerdict::No(w) => {
                ensure(w.tag() == "ELIMINATION_CONTRADICTION", format!("{name}: witness {}", w.tag()))?;
                let last = w.trace().last().ok_or_else(|| format!("{name}: empty trace"))?;
                ensure(last.residual == Expr::int(1), format!("{name}: final residual {}", last.residual))?;
                steps.push(w.trace().len().to_string());
            }
            other => return Err(format!("{name}: {}", other.label())),
        }
    }
    within(start, Duration::from_secs(300))?;
    Ok(format!("three contradictions ending in 0 = 1 (trace lengths {})", steps.join(", ")))
}

fn relation_system() -> Outcome {
    let cfg = ProbeConfig::new(64, 1e-8, 0xC0FFEE);
    let mut n = 0;
    for (a, b) in [("0", "0"), ("1/2", "-1"), ("sin(u)", "sin(u) + u")] {
        let audit = e(audit_coefficient_relations(&rf(a), &rf(b), Sign::Plus, &cfg))?;
        ensure(audit.suspect.is_empty(), format!("({a}, {b}): suspect relations {:?}", audit.suspect))?;
        let failed: Vec<u32> = audit.checks.iter().filter(|c| !c.holds()).map(|c| c.index).collect();
        ensure(failed.is_empty(), format!("({a}, {b}): relations {failed:?} fail"))?;
        ensure(audit.hamiltonian.is_hamiltonian(), format!("({a}, {b}): Jacobi fails"))?;
        n = audit.checks.len();
    }
    Ok(format!("all {n} relations vanish for three parameter pairs"))
}

fn transform_suite() -> Outcome {
    let minus = e(build(&FamilySpec::fifth_unit(
        Sign::Minus,
        UnitParams::Explicit { alpha: rf("0"), beta: rf("0"), gamma: rf("0") },
    )))?;
    let flip = e(Substitution::new(yv("y"), yv("I*v")))?;
    let out = e(pushforward_operator(&minus, &flip))?;
    ensure(out.leading() == Some(&RatFn::one()), format!("leading {:?}", out.leading().map(|l| l.to_expr().to_string())))?;

    let linear = e(build(&FamilySpec::third_linear(Sign::Plus, RatFn::int(1))))?;
    let cubic = e(Substitution::new(yv("y"), yv("v^3 + v")))?;
    hamiltonian(&e(pushforward_operator(&linear, &cubic))?, &strict()).map_err(|m| format!("u = v^3 + v: {m}"))?;

    let same = e(pushforward_operator(&linear, &Substitution::identity()))?;
    ensure(same == linear, "identity substitution changed the operator")?;
    Ok("u = Iv gives leading 1; u = v^3 + v keeps Hamiltonian; identity neutral".into())
}

/// Random polynomial density in `x, u, u_1, u_2` with an occasional
/// denominator in `u`.
fn random_density(rng: &mut ChaCha8Rng) -> RatFn {
    let vars = ["x", "u", "u_1", "u_2"];
    let mut t = RatFn::zero();
    for _ in 0..rng.random_range(1..=4) {
        let mut m = RatFn::int(rng.random_range(-4..=4));
        for v in vars {
            m = m.mul(&rf(v).pow(rng.random_range(0..=2)).unwrap());
        }
        t = t.add(&m);
    }
    if rng.random_bool(0.3) {
        t = t.div(&rf("u^2 + 1")).unwrap();
    }
    t
}

fn random_operator(rng: &mut ChaCha8Rng) -> DiffOp {
    let coeffs = (0..rng.random_range(1..=3))
        .map(|_| {
            let a = RatFn::int(rng.random_range(-3..=3));
            let b = RatFn::int(rng.random_range(-3..=3)).mul(&rf("u"));
            let c = RatFn::int(rng.random_range(-2..=2)).mul(&rf("u_1^2"));
            a.add(&b).add(&c)
        })
        .collect();
    DiffOp::from_coeffs(coeffs)
}

fn property_suites() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    for i in 0..200 {
        let t = random_density(&mut rng);
        let r = e(euler_operator(&e(total_derivative(&t))?))?;
        ensure(r.is_zero(), format!("density #{i}: Euler of a total derivative is {}", r.to_expr()))?;
    }
    let cfg = strict();
    for i in 0..100 {
        let t = random_density(&mut rng);
        let l = e(frechet_derivative(&e(euler_operator(&t))?))?;
        let diff = l.sub(&e(l.adjoint())?);
        for c in diff.coeffs().iter().filter(|c| !c.is_zero()) {
            let p = e(probe_ratfn(c, &cfg))?;
            ensure(p.verdict.is_zero(), format!("density #{i}: linearization not self-adjoint"))?;
        }
    }
    for i in 0..50 {
        let a = random_operator(&mut rng);
        let b = random_operator(&mut rng);
        ensure(e(e(a.adjoint())?.adjoint())? == a, format!("pair #{i}: adjoint is not an involution"))?;
        let lhs = e(e(a.compose(&b))?.adjoint())?;
        let rhs = e(e(b.adjoint())?.compose(&e(a.adjoint())?))?;
        ensure(lhs.sub(&rhs).is_zero(), format!("pair #{i}: (AB)* differs from B*A*"))?;
    }
    let fifth = [
        FamilySpec::fifth_inverse_quartic(Sign::Plus, rf("0"), rf("0")),
        FamilySpec::fifth_inverse_quartic(Sign::Minus, rf("1/2"), rf("-1")),
        FamilySpec::fifth_inverse_quartic(Sign::Plus, rf("sin(u)"), rf("sin(u) + u")),
        FamilySpec::fifth_unit(Sign::Plus, UnitParams::Explicit { alpha: rf("0"), beta: rf("0"), gamma: rf("0") }),
        FamilySpec::fifth_unit(Sign::Minus, UnitParams::Explicit { alpha: rf("0"), beta: rf("0"), gamma: rf("x") }),
        FamilySpec::fifth_unit(Sign::Plus, UnitParams::Explicit { alpha: rf("x"), beta: rf("0"), gamma: rf("0") }),
        FamilySpec::fifth_unit(Sign::Plus, UnitParams::Rho { alpha: rf("0"), beta: rf("1"), rho: rf("0") }),
        FamilySpec::fifth_unit(Sign::Plus, UnitParams::Quasiconstant { b: rf("x"), c: rf("1") }),
    ];
    let mut levels = Vec::new();
    for spec in &fifth {
        let lvl = e(level(&e(build(spec))?))?;
        ensure(matches!(lvl, Some(5..=7)), format!("{} has level {lvl:?}", spec.family.tag()))?;
        levels.push(lvl.unwrap().to_string());
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("200 Euler, 100 Helmholtz, 50 adjoint pairs; fifth-order levels {}", levels.join(",")))
}

fn negative_control() -> Outcome {
    let op = DiffOp::dx_pow(3).add(&e(DiffOp::from_symmetrized(&[(rf("u^2"), 1)]))?);
    let r = e(op.is_hamiltonian(&strict()))?;
    ensure(r.skew_adjoint, "not skew-adjoint")?;
    ensure(r.method == ZeroMethod::Exact && r.residual_terms > 0, "Jacobi residual not confirmed by full expansion")?;
    match &r.jacobi.verdict {
        ZeroVerdict::NonZero { witness, value } => {
            let at: Vec<String> = witness.named().iter().take(3).map(|(k, v)| format!("{k}={v:.3}")).collect();
            Ok(format!(
                "skew-adjoint, Jacobi residual with {} terms, {value:.3e} at {}, ...",
                r.residual_terms,
                at.join(" ")
            ))
        }
        other => Err(format!("Jacobi verdict {}", other.label())),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 inverse-quartic example (1/2, -1)", quartic_example),
        ("2 inverse-quartic example (sin u, sin u + u)", kernel_example),
        ("3 third-order families", third_order_suite),
        ("4 unit-leading contradictions", unit_leading_suite),
        ("5 coefficient relations", relation_system),
        ("6 substitutions", transform_suite),
        ("7 invariant properties", property_suites),
        ("8 non-Hamiltonian control", negative_control),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let t = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} [{t:.2}s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} [{t:.2}s]: {why}");
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
