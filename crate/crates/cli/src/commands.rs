use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

use hamjet::catalog::{build, FamilySpec, Sign, UnitParams};
use hamjet::diffop::ZeroMethod;
use hamjet::expr::{
    parse_with, set_max_jet_order, Atom, ParseContext, ProbeConfig, ProbeReport, Scalar,
    ZeroVerdict,
};
use hamjet::files::{OperatorFile, SubstitutionFile};
use hamjet::jetcalc::{diff_order, euler_operator, is_translation_invariant, level};
use hamjet::momentum::{
    check_momentum_density, decide_momentum, momentum_ode_fifth, momentum_ode_third,
    numeric_check, solve_ode, LinearODE, MomentumVerdict,
};
use hamjet::transform::{is_special_contact, k_operator, pushforward_operator, SubstitutionKind};
use hamjet::{DiffOp, Error, RatFn};

use crate::report::Report;
use crate::{CatalogArgs, Cli, Command, FamilyName, OdeArgs, OdeFamily};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> CliError {
        CliError { code: 2, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        let code = match e {
            Error::Inconclusive { .. } => 3,
            Error::Singular(_) => 1,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

type CliResult<T> = Result<T, CliError>;

struct Ctx {
    cfg: ProbeConfig,
    timings: BTreeMap<String, f64>,
}

impl Ctx {
    fn timed<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.insert(label.to_string(), t.elapsed().as_secs_f64() * 1e3);
        out
    }
}

pub fn run(cli: &Cli, argv: Vec<String>) -> CliResult<Report> {
    if cli.trials == 0 {
        return Err(CliError::usage("--trials must be positive"));
    }
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        return Err(CliError::usage("--tol must be positive"));
    }
    let mut ctx = Ctx { cfg: ProbeConfig::new(cli.trials, cli.tol, cli.seed), timings: BTreeMap::new() };
    if let Some(k) = cli.kmax {
        set_max_jet_order(k)?;
    }
    let (code, result) = match &cli.command {
        Command::Check { file } => check(&mut ctx, file, cli.kmax)?,
        Command::Momentum { file, density, auto } => momentum(&mut ctx, file, density.as_deref(), *auto, cli.kmax)?,
        Command::Catalog(args) => catalog(args)?,
        Command::Transform { op_file, sub_file, output } => transform(&mut ctx, op_file, sub_file, output.as_deref(), cli.kmax)?,
        Command::Ode(args) => ode(&mut ctx, args)?,
    };
    Ok(Report {
        command: argv,
        seed: cli.seed,
        trials: cli.trials,
        tol: cli.tol,
        exit_code: code,
        result,
        timings_ms: ctx.timings,
    })
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn in_file(path: &Path, e: Error) -> CliError {
    let mut err = CliError::from(e);
    err.message = format!("{}: {}", path.display(), err.message);
    err
}

fn load_operator(path: &Path, kmax_flag: Option<usize>) -> CliResult<(OperatorFile, DiffOp)> {
    let file = OperatorFile::parse(&read(path)?).map_err(|e| in_file(path, e))?;
    if let (Some(k), None) = (file.kmax, kmax_flag) {
        set_max_jet_order(k)?;
    }
    let op = file.to_operator().map_err(|e| in_file(path, e))?;
    if op.is_zero() {
        return Err(CliError::usage(format!("{}: operator is zero", path.display())));
    }
    Ok((file, op))
}

fn probe_json(p: &ProbeReport) -> Value {
    let (witness, value) = match &p.verdict {
        ZeroVerdict::NonZero { witness, value } => {
            let point: Vec<String> =
                witness.named().into_iter().map(|(k, v)| format!("{k} = {v}")).collect();
            (json!(point), json!(format!("{value}")))
        }
        _ => (Value::Null, Value::Null),
    };
    json!({
        "verdict": p.verdict.label(),
        "trials": p.trials,
        "singular": p.singular,
        "max_residual": p.max_residual,
        "witness": witness,
        "value": value,
    })
}

fn check(ctx: &mut Ctx, file: &Path, kmax: Option<usize>) -> CliResult<(u8, Value)> {
    let (_, op) = load_operator(file, kmax)?;
    let cfg = ctx.cfg;
    let report = ctx.timed("jacobi", || op.is_hamiltonian(&cfg))?;
    let ti = is_translation_invariant(&op)?;
    let lvl = level(&op)?;
    let lead = op.leading().expect("nonzero operator");
    let code = if report.is_hamiltonian() { 0 } else { 1 };
    Ok((
        code,
        json!({
            "operator": op.to_string(),
            "order": op.order(),
            "level": lvl,
            "leading_coefficient": lead.to_expr().to_string(),
            "leading_differential_order": diff_order(lead)?.to_string(),
            "skew_adjoint": report.skew_adjoint,
            "jacobi": probe_json(&report.jacobi),
            "jacobi_method": match report.method { ZeroMethod::Exact => "exact", ZeroMethod::Probe => "probe" },
            "jacobi_residual_terms": report.residual_terms,
            "hamiltonian": report.is_hamiltonian(),
            "translation_invariant": ti,
        }),
    ))
}

fn parse_in(src: &str, file: &OperatorFile) -> CliResult<RatFn> {
    let ctx = ParseContext::with_params(file.params.iter().map(|(n, _)| n.clone()));
    let mut r = parse_with(src, &ctx)?.to_ratfn()?;
    let mut map = rustc_hash::FxHashMap::default();
    for (name, value) in &file.params {
        if let Some(v) = value {
            map.insert(Atom::param(name).id()?, v.to_ratfn()?);
        }
    }
    if !map.is_empty() {
        r = r.substitute(&map)?;
    }
    Ok(r)
}

fn require_hamiltonian(ctx: &mut Ctx, op: &DiffOp) -> CliResult<()> {
    let cfg = ctx.cfg;
    let report = ctx.timed("jacobi", || op.is_hamiltonian(&cfg))?;
    if !report.is_hamiltonian() {
        return Err(CliError::usage(format!(
            "operator is not Hamiltonian (skew-adjoint: {}, Jacobi: {})",
            report.skew_adjoint,
            report.jacobi.verdict.label()
        )));
    }
    Ok(())
}

fn ode_json(ode: &LinearODE) -> Value {
    json!({
        "equation": ode.to_string(),
        "order": ode.order(),
        "coefficients": ode.coeffs().iter().map(|c| c.to_expr().to_string()).collect::<Vec<_>>(),
        "rhs": ode.rhs().to_expr().to_string(),
    })
}

fn momentum(ctx: &mut Ctx, file: &Path, density: Option<&str>, auto: bool, kmax: Option<usize>) -> CliResult<(u8, Value)> {
    let (parsed, op) = load_operator(file, kmax)?;
    require_hamiltonian(ctx, &op)?;
    if let Some(src) = density {
        let t = parse_in(src, &parsed)?;
        let h = euler_operator(&t)?;
        let h_order = diff_order(&h)?;
        let cfg = ctx.cfg;
        let probe = ctx.timed("density", || check_momentum_density(&op, &t, &cfg))?;
        let verified = probe.verdict.is_zero();
        let note = match h_order.finite() {
            Some(k) if k >= 1 => Some(format!(
                "the variational derivative has differential order {k}; momenta of operators with leading coefficient of order at most 1 have variational derivative h(x, u)"
            )),
            _ => None,
        };
        return Ok((
            if verified { 0 } else { 1 },
            json!({
                "mode": "density",
                "density": t.to_expr().to_string(),
                "variational_derivative": h.to_expr().to_string(),
                "variational_derivative_order": h_order.to_string(),
                "verified": verified,
                "residual": probe_json(&probe),
                "note": note,
            }),
        ));
    }
    debug_assert!(auto);
    let cfg = ctx.cfg;
    let verdict = ctx.timed("decide", || decide_momentum(&op, &cfg))?;
    let (code, body) = match &verdict {
        MomentumVerdict::Yes { density, ode, reason } => (
            0,
            json!({
                "verdict": "YES",
                "reason": reason,
                "density": density.as_ref().map(|d| d.to_expr().to_string()),
                "ode": ode.as_ref().map(ode_json),
            }),
        ),
        MomentumVerdict::No(w) => {
            let trace: Vec<Value> = w
                .trace()
                .iter()
                .map(|s| json!({ "step": s.label, "residual": s.residual.to_string() }))
                .collect();
            (1, json!({ "verdict": "NO", "witness": w.tag(), "trace": trace }))
        }
        MomentumVerdict::Unknown { reason } => (
            3,
            json!({
                "verdict": "UNKNOWN",
                "reason": reason,
                "hint": "a point or special contact substitution (transform command) may bring the operator to a recognized form",
            }),
        ),
    };
    let mut body = body;
    body["mode"] = json!("auto");
    Ok((code, body))
}

fn expr_arg(name: &str, src: Option<&str>, default: Option<&str>) -> CliResult<RatFn> {
    let src = src.or(default).ok_or_else(|| CliError::usage(format!("--{name} is required")))?;
    parse_with(src, &ParseContext::new())
        .and_then(|e| e.to_ratfn())
        .map_err(|e| CliError::usage(format!("--{name}: {e}")))
}

fn sign_arg(s: &str) -> CliResult<Sign> {
    Sign::parse(s).ok_or_else(|| CliError::usage(format!("--sign must be + or -, got '{s}'")))
}

fn family_spec(args: &CatalogArgs) -> CliResult<FamilySpec> {
    let sign = sign_arg(&args.sign)?;
    let a = |name: &str, v: &Option<String>, d: Option<&str>| expr_arg(name, v.as_deref(), d);
    Ok(match args.family {
        FamilyName::ThirdLinear => FamilySpec::third_linear(sign, a("A", &args.a, None)?),
        FamilyName::ThirdConstant => FamilySpec::third_constant(sign, a("A", &args.a, None)?),
        FamilyName::ThirdConjugated => FamilySpec::third_conjugated(sign, a("f", &args.f, Some("0"))?),
        FamilyName::FifthInverseQuartic => FamilySpec::fifth_inverse_quartic(
            sign,
            a("alpha", &args.alpha, Some("0"))?,
            a("beta", &args.beta, Some("0"))?,
        ),
        FamilyName::FifthUnit => {
            let params = if args.quasiconstant {
                UnitParams::Quasiconstant { b: a("b", &args.b, Some("0"))?, c: a("c", &args.c, Some("0"))? }
            } else if args.rho.is_some() {
                UnitParams::Rho {
                    alpha: a("alpha", &args.alpha, Some("0"))?,
                    beta: a("beta", &args.beta, None)?,
                    rho: a("rho", &args.rho, None)?,
                }
            } else {
                UnitParams::Explicit {
                    alpha: a("alpha", &args.alpha, Some("0"))?,
                    beta: a("beta", &args.beta, Some("0"))?,
                    gamma: a("gamma", &args.gamma, Some("0"))?,
                }
            };
            FamilySpec::fifth_unit(sign, params)
        }
    })
}

fn write_or_return(path: Option<&Path>, text: &str) -> CliResult<Value> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            Ok(json!(p.display().to_string()))
        }
        None => Ok(Value::Null),
    }
}

fn catalog(args: &CatalogArgs) -> CliResult<(u8, Value)> {
    let spec = family_spec(args)?;
    let op = build(&spec)?;
    let mut file = OperatorFile::from_operator(&op);
    file.kmax = None;
    let text = format!("# {} sign {}\n{}", spec.family.tag(), spec.sign, file);
    let written = write_or_return(args.output.as_deref(), &text)?;
    Ok((0, json!({ "family": spec.family.tag(), "sign": spec.sign.to_string(), "written_to": written, "file": text })))
}

fn transform(ctx: &mut Ctx, op_file: &Path, sub_file: &Path, output: Option<&Path>, kmax: Option<usize>) -> CliResult<(u8, Value)> {
    let (_, op) = load_operator(op_file, kmax)?;
    let sfile = SubstitutionFile::parse(&read(sub_file)?).map_err(|e| in_file(sub_file, e))?;
    let s = sfile.to_substitution().map_err(|e| in_file(sub_file, e))?;
    let contact = is_special_contact(&s, &ctx.cfg)?;
    if s.kind() == SubstitutionKind::General {
        return Err(CliError::usage(format!(
            "substitution is neither a point nor a special contact transformation ({}); general differential substitutions can map local operators to nonlocal ones",
            contact.failed_condition.unwrap_or_else(|| "unknown reason".into())
        )));
    }
    let k = k_operator(&s)?;
    let out = ctx.timed("pushforward", || pushforward_operator(&op, &s))?;
    let text = OperatorFile::from_operator(&out).to_string();
    let written = write_or_return(output, &text)?;
    Ok((
        0,
        json!({
            "kind": s.kind().tag(),
            "special_contact": contact.is_special,
            "rho": contact.rho.map(|r| r.to_expr().to_string()),
            "rho_probe_trials": contact.rho_probe.map(|p| p.trials),
            "k_operator": k.to_string(),
            "operator": out.to_string(),
            "leading_coefficient": out.leading().map(|l| l.to_expr().to_string()),
            "written_to": written,
            "file": text,
        }),
    ))
}

fn scalar_arg(name: &str, src: &str) -> CliResult<Scalar> {
    let r = expr_arg(name, Some(src), None)?;
    let c = r
        .as_constant()
        .ok_or_else(|| CliError::usage(format!("--{name}: '{src}' is not a number")))?;
    if r.is_inexact() {
        let z = c.to_c64();
        if z.im != 0.0 {
            return Err(CliError::usage(format!("--{name}: complex floating values are not supported")));
        }
        return Ok(Scalar::float(z.re));
    }
    Ok(Scalar::from_coeff(&c))
}

fn ode(ctx: &mut Ctx, args: &OdeArgs) -> CliResult<(u8, Value)> {
    let sign = sign_arg(&args.sign)?;
    let ode = match args.family {
        OdeFamily::Fifth => momentum_ode_fifth(
            &expr_arg("alpha", Some(&args.alpha), None)?,
            &expr_arg("beta", Some(&args.beta), None)?,
            sign,
        )?,
        OdeFamily::Third => momentum_ode_third(&expr_arg("f", Some(&args.f), None)?, sign)?,
    };
    let mut body = json!({ "ode": ode_json(&ode) });
    let Some(n) = args.solve else {
        return Ok((0, body));
    };
    let u0 = scalar_arg("at", &args.at)?;
    let init: Vec<Scalar> = match &args.init {
        Some(list) => list.split(',').map(|s| scalar_arg("init", s.trim())).collect::<CliResult<_>>()?,
        None => vec![Scalar::int(0); ode.order()],
    };
    if init.len() != ode.order() {
        return Err(CliError::usage(format!("--init needs {} values, got {}", ode.order(), init.len())));
    }
    let sol = ctx.timed("series", || solve_ode(&ode, &u0, &init, n))?;
    body["series"] = json!({
        "expansion_point": u0.to_string(),
        "degree": n,
        "coefficients": sol.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "exact": sol.is_exact(),
        "polynomial": sol.polynomial().map(|p| p.to_expr().to_string()),
        "closed_form": sol.closed_form.as_ref().map(|p| p.to_expr().to_string()),
        "residual": sol.residual,
    });
    if let Some(r) = args.interval {
        let check = ctx.timed("runge_kutta", || numeric_check(&ode, &sol, &init, r, args.steps))?;
        body["numeric"] = json!({ "radius": check.radius, "steps": check.steps, "max_deviation": check.max_deviation });
    }
    Ok((0, body))
}
