use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use sphere_hofa::counting::{enumerate_gowers, enumerate_zeros, exp_sum_over, zero_count_check, QuadSet, BOUND_CONSTANT};
use sphere_hofa::division::lifted::{
    lift_nullstellensatz, sphere_periodic_decompose, sphere_vanishing_decompose, LiftOutcome, PeriodicOutcome,
    VanishingOutcome, ZpQuadForm,
};
use sphere_hofa::division::{
    dichotomy, divide, gowers_equation_solve, intrinsic_decompose, nullstellensatz, DichotomyKind, GowersOutcome,
    IntrinsicOutcome, NullOutcome,
};
use sphere_hofa::equidist::{
    default_freq_budget, equidist_test, leibman_probe, weyl_dichotomy, TorusPolySeq, Verdict, WeylOutcome,
};
use sphere_hofa::fpoly::{format_rational, fp_poly_from_json, fp_poly_to_json, rat_poly_from_json, rat_poly_to_json};
use sphere_hofa::msets::{
    fubini_check, irreducibility_probe, random_poly, random_sign, standard_rep, MFamily, ProbeKind,
};
use sphere_hofa::{counting, AffineSubspace, Error, FpMultiPoly, PrimeField, QuadForm};

const SCHEMA: &str = "sphere-hofa/1";

#[derive(Parser)]
#[command(name = "sphere-hofa", version, about = "Quadrics over prime fields: counts, division certificates, M-sets and equidistribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true)]
    prime: Option<u64>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 0.3)]
    delta: f64,
    /// Largest |k|₁ scanned; defaults to ⌈δ⁻²⌉ capped at 1000.
    #[arg(long = "freq-budget", global = true)]
    freq_budget: Option<usize>,
    /// Enumeration budget in points.
    #[arg(long, global = true, default_value_t = counting::DEFAULT_BUDGET)]
    budget: f64,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Input JSON file.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Command {
    Normalize,
    Count,
    Expsum,
    Gowers,
    Divide,
    Nullstellensatz,
    Dichotomy,
    Decompose,
    MsetRepr,
    FubiniCheck,
    IrreducibilityProbe,
    Equidist,
    Weyl,
    LeibmanProbe,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Normalize => "normalize",
            Command::Count => "count",
            Command::Expsum => "expsum",
            Command::Gowers => "gowers",
            Command::Divide => "divide",
            Command::Nullstellensatz => "nullstellensatz",
            Command::Dichotomy => "dichotomy",
            Command::Decompose => "decompose",
            Command::MsetRepr => "mset-repr",
            Command::FubiniCheck => "fubini-check",
            Command::IrreducibilityProbe => "irreducibility-probe",
            Command::Equidist => "equidist",
            Command::Weyl => "weyl",
            Command::LeibmanProbe => "leibman-probe",
        }
    }
}

enum Failure {
    Input(String),
    /// A theorem-regime outcome: reported with exit code 1.
    Violation(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            Error::DichotomyViolation(_) | Error::TheoremRegime(_) => Failure::Violation(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Run = std::result::Result<(Value, u8), Failure>;

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

struct Ctx<'a> {
    cli: &'a Cli,
    input: Value,
}

impl Ctx<'_> {
    fn get(&self, key: &str) -> Option<&Value> {
        self.input.get(key)
    }

    fn usize_or(&self, key: &str, default: usize) -> std::result::Result<usize, Failure> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_u64().map(|x| x as usize).ok_or_else(|| bad(format!("'{key}' must be a non-negative integer"))),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> std::result::Result<u64, Failure> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_u64().ok_or_else(|| bad(format!("'{key}' must be a non-negative integer"))),
        }
    }

    /// `"form"` when given, otherwise the sphere `n·n − radius` from `--prime`, `--dim`.
    fn form(&self) -> std::result::Result<QuadForm, Failure> {
        if let Some(f) = self.get("form") {
            let m = QuadForm::from_json(f)?;
            if self.cli.prime.is_some_and(|p| p != m.field().p()) {
                return Err(bad("--prime differs from the form's prime"));
            }
            return Ok(m);
        }
        let p = self.cli.prime.ok_or_else(|| bad("need a \"form\" or --prime and --dim"))?;
        let d = self.cli.dim.ok_or_else(|| bad("need a \"form\" or --prime and --dim"))?;
        if d == 0 {
            return Err(bad("--dim must be positive"));
        }
        let field = PrimeField::new(p)?;
        Ok(QuadForm::sphere(field, d, self.u64_or("radius", 1)?))
    }

    fn fp_poly(&self, key: &str, field: PrimeField, nvars: usize) -> std::result::Result<FpMultiPoly, Failure> {
        let v = self.get(key).ok_or_else(|| bad(format!("missing \"{key}\"")))?;
        let f = fp_poly_from_json(v, field)?;
        if f.nvars() != nvars {
            return Err(bad(format!("\"{key}\" has {} variables, expected {nvars}", f.nvars())));
        }
        Ok(f)
    }

    fn zform(&self) -> std::result::Result<ZpQuadForm, Failure> {
        match self.get("zform") {
            Some(v) => {
                let z: ZpQuadForm = serde_json::from_value(v.clone()).map_err(|e| bad(format!("zform: {e}")))?;
                Ok(ZpQuadForm::new(z.p, z.a, z.u, z.v)?)
            }
            None => Ok(ZpQuadForm::lift(&self.form()?)),
        }
    }

    fn family(&self, m: &QuadForm) -> std::result::Result<MFamily, Failure> {
        let v = self.get("family").ok_or_else(|| bad("missing \"family\""))?;
        if let Some(s) = v.get("gowers") {
            let s = s.as_u64().ok_or_else(|| bad("\"gowers\" must be an integer"))? as usize;
            return Ok(MFamily::gowers(m, s));
        }
        Ok(MFamily::from_json(m.clone(), v)?)
    }

    /// Points of the domain set: `"full": true` for all of 𝔽_p^d, otherwise `V(form)`.
    fn omega(&self) -> std::result::Result<(PrimeField, usize, Vec<Vec<u64>>, bool), Failure> {
        if self.get("full").and_then(Value::as_bool).unwrap_or(false) {
            let p = self.cli.prime.ok_or_else(|| bad("\"full\" needs --prime"))?;
            let d = self.cli.dim.ok_or_else(|| bad("\"full\" needs --dim"))?;
            let field = PrimeField::new(p)?;
            counting::check_budget(p, d, self.cli.budget)?;
            return Ok((field, d, counting::all_points(field, d).collect(), true));
        }
        let m = self.form()?;
        let pts = enumerate_zeros(&m, None, self.cli.budget)?;
        Ok((m.field(), m.dim(), pts, false))
    }
}

fn run(cmd: Command, ctx: &Ctx) -> Run {
    let budget = ctx.cli.budget;
    if !(budget > 0.0) {
        return Err(bad("--budget must be positive"));
    }
    if !(ctx.cli.delta > 0.0) {
        return Err(bad("--delta must be positive"));
    }
    match cmd {
        Command::Normalize => {
            let m = ctx.form()?;
            let cert = m.normalize();
            let ok = cert.verify(&m);
            Ok((json!({"form": m.to_json(), "certificate": cert, "verified": ok}), if ok { 0 } else { 1 }))
        }
        Command::Count => {
            let m = ctx.form()?;
            let sub = match ctx.get("subspace") {
                Some(v) => Some(AffineSubspace::from_json(m.field(), m.dim(), v)?),
                None => None,
            };
            let rep = zero_count_check(&m, sub.as_ref(), budget)?;
            let code = u8::from(!rep.pass);
            Ok((json!({"form": m.to_json(), "rank": m.rank(), "report": rep}), code))
        }
        Command::Expsum => {
            let m = ctx.form()?;
            let pts = enumerate_zeros(&m, None, budget)?;
            let field = m.field();
            let r = m.rank() as f64;
            let bound = BOUND_CONSTANT * (field.p() as f64).powf(-(r - 2.0) / 2.0);
            let xis: Vec<Vec<i64>> = match ctx.get("xi") {
                Some(v) => vec![serde_json::from_value(v.clone()).map_err(|e| bad(format!("xi: {e}")))?],
                None => counting::all_points(field, m.dim())
                    .filter(|x| x.iter().any(|&c| c != 0))
                    .map(|x| x.iter().map(|&c| c as i64).collect())
                    .collect(),
            };
            if xis.iter().any(|x| x.len() != m.dim()) {
                return Err(bad("xi has the wrong length"));
            }
            let mut worst = (0.0f64, Vec::new());
            let mut sums = Vec::new();
            for xi in &xis {
                let s = exp_sum_over(field, &pts, xi)?;
                if s.norm() > worst.0 {
                    worst = (s.norm(), xi.clone());
                }
                if xis.len() == 1 {
                    sums.push(json!({"xi": xi, "re": s.re, "im": s.im, "modulus": s.norm()}));
                }
            }
            let pass = worst.0 <= bound;
            Ok((
                json!({"form": m.to_json(), "frequencies": xis.len(), "max_modulus": worst.0, "argmax": worst.1,
                       "bound": bound, "constant_used": BOUND_CONSTANT, "pass": pass, "sums": sums}),
                u8::from(!pass),
            ))
        }
        Command::Gowers => {
            let m = ctx.form()?;
            let s = ctx.usize_or("s", 1)?;
            let rep = enumerate_gowers(&QuadSet::new(m.clone(), None)?, s, false, budget)?;
            let vm = enumerate_zeros(&m, None, budget)?.len();
            Ok((json!({"form": m.to_json(), "vm_count": vm, "report": rep}), 0))
        }
        Command::Divide => {
            let m = ctx.form()?;
            let p = ctx.fp_poly("poly", m.field(), m.dim())?;
            let cert = divide(&p, &m)?;
            let ok = cert.verify(&p, &m);
            let code = u8::from(!cert.is_exact());
            Ok((json!({"certificate": cert.to_json(), "exact": cert.is_exact(), "verified": ok}), code))
        }
        Command::Nullstellensatz => {
            let m = ctx.form()?;
            let p = ctx.fp_poly("poly", m.field(), m.dim())?;
            Ok(match nullstellensatz(&p, &m, budget)? {
                NullOutcome::Divides { r, cert } => {
                    (json!({"outcome": "divides", "quotient": fp_poly_to_json(&r), "certificate": cert.to_json()}), 0)
                }
                NullOutcome::Witness { n, value } => (json!({"outcome": "witness", "point": n, "value": value}), 1),
                NullOutcome::Anomaly { cert } => (json!({"outcome": "anomaly", "certificate": cert.to_json()}), 1),
            })
        }
        Command::Dichotomy => {
            let m = ctx.form()?;
            let p = ctx.fp_poly("poly", m.field(), m.dim())?;
            let v = dichotomy(&p, &m, ctx.cli.delta, budget)?;
            let code = u8::from(v.kind != DichotomyKind::Contained);
            Ok((
                json!({"kind": v.kind, "count": v.count, "vm_count": v.vm_count, "bound": v.bound,
                       "within_bound": v.within_bound, "delta_ok": v.delta_ok,
                       "certificate": v.certificate.map(|c| c.to_json()), "witness": v.witness}),
                code,
            ))
        }
        Command::Decompose => decompose(ctx),
        Command::MsetRepr => {
            let m = ctx.form()?;
            let fam = ctx.family(&m)?;
            match standard_rep(&fam) {
                Ok(rep) => Ok((
                    json!({"representation": rep.family.to_json(), "dimension_vector": rep.dimension_vector,
                           "total_codim": rep.total_codim, "flags": rep.flags}),
                    0,
                )),
                Err(Error::Inconsistent) => Ok((json!({"consistent": false}), 1)),
                Err(e) => Err(e.into()),
            }
        }
        Command::FubiniCheck => {
            let m = ctx.form()?;
            let fam = ctx.family(&m)?;
            let kprime = ctx.usize_or("kprime", 1)?;
            let p = m.field().p();
            let rep = match ctx.get("function").and_then(Value::as_str).unwrap_or("random-sign") {
                "one" => fubini_check(&fam, kprime, |_| 1.0, budget)?,
                "random-sign" => fubini_check(&fam, kprime, random_sign(p, ctx.cli.seed), budget)?,
                other => return Err(bad(format!("unknown function '{other}'"))),
            };
            let code = u8::from(!rep.pass);
            Ok((serde_json::to_value(rep).expect("report"), code))
        }
        Command::IrreducibilityProbe => {
            let m = ctx.form()?;
            let fam = ctx.family(&m)?;
            let trials = ctx.usize_or("trials", 100)?;
            let degree = ctx.usize_or("degree", 3)?;
            let samples = ctx.usize_or("samples", 4000)?;
            let nv = m.dim() * fam.k;
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.cli.seed);
            let mut polys: Vec<FpMultiPoly> =
                (0..trials).map(|_| random_poly(m.field(), nv, degree, 1.0, &mut rng)).collect();
            if let Some(f) = fam.functions.first() {
                let q = random_poly(m.field(), nv, degree.saturating_sub(2), 1.0, &mut rng);
                polys.push(&f.to_poly(&m) * &q);
            }
            polys.push(FpMultiPoly::constant(m.field(), nv, 1));
            let verdicts = irreducibility_probe(&fam, &polys, ctx.cli.delta, budget, samples, ctx.cli.seed)?;
            let middle: Vec<usize> =
                verdicts.iter().enumerate().filter(|(_, v)| v.kind == ProbeKind::Middle).map(|(i, _)| i).collect();
            let count = |k: ProbeKind| verdicts.iter().filter(|v| v.kind == k).count();
            Ok((
                json!({"polynomials": verdicts.len(), "contained": count(ProbeKind::Contained),
                       "small": count(ProbeKind::Small), "middle": middle.len(),
                       "sampled": verdicts.first().is_some_and(|v| v.sampled),
                       "violations": middle.iter().map(|&i| json!({"poly": fp_poly_to_json(&polys[i]), "verdict": verdicts[i]})).collect::<Vec<_>>(),
                       "max_fraction_noncontained": verdicts.iter().filter(|v| v.kind != ProbeKind::Contained).map(|v| v.fraction).fold(0.0, f64::max)}),
                u8::from(!middle.is_empty()),
            ))
        }
        Command::Equidist => {
            let seq = TorusPolySeq::from_json(ctx.get("seq").ok_or_else(|| bad("missing \"seq\""))?)?;
            let (field, d, pts, _) = ctx.omega()?;
            if seq.d() != d {
                return Err(bad("sequence dimension differs from the point set"));
            }
            let k = ctx.cli.freq_budget.unwrap_or_else(|| default_freq_budget(ctx.cli.delta));
            let rep = equidist_test(&seq, field, &pts, ctx.cli.delta, k)?;
            let code = u8::from(!matches!(rep.verdict, Verdict::Equidistributed { .. }));
            Ok((rep.to_json(), code))
        }
        Command::Weyl => {
            let g = rat_poly_from_json(ctx.get("g").ok_or_else(|| bad("missing \"g\""))?)?;
            let p = ctx.cli.prime.ok_or_else(|| bad("weyl needs --prime"))?;
            let r = ctx.u64_or("radius", 1)?;
            Ok(match weyl_dichotomy(&g, p, r, ctx.cli.delta, budget)? {
                WeylOutcome::SumSmall { value } => (json!({"branch": "sum-small", "value": value}), 0),
                WeylOutcome::Constant { value, a, g1, g2 } => (
                    json!({"branch": "constant", "value": value, "a": a,
                           "g1": rat_poly_to_json(&g1), "g2": rat_poly_to_json(&g2)}),
                    1,
                ),
            })
        }
        Command::LeibmanProbe => {
            let (field, d, pts, full) = ctx.omega()?;
            let s = ctx.usize_or("s", 2)?;
            let m = ctx.usize_or("m", 1)?;
            let trials = ctx.usize_or("trials", 20)?;
            let k = ctx.cli.freq_budget.unwrap_or_else(|| default_freq_budget(ctx.cli.delta));
            let stats = leibman_probe(field, &pts, d, m, s, ctx.cli.delta, trials, k, full, ctx.cli.seed)?;
            let code = u8::from(!stats.exceptions.is_empty());
            Ok((stats.to_json(), code))
        }
    }
}

fn decompose(ctx: &Ctx) -> Run {
    let budget = ctx.cli.budget;
    let kind = ctx.get("kind").and_then(Value::as_str).ok_or_else(|| bad("missing \"kind\""))?;
    match kind {
        "intrinsic" => {
            let m = ctx.form()?;
            let g = ctx.fp_poly("g", m.field(), m.dim())?;
            let s = ctx.usize_or("s", g.degree())?;
            Ok(match intrinsic_decompose(&g, &m, s, budget)? {
                IntrinsicOutcome::Decomposed { g1, g2 } => {
                    (json!({"outcome": "decomposed", "g1": fp_poly_to_json(&g1), "g2": fp_poly_to_json(&g2)}), 0)
                }
                IntrinsicOutcome::Witness(w) => (json!({"outcome": "witness", "cube": w}), 1),
                IntrinsicOutcome::Undecided => (json!({"outcome": "undecided"}), 1),
            })
        }
        "gowers-equation" => {
            let m = ctx.form()?;
            let p = ctx.fp_poly("P", m.field(), m.dim())?;
            let q = ctx.fp_poly("Q", m.field(), m.dim())?;
            let s = ctx.usize_or("s", 1)?;
            let k = ctx.usize_or("k", q.degree().max(s))?;
            Ok(match gowers_equation_solve(&p, &q, &m, s, k, budget)? {
                GowersOutcome::Factored(f) => (
                    json!({"outcome": "factored", "verified": f.verify(&p, &q, &m, s, k),
                           "P1": fp_poly_to_json(&f.p1), "P2": fp_poly_to_json(&f.p2),
                           "Q1": fp_poly_to_json(&f.q1), "Q2": fp_poly_to_json(&f.q2)}),
                    0,
                ),
                GowersOutcome::HypothesisFailed(w) => (json!({"outcome": "witness", "cube": w}), 1),
                GowersOutcome::NoSolution => (json!({"outcome": "no-solution"}), 1),
            })
        }
        "lift" => {
            let z = ctx.zform()?;
            let f = rat_poly_from_json(ctx.get("f").ok_or_else(|| bad("missing \"f\""))?)?;
            Ok(match lift_nullstellensatz(&f, &z, budget)? {
                LiftOutcome::Decomposed { p1, p0 } => {
                    (json!({"outcome": "decomposed", "P1": rat_poly_to_json(&p1), "P0": rat_poly_to_json(&p0)}), 0)
                }
                LiftOutcome::Witness(n) => (json!({"outcome": "witness", "point": n}), 1),
            })
        }
        "vanishing" => {
            let z = ctx.zform()?;
            let f = rat_poly_from_json(ctx.get("f").ok_or_else(|| bad("missing \"f\""))?)?;
            Ok(match sphere_vanishing_decompose(&f, &z, budget)? {
                VanishingOutcome::Decomposed(dec) => (
                    json!({"outcome": "decomposed", "verified": dec.verify(&f, &z), "Q0": dec.q0.to_string(),
                           "R": dec.r.iter().map(rat_poly_to_json).collect::<Vec<_>>(),
                           "p_power_integral": dec.p_power_integral}),
                    0,
                ),
                VanishingOutcome::NotSphereIntegral(n) => (json!({"outcome": "witness", "point": n}), 1),
            })
        }
        "periodic" => {
            let z = ctx.zform()?;
            let f = rat_poly_from_json(ctx.get("f").ok_or_else(|| bad("missing \"f\""))?)?;
            Ok(match sphere_periodic_decompose(&f, &z, budget)? {
                PeriodicOutcome::Decomposed(dec) => (
                    json!({"outcome": "decomposed", "verified": dec.verify(&f, &z), "Q0": dec.q0.to_string(),
                           "C": format_rational(&dec.c), "R0": rat_poly_to_json(&dec.r0),
                           "R": dec.r.iter().map(|(i, r)| json!({"power": i, "poly": rat_poly_to_json(r)})).collect::<Vec<_>>()}),
                    0,
                ),
                PeriodicOutcome::NotPartiallyPeriodic(n) => (json!({"outcome": "witness", "point": n}), 1),
            })
        }
        other => Err(bad(format!("unknown decomposition kind '{other}'"))),
    }
}

fn read_input(cli: &Cli) -> std::result::Result<Value, Failure> {
    match &cli.json {
        None => Ok(json!({})),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
            if !v.is_object() {
                return Err(bad("input must be a JSON object"));
            }
            Ok(v)
        }
    }
}

fn emit(cli: &Cli, report: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("serializable");
    text.push('\n');
    match &cli.out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 || rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().is_err() {
        eprintln!("error: invalid thread count");
        return ExitCode::from(2);
    }
    let cmd = cli.command;
    let result = read_input(&cli).and_then(|input| {
        let ctx = Ctx { cli: &cli, input };
        std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cmd, &ctx)))
            .unwrap_or_else(|_| Err(bad("internal error while processing the input")))
    });
    let (mut report, code) = match result {
        Ok((body, code)) => (body, code),
        Err(Failure::Input(msg)) => (json!({"error": msg}), 2),
        Err(Failure::Violation(msg)) => (json!({"violation": msg}), 1),
        Err(Failure::Budget(msg)) => (json!({"error": msg, "budget_exceeded": true}), 3),
    };
    if let Value::Object(map) = &mut report {
        map.insert("schema".into(), json!(SCHEMA));
        map.insert("command".into(), json!(cmd.name()));
        map.insert("exit_code".into(), json!(code));
    }
    if let Err(e) = emit(&cli, &report) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
