use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Result;
use fracbvp_core::fracops::{two_sided_terms, PowerTermSum};
use fracbvp_core::galerkin::{assemble_galerkin, find_coercivity_violation, galerkin_solve, CoercivityCertificate, DiscreteSolution};
use fracbvp_core::harness::{
    convergence_study, default_battery, faulty_gamma, identity_suite, identity_suite_with_gamma, oracle_bilinear, ConvergenceTable,
    Form, IdentityReport, Method,
};
use fracbvp_core::linalg::{symmetric_part_is_positive_definite, symmetric_part_min_eigenvalue};
use fracbvp_core::petrov::{
    assemble_pg, extrapolated_xi, one_sided_xi, pg_solve, refined_test_space, solve_via_characterization, wellposedness_indicator, Verdict,
    WellposednessReport,
};
use fracbvp_core::spaces::{energy_error, j_seminorm, l2_norm, FemSpace, GridFunction, SeminormSide};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ConfigError, ConfigFile, ProblemSpec};
use crate::report::{num, opt, write_csv, write_json, Assertion, ReportBuilder};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// Relative agreement required between the certificate and the oracle.
pub const ORACLE_AGREEMENT: f64 = 1e-6;

pub struct Context {
    pub out: PathBuf,
    pub force: bool,
    pub seed: u64,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub struct Loaded {
    pub config: ConfigFile,
    pub bytes: Vec<u8>,
}

impl Loaded {
    fn builder(&self, command: &'static str, seed: u64) -> ReportBuilder {
        ReportBuilder::new(command, Some((&self.config, &self.bytes)), seed)
    }
}

fn config_exit(e: ConfigError) -> Result<i32> {
    eprintln!("error: {e}");
    Ok(EXIT_CONFIG)
}

fn classify(xi: f64, cfg: &ConfigFile) -> Verdict {
    if xi.abs() > cfg.tolerances.xi {
        Verdict::Wellposed
    } else if xi.abs() <= cfg.tolerances.xi_violation {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

/// x(1-x)(a + bx + cx²) with a, b, c uniform in [-1, 1].
pub fn random_bubbles(seed: u64, count: usize) -> Vec<PowerTermSum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let [a, b, c]: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
            PowerTermSum::polynomial(&[0.0, a, b - a, c - b, -c])
        })
        .collect()
}

#[derive(Serialize)]
struct VerifyResult {
    gamma_fault_injected: bool,
    random_functions: usize,
    checks: usize,
    failures: usize,
    report: IdentityReport,
}

pub fn verify(ctx: &Context, input: &Loaded) -> Result<i32> {
    let v = &input.config.verify;
    let mut battery = default_battery();
    battery.extend(random_bubbles(ctx.seed, v.random_functions));
    let report = if v.inject_gamma_fault {
        identity_suite_with_gamma(&v.betas, &v.mus, &battery, &faulty_gamma)
    } else {
        identity_suite(&v.betas, &v.mus, &battery)
    };
    let mut b = input.builder("verify", ctx.seed);
    for c in report.failures() {
        b.warnings.push(format!("{} [{}]: defect {:e} > {:e}", c.identity, c.params, c.defect, c.tolerance));
    }
    let code = if report.all_passed() { EXIT_OK } else { EXIT_FAIL };
    let failures = report.failures().count();
    let result = VerifyResult {
        gamma_fault_injected: v.inject_gamma_fault,
        random_functions: v.random_functions,
        checks: report.checks.len(),
        failures,
        report,
    };
    eprintln!("verify: {} checks, {} failures", result.checks, failures);
    write_json(&ctx.path(&input.config.output.report_json), &b.finish(code, result))?;
    Ok(code)
}

#[derive(Serialize, Default)]
struct SolveResult {
    method: Option<Method>,
    n_cells: usize,
    dofs: usize,
    condition: Option<f64>,
    relative_residual: Option<f64>,
    norms: Norms,
    wellposedness: Option<WellposednessReport>,
    characterization: Option<CharacterizationInfo>,
    coercivity_certificate_exists: Option<bool>,
    symmetric_part_min_eigenvalue: Option<f64>,
    manufactured_errors: Option<ManufacturedErrors>,
    error: Option<String>,
}

#[derive(Serialize, Default)]
struct Norms {
    l2: Option<f64>,
    /// J-seminorm of order μ = 1-β/2 (Galerkin) or 1-β (Petrov–Galerkin).
    energy: Option<f64>,
    energy_order: Option<f64>,
}

#[derive(Serialize)]
struct CharacterizationInfo {
    c_l: f64,
    c_r: f64,
    residual: f64,
    system_residual: f64,
}

#[derive(Serialize)]
struct ManufacturedErrors {
    l2: f64,
    energy: f64,
}

fn write_solution(ctx: &Context, cfg: &ConfigFile, spec: &ProblemSpec, u: &GridFunction) -> Result<()> {
    let iu = two_sided_terms(u, spec.beta, spec.theta)?;
    let m = cfg.output.samples;
    let rows = (0..m).map(|i| {
        let x = i as f64 / (m - 1) as f64;
        vec![num(x), num(u.eval(x)), num(iu.eval(x))]
    });
    write_csv(&ctx.path(&cfg.output.solution_csv), &["x", "u", "Iu"], rows)
}

pub fn solve(ctx: &Context, input: &Loaded) -> Result<i32> {
    let cfg = &input.config;
    let spec = match cfg.resolve() {
        Ok(s) => s,
        Err(e) => return config_exit(e),
    };
    let mut b = input.builder("solve", ctx.seed);
    let space = Arc::new(FemSpace::hats(spec.partition.clone()));
    let mut result =
        SolveResult { method: Some(spec.method), n_cells: spec.partition.n_cells(), dofs: space.dof_count(), ..Default::default() };

    if spec.method != Method::Galerkin {
        match wellposedness_indicator(&spec.k, spec.beta, spec.theta, space.clone()) {
            Ok(mut w) => {
                w.verdict = classify(w.xi, cfg);
                w.tolerance = cfg.tolerances.xi;
                w.violation_tolerance = cfg.tolerances.xi_violation;
                let verdict = w.verdict;
                result.wellposedness = Some(w);
                if verdict != Verdict::Wellposed {
                    b.warnings.push(format!("wellposedness verdict: {verdict:?}"));
                }
                if verdict == Verdict::Violated && !ctx.force {
                    result.error = Some("wellposedness condition violated; rerun with --force to solve anyway".into());
                    eprintln!("error: {}", result.error.as_deref().unwrap_or_default());
                    write_json(&ctx.path(&cfg.output.report_json), &b.finish(EXIT_FAIL, result))?;
                    return Ok(EXIT_FAIL);
                }
            }
            Err(e) => b.warnings.push(format!("wellposedness indicator unavailable: {e}")),
        }
    }

    let solved: fracbvp_core::Result<DiscreteSolution> = match spec.method {
        Method::Galerkin => assemble_galerkin(space.clone(), &spec.k, spec.beta, spec.theta, &spec.f).and_then(|sys| {
            let pd = symmetric_part_is_positive_definite(&sys.matrix);
            result.symmetric_part_min_eigenvalue = Some(symmetric_part_min_eigenvalue(&sys.matrix));
            let exists = spec.counterexample_k || !pd;
            result.coercivity_certificate_exists = Some(exists);
            if exists {
                b.warnings.push("coercivity_certificate_exists: B(w, w) < 0 for some admissible w".into());
            }
            galerkin_solve(&sys)
        }),
        Method::Petrov => refined_test_space(&space, spec.test_refinement)
            .and_then(|test| assemble_pg(space.clone(), test, &spec.k, spec.beta, spec.theta, &spec.f))
            .and_then(|sys| pg_solve(&sys)),
        Method::Characterization => solve_via_characterization(&spec.k, spec.beta, spec.theta, &spec.f, space.clone()).map(|c| {
            result.characterization =
                Some(CharacterizationInfo { c_l: c.c_l, c_r: c.c_r, residual: c.residual, system_residual: c.system_residual });
            DiscreteSolution { u: c.u, condition: c.condition, relative_residual: c.system_residual }
        }),
    };

    let sol = match solved {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            result.error = Some(e.to_string());
            write_json(&ctx.path(&cfg.output.report_json), &b.finish(EXIT_FAIL, result))?;
            return Ok(EXIT_FAIL);
        }
    };
    result.condition = Some(sol.condition);
    result.relative_residual = Some(sol.relative_residual);
    let mu = spec.method.energy_order(spec.beta);
    result.norms = Norms {
        l2: Some(l2_norm(&sol.u)?),
        energy: Some(j_seminorm(&sol.u, mu, SeminormSide::Left)?),
        energy_order: Some(mu),
    };
    if let Some(case) = &spec.manufactured {
        let diff: PowerTermSum = {
            let mut t = fracbvp_core::fracops::AsTerms::to_terms(&sol.u);
            for term in case.u_exact.terms() {
                let mut neg = *term;
                neg.coeff = -neg.coeff;
                t.push(neg);
            }
            t
        };
        result.manufactured_errors = Some(ManufacturedErrors { l2: l2_norm(&diff)?, energy: energy_error(&sol.u, &case.u_exact, mu)? });
    }
    write_solution(ctx, cfg, &spec, &sol.u)?;
    write_json(&ctx.path(&cfg.output.report_json), &b.finish(EXIT_OK, result))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CertificateResult {
    certificate: CoercivityCertificate,
    oracle_value: Option<f64>,
    oracle_relative_difference: Option<f64>,
    negative: bool,
}

pub fn counterexample(ctx: &Context, input: Option<&Loaded>, beta: f64, theta: f64) -> Result<i32> {
    if !(beta > 0.0 && beta < 1.0) {
        return config_exit(ConfigError(format!("beta: {beta} must lie in (0, 1)")));
    }
    if !(0.0..=1.0).contains(&theta) {
        return config_exit(ConfigError(format!("theta: {theta} must lie in [0, 1]")));
    }
    let mut b = match input {
        Some(l) => l.builder("counterexample", ctx.seed),
        None => ReportBuilder::new("counterexample", None, ctx.seed),
    };
    let name = input.map(|l| l.config.output.certificate_json.clone()).unwrap_or_else(|| "certificate.json".into());
    let cert = match find_coercivity_violation(beta, theta) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            b.warnings.push(e.to_string());
            write_json(&ctx.path(&name), &b.finish(EXIT_FAIL, Option::<CertificateResult>::None))?;
            return Ok(EXIT_FAIL);
        }
    };
    let oracle = oracle_bilinear(&cert.w, &cert.w, &cert.k, beta, theta, Form::B);
    let (oracle_value, diff) = match oracle {
        Ok(v) => {
            let d = (v - cert.value).abs() / cert.value.abs();
            b.assertions.push(Assertion::at_most("oracle_relative_difference", d, ORACLE_AGREEMENT));
            (Some(v), Some(d))
        }
        Err(e) => {
            b.warnings.push(format!("oracle unavailable: {e}"));
            (None, None)
        }
    };
    let negative = cert.value < 0.0;
    let code = if negative { EXIT_OK } else { EXIT_FAIL };
    eprintln!("counterexample: B(w, w) = {:e}", cert.value);
    let result = CertificateResult { certificate: cert, oracle_value, oracle_relative_difference: diff, negative };
    write_json(&ctx.path(&name), &b.finish(code, result))?;
    Ok(code)
}

#[derive(Serialize)]
struct WellposedResult {
    n_cells: usize,
    report: WellposednessReport,
    one_sided_closed_form: Option<f64>,
    /// Ξ from uniform meshes with n and 2n cells, Richardson-extrapolated.
    xi_extrapolated: Option<Extrapolated>,
}

#[derive(Serialize)]
struct Extrapolated {
    value: f64,
    error_estimate: f64,
    n: usize,
}

pub fn wellposed(ctx: &Context, input: &Loaded) -> Result<i32> {
    let cfg = &input.config;
    if let Err(e) = cfg.check_pg_beta() {
        return config_exit(e);
    }
    let spec = match cfg.resolve() {
        Ok(s) => s,
        Err(e) => return config_exit(e),
    };
    let mut b = input.builder("wellposed", ctx.seed);
    let space = Arc::new(FemSpace::hats(spec.partition.clone()));
    let mut report = match wellposedness_indicator(&spec.k, spec.beta, spec.theta, space) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            b.warnings.push(e.to_string());
            write_json(&ctx.path(&cfg.output.wellposedness_json), &b.finish(EXIT_FAIL, Option::<WellposedResult>::None))?;
            return Ok(EXIT_FAIL);
        }
    };
    report.verdict = classify(report.xi, cfg);
    report.tolerance = cfg.tolerances.xi;
    report.violation_tolerance = cfg.tolerances.xi_violation;
    let one_sided = if spec.theta == 0.0 || spec.theta == 1.0 { one_sided_xi(&spec.k, spec.beta, spec.theta).ok() } else { None };
    let xi_extrapolated = match extrapolated_xi(&spec.k, spec.beta, spec.theta, cfg.mesh.n) {
        Ok((value, error_estimate)) => Some(Extrapolated { value, error_estimate, n: cfg.mesh.n }),
        Err(e) => {
            b.warnings.push(format!("extrapolated Ξ unavailable: {e}"));
            None
        }
    };
    let code = match report.verdict {
        Verdict::Wellposed => EXIT_OK,
        Verdict::Violated => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    };
    eprintln!("wellposed: Ξ = {:e} ({:?})", report.xi, report.verdict);
    let result = WellposedResult { n_cells: spec.partition.n_cells(), report, one_sided_closed_form: one_sided, xi_extrapolated };
    write_json(&ctx.path(&cfg.output.wellposedness_json), &b.finish(code, result))?;
    Ok(code)
}

#[derive(Serialize)]
struct OrdersResult {
    method: Method,
    mu: f64,
    expected_order: f64,
    orders: Vec<Option<f64>>,
    orders_l2: Vec<Option<f64>>,
    last_order: Option<f64>,
    table: ConvergenceTable,
}

pub fn converge(ctx: &Context, input: &Loaded) -> Result<i32> {
    let cfg = &input.config;
    let spec = match cfg.resolve() {
        Ok(s) => s,
        Err(e) => return config_exit(e),
    };
    let Some(case) = &spec.manufactured else {
        return config_exit(ConfigError("f: converge needs a manufactured source".into()));
    };
    let mut b = input.builder("converge", ctx.seed);
    let table = match convergence_study(case, spec.method, &cfg.convergence.n_list) {
        Ok(t) => t,
        Err(fracbvp_core::Error::Parameter(m)) => return config_exit(ConfigError(format!("convergence.n_list: {m}"))),
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_FAIL);
        }
    };
    let rows = table.rows.iter().map(|r| vec![r.n.to_string(), num(r.h), opt(r.err_l2), opt(r.err_energy), opt(r.order)]);
    write_csv(&ctx.path(&cfg.output.convergence_csv), &["n", "h", "err_l2", "err_energy", "order"], rows)?;
    for r in &table.rows {
        if let Some(f) = &r.failure {
            b.warnings.push(format!("n = {}: {f}", r.n));
        }
    }
    let code = if table.rows.iter().any(|r| r.failure.is_some()) { EXIT_FAIL } else { EXIT_OK };
    let result = OrdersResult {
        method: table.method,
        mu: table.mu,
        expected_order: 2.0 - table.mu,
        orders: table.rows.iter().skip(1).map(|r| r.order).collect(),
        orders_l2: table.rows.iter().skip(1).map(|r| r.order_l2).collect(),
        last_order: table.rows.last().and_then(|r| r.order),
        table,
    };
    eprintln!("converge: last order {}", opt(result.last_order));
    write_json(&ctx.path(&cfg.output.orders_json), &b.finish(code, result))?;
    Ok(code)
}

pub fn load(path: &Path) -> std::result::Result<Loaded, ConfigError> {
    crate::config::load(path).map(|(config, bytes)| Loaded { config, bytes })
}
