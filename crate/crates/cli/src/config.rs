//! JSON problem configuration.

use std::path::Path;

use fracbvp_core::classical::{DiffusivityField, DiffusivityKind};
use fracbvp_core::fracops::{PowerTerm, PowerTermSum};
use fracbvp_core::galerkin::find_coercivity_violation;
use fracbvp_core::harness::{manufacture, ManufacturedCase, Method};
use fracbvp_core::spaces::{build_partition, Grading, Partition};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub beta: f64,
    pub theta: f64,
    #[serde(rename = "K", alias = "k")]
    pub k: KConfig,
    #[serde(default)]
    pub f: SourceConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_method() -> Method {
    Method::Petrov
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KConfig {
    Constant { value: f64 },
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    Polynomial { coeffs: Vec<f64> },
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
    /// Three-piece diffusivity from the coercivity counterexample at the
    /// configured β and θ.
    Counterexample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Constant { value: f64 },
    Polynomial { coeffs: Vec<f64> },
    TermSum { terms: Vec<PowerTerm> },
    /// f = -D(K D I^β_θ u) for the polynomial u with these coefficients.
    Manufactured { u_exact: Vec<f64> },
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_grading")]
    pub grading: Grading,
    /// 1: test space equals trial space; 2: test mesh halved, least squares.
    #[serde(default = "one")]
    pub test_refinement: usize,
    /// Insert the breakpoints of K as mesh nodes.
    #[serde(default = "yes")]
    pub align_to_breaks: bool,
}

fn default_n() -> usize {
    64
}
fn default_grading() -> Grading {
    Grading::Uniform
}
fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { n: default_n(), grading: default_grading(), test_refinement: 1, align_to_breaks: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "xi_tol")]
    pub xi: f64,
    #[serde(default = "xi_violation_tol")]
    pub xi_violation: f64,
}

fn xi_tol() -> f64 {
    fracbvp_core::petrov::XI_TOL
}
fn xi_violation_tol() -> f64 {
    fracbvp_core::petrov::XI_VIOLATION_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { xi: xi_tol(), xi_violation: xi_violation_tol() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
}

fn default_n_list() -> Vec<usize> {
    vec![16, 32, 64, 128, 256]
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { n_list: default_n_list() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default = "default_mus")]
    pub mus: Vec<f64>,
    /// Extra random bubbles x(1-x)(a + bx + cx²) drawn from --seed.
    #[serde(default = "default_random")]
    pub random_functions: usize,
    /// Negative control: run the closed forms with a perturbed Gamma function.
    #[serde(default)]
    pub inject_gamma_fault: bool,
}

fn default_betas() -> Vec<f64> {
    vec![0.2, 0.5, 0.8]
}
fn default_mus() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}
fn default_random() -> usize {
    4
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { betas: default_betas(), mus: default_mus(), random_functions: default_random(), inject_gamma_fault: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "report_json")]
    pub report_json: String,
    #[serde(default = "solution_csv")]
    pub solution_csv: String,
    #[serde(default = "convergence_csv")]
    pub convergence_csv: String,
    #[serde(default = "orders_json")]
    pub orders_json: String,
    #[serde(default = "certificate_json")]
    pub certificate_json: String,
    #[serde(default = "wellposedness_json")]
    pub wellposedness_json: String,
}

fn default_samples() -> usize {
    201
}
fn report_json() -> String {
    "report.json".into()
}
fn solution_csv() -> String {
    "solution.csv".into()
}
fn convergence_csv() -> String {
    "convergence.csv".into()
}
fn orders_json() -> String {
    "orders.json".into()
}
fn certificate_json() -> String {
    "certificate.json".into()
}
fn wellposedness_json() -> String {
    "wellposedness.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            report_json: report_json(),
            solution_csv: solution_csv(),
            convergence_csv: convergence_csv(),
            orders_json: orders_json(),
            certificate_json: certificate_json(),
            wellposedness_json: wellposedness_json(),
        }
    }
}

/// Configuration problem, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn field(name: &str, e: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{name}: {e}"))
}

/// Reads and parses a config file; the raw bytes are returned for hashing.
pub fn load(path: &Path) -> Result<(ConfigFile, Vec<u8>), ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let cfg = parse(&bytes).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))?;
    Ok((cfg, bytes))
}

pub fn parse(bytes: &[u8]) -> Result<ConfigFile, ConfigError> {
    let cfg: ConfigFile = serde_json::from_slice(bytes)
        .map_err(|e| ConfigError(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Fully resolved problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub beta: f64,
    pub theta: f64,
    pub k: DiffusivityField,
    pub f: PowerTermSum,
    pub manufactured: Option<ManufacturedCase>,
    pub partition: Partition,
    pub method: Method,
    pub test_refinement: usize,
    pub counterexample_k: bool,
}

impl ConfigFile {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(field("beta", format!("{} must lie in (0, 1)", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(field("theta", format!("{} must lie in [0, 1]", self.theta)));
        }
        if self.mesh.n < 2 {
            return Err(field("mesh.n", "at least 2 cells are required"));
        }
        if !matches!(self.mesh.test_refinement, 1 | 2) {
            return Err(field("mesh.test_refinement", "must be 1 or 2"));
        }
        if self.tolerances.xi_violation > self.tolerances.xi || self.tolerances.xi_violation < 0.0 {
            return Err(field("tolerances", "need 0 ≤ xi_violation ≤ xi"));
        }
        if self.verify.betas.iter().chain(&self.verify.mus).any(|v| !(*v > 0.0 && *v < 1.0)) {
            return Err(field("verify", "orders must lie in (0, 1)"));
        }
        if self.output.samples < 2 {
            return Err(field("output.samples", "at least 2 samples are required"));
        }
        Ok(())
    }

    /// Petrov–Galerkin paths need β < 1/2.
    pub fn check_pg_beta(&self) -> Result<(), ConfigError> {
        if self.beta >= 0.5 {
            return Err(field("beta", format!("{} must be below 1/2 for the Petrov–Galerkin formulation", self.beta)));
        }
        Ok(())
    }

    pub fn diffusivity(&self) -> Result<DiffusivityField, ConfigError> {
        let kind = match &self.k {
            KConfig::Constant { value } => DiffusivityKind::Constant { value: *value },
            KConfig::PiecewiseConstant { breaks, values } => {
                DiffusivityKind::PiecewiseConstant { breaks: breaks.clone(), values: values.clone() }
            }
            KConfig::Polynomial { coeffs } => DiffusivityKind::Polynomial { coeffs: coeffs.clone() },
            KConfig::Tabulated { nodes, values } => DiffusivityKind::Tabulated { nodes: nodes.clone(), values: values.clone() },
            KConfig::Counterexample => {
                return find_coercivity_violation(self.beta, self.theta).map(|c| c.k).map_err(|e| field("K", e));
            }
        };
        DiffusivityField::new(kind).map_err(|e| field("K", e))
    }

    pub fn resolve(&self) -> Result<ProblemSpec, ConfigError> {
        self.validate()?;
        if self.method != Method::Galerkin {
            self.check_pg_beta()?;
        }
        let k = self.diffusivity()?;
        let (f, manufactured) = match &self.f {
            SourceConfig::Constant { value } => (PowerTermSum::constant(*value), None),
            SourceConfig::Polynomial { coeffs } => (PowerTermSum::polynomial(coeffs), None),
            SourceConfig::TermSum { terms } => (PowerTermSum::from_terms(terms.clone()), None),
            SourceConfig::Manufactured { u_exact } => {
                let case = manufacture(&PowerTermSum::polynomial(u_exact), &k, self.beta, self.theta).map_err(|e| field("f", e))?;
                (case.f.clone(), Some(case))
            }
        };
        let mut partition = build_partition(self.mesh.n, self.mesh.grading).map_err(|e| field("mesh", e))?;
        if self.mesh.align_to_breaks && !k.breaks().is_empty() {
            partition = partition.with_extra_nodes(&k.breaks()).map_err(|e| field("mesh", e))?;
        }
        Ok(ProblemSpec {
            beta: self.beta,
            theta: self.theta,
            k,
            f,
            manufactured,
            partition,
            method: self.method,
            test_refinement: self.mesh.test_refinement,
            counterexample_k: matches!(self.k, KConfig::Counterexample),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"beta": 0.3, "theta": 0.5, "K": {"type": "constant", "value": 1.0}}"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse(MINIMAL.as_bytes()).unwrap();
        assert_eq!(c.mesh.n, 64);
        assert_eq!(c.method, Method::Petrov);
        assert_eq!(c.f, SourceConfig::Constant { value: 1.0 });
    }

    #[test]
    fn echo_round_trips() {
        let c = parse(MINIMAL.as_bytes()).unwrap();
        let echo = serde_json::to_vec(&c).unwrap();
        assert_eq!(parse(&echo).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse(br#"{"beta": 1.5, "theta": 0.5, "K": {"type": "constant", "value": 1.0}}"#).unwrap_err();
        assert!(e.0.starts_with("beta"), "{}", e.0);
        let e = parse(b"{\"beta\": 0.3,\n \"theta\": }").unwrap_err();
        assert!(e.0.contains("line 2"), "{}", e.0);
        let e = parse(br#"{"beta": 0.3, "theta": 0.5, "K": {"type": "constant", "value": 1.0}, "bogus": 1}"#).unwrap_err();
        assert!(e.0.contains("bogus"), "{}", e.0);
    }

    #[test]
    fn petrov_needs_small_beta() {
        let c = parse(br#"{"beta": 0.7, "theta": 0.5, "K": {"type": "constant", "value": 1.0}}"#).unwrap();
        assert!(c.resolve().is_err());
    }

    #[test]
    fn counterexample_k_aligns_mesh() {
        let c = parse(br#"{"beta": 0.5, "theta": 0.25, "K": {"type": "counterexample"}, "method": "galerkin", "mesh": {"n": 8}}"#).unwrap();
        let p = c.resolve().unwrap();
        assert!(p.counterexample_k);
        for b in p.k.breaks() {
            assert!(p.partition.nodes().iter().any(|&x| (x - b).abs() < 1e-12));
        }
    }
}
