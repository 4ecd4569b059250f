//! Manufactured solutions, the identity suite, convergence studies and the
//! independent quadrature oracle used for cross-checks.

mod convergence;
mod identities;
mod manufactured;
mod oracle;

pub use convergence::{convergence_study, ConvergenceRow, ConvergenceTable, Method};
pub use identities::{default_battery, faulty_gamma, identity_suite, identity_suite_with_gamma, CheckKind, IdentityCheck, IdentityReport};
pub use manufactured::{manufacture, ManufacturedCase, RESIDUAL_POINTS};
pub use oracle::{oracle_bilinear, Form};
