//! End-to-end experiment runners with report emission.
//!
//! Experiment 1 plants a position shortcut and an orientation coverage
//! hole into a sprite training set, audits the trained model, and verifies
//! targeted correction. Experiment 3 compares factor-sensitivity profiles
//! across a perfect and an entangled colored-shapes generator. Runs are
//! fully seeded: identical configs produce byte-identical reports.

pub mod exp1;
pub mod exp3;
pub mod report;

pub use exp1::{check_exp1, run_exp1, Exp1Config, Exp1Report};
pub use exp3::{check_exp3, run_exp3, Exp3Config, Exp3Report};
pub use report::{emit_exp1, emit_exp3, print_checks, BandCheck};
