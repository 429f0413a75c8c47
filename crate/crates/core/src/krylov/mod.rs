//! Krylov machinery: bidiagonalization, projected subproblems and the GBiT driver.

mod bidiag;
mod gbit;
mod subproblem;

pub use bidiag::{BidiagonalMatrix, Bidiagonalization, BreakdownKind, StepOutcome, BREAKDOWN_TOL};
pub use gbit::{
    gbit_solve, lsqr_solve, secant_update_alternative, secant_update_classic, Gbit, GbitConfig,
    GbitOutcome, GbitReport, IterationRecord, IterationView, LsqrOutcome, Termination, UpdateScheme,
    ALTERNATIVE_SLACK, LAMBDA_FLOOR,
};
pub use subproblem::{
    solve_lsqr_subproblem, solve_tikhonov_subproblem, Penalty, PenaltyFactor, SubproblemSolution,
};
