//! Generalized Bidiagonal-Tikhonov: projected Tikhonov regularization on the
//! growing Krylov basis with a secant update of `λ` driven by the
//! discrepancy principle.

use serde::{Deserialize, Serialize};

use super::bidiag::{Bidiagonalization, BreakdownKind, StepOutcome};
use super::subproblem::{solve_lsqr_subproblem, solve_tikhonov_subproblem, Penalty, PenaltyFactor};
use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::vector::{norm, sub};

/// Relative floor applied to `λ` after an update, so a vanishing secant
/// numerator cannot trap the multiplicative recursion at zero.
pub const LAMBDA_FLOOR: f64 = 1e-12;

/// Slack on the stopping test of the alternative scheme.
pub const ALTERNATIVE_SLACK: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateScheme {
    /// Target `ηε` with the known noise norm `ε`.
    Classic,
    /// Target `η·φ_{k−1}(0)`; no noise estimate needed.
    Alternative,
    /// Keep `λ = λ₀` throughout. The classic stopping test applies when
    /// `ε` is given, otherwise the run lasts `max_iter` iterations.
    Fixed,
}

impl std::str::FromStr for UpdateScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(UpdateScheme::Classic),
            "alternative" => Ok(UpdateScheme::Alternative),
            "fixed" => Ok(UpdateScheme::Fixed),
            other => Err(Error::arg(format!("unknown update scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbitConfig {
    pub eta: f64,
    /// Noise norm `ε = ‖e‖`; required by the classic scheme.
    pub epsilon: Option<f64>,
    pub lambda0: f64,
    pub max_iter: usize,
    /// The run stops once the stopping test has held more than this many times.
    pub maxcounter: usize,
    pub scheme: UpdateScheme,
}

impl Default for GbitConfig {
    fn default() -> Self {
        GbitConfig {
            eta: 1.01,
            epsilon: None,
            lambda0: 1.0,
            max_iter: 200,
            maxcounter: 3,
            scheme: UpdateScheme::Classic,
        }
    }
}

impl GbitConfig {
    pub fn classic(epsilon: f64) -> Self {
        GbitConfig {
            epsilon: Some(epsilon),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 1.0) || !self.eta.is_finite() {
            return Err(Error::arg(format!("eta must be ≥ 1, got {}", self.eta)));
        }
        if self.max_iter == 0 {
            return Err(Error::arg("max_iter must be at least 1"));
        }
        if self.maxcounter == 0 {
            return Err(Error::arg("maxcounter must be at least 1"));
        }
        let lambda_ok = match self.scheme {
            UpdateScheme::Fixed => self.lambda0 >= 0.0,
            _ => self.lambda0 > 0.0,
        };
        if !lambda_ok || !self.lambda0.is_finite() {
            return Err(Error::arg(format!("invalid lambda0 {}", self.lambda0)));
        }
        match self.epsilon {
            Some(e) if !(e > 0.0 && e.is_finite()) => {
                Err(Error::arg(format!("epsilon must be positive, got {e}")))
            }
            None if self.scheme == UpdateScheme::Classic => Err(Error::arg(
                "the classic scheme needs the noise norm epsilon for the discrepancy principle ‖b − Ax‖ ≤ η·ε",
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// `φ_k(0)`, the LSQR residual.
    pub phi0: f64,
    /// `φ_k(λ_{k−1})`, the regularized residual.
    pub phi_lambda: f64,
    /// `λ_k`, the value produced by this iteration's update.
    pub lambda: f64,
    pub rel_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    DiscrepancyMet,
    MaxIter,
    Breakdown,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::DiscrepancyMet => "discrepancy_met",
            Termination::MaxIter => "max_iter",
            Termination::Breakdown => "breakdown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbitReport {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    /// Iteration at which the stopping test first held.
    pub first_satisfied: Option<usize>,
    /// Iteration at which the Krylov recursion broke down, if it did.
    pub breakdown_at: Option<usize>,
}

impl GbitReport {
    pub fn final_lambda(&self) -> Option<f64> {
        self.records.last().map(|r| r.lambda)
    }

    /// `λ_{k−1}`, the parameter the returned solution was computed with.
    pub fn solution_lambda(&self, lambda0: f64) -> f64 {
        match self.records.len() {
            0 => lambda0,
            1 => lambda0,
            n => self.records[n - 2].lambda,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GbitOutcome {
    pub solution: Vec<f64>,
    pub report: GbitReport,
}

/// Snapshot handed to observers after every iteration.
pub struct IterationView<'s, 'a> {
    pub record: &'s IterationRecord,
    /// Coefficients of the regularized iterate in the basis `V_k`.
    pub y: &'s [f64],
    basis: &'s Bidiagonalization<'a>,
    x0: &'s [f64],
}

impl IterationView<'_, '_> {
    /// The current iterate `x₀ + V_k y`.
    pub fn iterate(&self) -> Vec<f64> {
        self.basis.iterate(self.x0, self.y)
    }

    pub fn basis(&self) -> &Bidiagonalization<'_> {
        self.basis
    }
}

fn secant(lambda_prev: f64, target: f64, phi0: f64, phi_lambda: f64) -> f64 {
    let denom = phi_lambda - phi0;
    if denom == 0.0 {
        return lambda_prev;
    }
    let next = ((target - phi0) / denom).abs() * lambda_prev;
    if !next.is_finite() {
        return lambda_prev;
    }
    next.max(LAMBDA_FLOOR * lambda_prev)
}

/// `λ_k = |(ηε − φ_k(0)) / (φ_k(λ_{k−1}) − φ_k(0))|·λ_{k−1}`.
///
/// A flat secant (`φ_k(λ_{k−1}) = φ_k(0)`) keeps `λ` unchanged; the result is
/// never below `LAMBDA_FLOOR·λ_{k−1}`.
pub fn secant_update_classic(lambda_prev: f64, phi0: f64, phi_lambda: f64, eta: f64, epsilon: f64) -> f64 {
    secant(lambda_prev, eta * epsilon, phi0, phi_lambda)
}

/// `λ_k = |(η·φ_{k−1}(0) − φ_k(0)) / (φ_k(λ_{k−1}) − φ_k(0))|·λ_{k−1}`.
pub fn secant_update_alternative(
    lambda_prev: f64,
    phi0_prev: f64,
    phi0: f64,
    phi_lambda: f64,
    eta: f64,
) -> f64 {
    secant(lambda_prev, eta * phi0_prev, phi0, phi_lambda)
}

pub struct Gbit<'a> {
    op: &'a dyn LinearOperator,
    config: GbitConfig,
    regularizer: Option<&'a dyn LinearOperator>,
    x0: Option<&'a [f64]>,
    truth: Option<&'a [f64]>,
}

impl<'a> Gbit<'a> {
    pub fn new(op: &'a dyn LinearOperator, config: GbitConfig) -> Self {
        Gbit {
            op,
            config,
            regularizer: None,
            x0: None,
            truth: None,
        }
    }

    /// Penalizes `‖L(x − x₀)‖` instead of `‖x − x₀‖`.
    pub fn with_regularizer(mut self, l: &'a dyn LinearOperator) -> Self {
        self.regularizer = Some(l);
        self
    }

    pub fn with_initial_guess(mut self, x0: &'a [f64]) -> Self {
        self.x0 = Some(x0);
        self
    }

    /// Enables the per-iteration relative error in the report.
    pub fn with_ground_truth(mut self, truth: &'a [f64]) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn config(&self) -> &GbitConfig {
        &self.config
    }

    pub fn solve(&self, b: &[f64]) -> Result<GbitOutcome> {
        self.solve_observed(b, |_| {})
    }

    pub fn solve_observed(
        &self,
        b: &[f64],
        mut observe: impl FnMut(&IterationView<'_, '_>),
    ) -> Result<GbitOutcome> {
        let cfg = &self.config;
        cfg.validate()?;
        let (m, n) = self.op.shape();
        if b.len() != m {
            return Err(Error::shape(format!(
                "right-hand side of length {} for an operator with {m} rows",
                b.len()
            )));
        }
        let zeros;
        let x0 = match self.x0 {
            Some(x0) if x0.len() != n => {
                return Err(Error::shape(format!(
                    "initial guess of length {} for {n} unknowns",
                    x0.len()
                )))
            }
            Some(x0) => x0,
            None => {
                zeros = vec![0.0; n];
                &zeros
            }
        };
        let truth_norm = match self.truth {
            Some(t) if t.len() != n => {
                return Err(Error::shape(format!(
                    "ground truth of length {} for {n} unknowns",
                    t.len()
                )))
            }
            Some(t) => {
                let tn = norm(t);
                if tn == 0.0 {
                    return Err(Error::arg("ground truth has zero norm"));
                }
                Some(tn)
            }
            None => None,
        };
        if let Some(l) = self.regularizer {
            if l.cols() != n {
                return Err(Error::shape(format!(
                    "regularizer with {} columns for {n} unknowns",
                    l.cols()
                )));
            }
        }

        let r0 = sub(b, &self.op.apply(x0)?);
        let r0_norm = norm(&r0);
        let rel_error = |x: &[f64]| -> Option<f64> {
            self.truth
                .zip(truth_norm)
                .map(|(t, tn)| crate::vector::distance(x, t) / tn)
        };
        if r0_norm == 0.0 {
            return Ok(GbitOutcome {
                solution: x0.to_vec(),
                report: GbitReport {
                    records: Vec::new(),
                    termination: Termination::DiscrepancyMet,
                    first_satisfied: None,
                    breakdown_at: None,
                },
            });
        }

        let mut basis = Bidiagonalization::new(self.op, &r0)?;
        let mut factor = self.regularizer.map(|_| PenaltyFactor::new());
        let eta = cfg.eta;
        let mut lambda = cfg.lambda0;
        let mut phi0_prev = r0_norm;
        let mut counter = 0usize;
        let mut records = Vec::new();
        let mut y: Vec<f64> = Vec::new();
        let mut first_satisfied = None;
        let mut breakdown_at = None;
        let mut termination = None;

        for iter in 1..=cfg.max_iter {
            let frozen = basis.breakdown().is_some();
            if !frozen {
                let outcome = basis.step();
                if let StepOutcome::Breakdown(kind) = outcome {
                    breakdown_at = Some(iter);
                    if kind == BreakdownKind::Alpha && basis.k() == 0 {
                        termination = Some(Termination::Breakdown);
                        break;
                    }
                }
                if let (Some(l), Some(f)) = (self.regularizer, factor.as_mut()) {
                    if f.columns() < basis.k() {
                        f.push(l.apply(basis.v().last().unwrap())?);
                    }
                }
                if matches!(outcome, StepOutcome::Breakdown(BreakdownKind::Alpha)) {
                    // Nothing new was added; the current iterate stands unless λ can still move.
                    if cfg.scheme == UpdateScheme::Fixed {
                        break;
                    }
                }
            } else if cfg.scheme == UpdateScheme::Fixed {
                break;
            }

            let bmat = basis.matrix();
            let lsqr = solve_lsqr_subproblem(bmat, r0_norm)?;
            let penalty = match factor.as_ref() {
                Some(f) => Penalty::Factored(f),
                None => Penalty::Identity,
            };
            let reg = solve_tikhonov_subproblem(bmat, &penalty, lambda, r0_norm)?;
            let (phi0, phi_lambda) = (lsqr.residual, reg.residual);

            let satisfied = match cfg.scheme {
                UpdateScheme::Classic => phi_lambda < eta * cfg.epsilon.unwrap(),
                UpdateScheme::Alternative => phi_lambda < ALTERNATIVE_SLACK * eta * phi0_prev,
                UpdateScheme::Fixed => cfg.epsilon.is_some_and(|e| phi_lambda < eta * e),
            };
            let lambda_next = match cfg.scheme {
                UpdateScheme::Classic => {
                    secant_update_classic(lambda, phi0, phi_lambda, eta, cfg.epsilon.unwrap())
                }
                UpdateScheme::Alternative => {
                    secant_update_alternative(lambda, phi0_prev, phi0, phi_lambda, eta)
                }
                UpdateScheme::Fixed => lambda,
            };
            y = reg.y;
            let rel = if self.truth.is_some() {
                rel_error(&basis.iterate(x0, &y))
            } else {
                None
            };
            records.push(IterationRecord {
                iter,
                phi0,
                phi_lambda,
                lambda: lambda_next,
                rel_error: rel,
            });
            observe(&IterationView {
                record: records.last().unwrap(),
                y: &y,
                basis: &basis,
                x0,
            });

            if satisfied {
                counter += 1;
                first_satisfied.get_or_insert(iter);
                if counter > cfg.maxcounter {
                    termination = Some(Termination::DiscrepancyMet);
                    break;
                }
            }
            let stalled = frozen && lambda_next == lambda;
            phi0_prev = phi0;
            lambda = lambda_next;
            if stalled {
                break;
            }
        }

        let termination = termination.unwrap_or(if breakdown_at.is_some() && first_satisfied.is_none() {
            Termination::Breakdown
        } else {
            Termination::MaxIter
        });
        let solution = if y.is_empty() {
            x0.to_vec()
        } else {
            basis.iterate(x0, &y)
        };
        Ok(GbitOutcome {
            solution,
            report: GbitReport {
                records,
                termination,
                first_satisfied,
                breakdown_at,
            },
        })
    }
}

/// Runs GBiT with the identity regularizer and `x₀ = 0`.
pub fn gbit_solve(op: &dyn LinearOperator, b: &[f64], config: GbitConfig) -> Result<GbitOutcome> {
    Gbit::new(op, config).solve(b)
}

#[derive(Debug, Clone)]
pub struct LsqrOutcome {
    pub solution: Vec<f64>,
    /// `φ_k(0)` for every iteration performed.
    pub residuals: Vec<f64>,
    /// Relative error per iteration, when a ground truth was supplied.
    pub rel_errors: Option<Vec<f64>>,
    pub breakdown: bool,
}

impl LsqrOutcome {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    /// Smallest relative error over the run and the iteration it occurred at.
    pub fn best_rel_error(&self) -> Option<(usize, f64)> {
        self.rel_errors.as_ref().and_then(|e| {
            e.iter()
                .copied()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, v)| (i + 1, v))
        })
    }
}

/// Plain LSQR (no regularization, no stopping test) from `x₀ = 0`.
pub fn lsqr_solve(
    op: &dyn LinearOperator,
    b: &[f64],
    iters: usize,
    truth: Option<&[f64]>,
) -> Result<LsqrOutcome> {
    let (m, n) = op.shape();
    if b.len() != m {
        return Err(Error::shape(format!(
            "right-hand side of length {} for an operator with {m} rows",
            b.len()
        )));
    }
    let truth_norm = match truth {
        Some(t) if t.len() != n => {
            return Err(Error::shape(format!(
                "ground truth of length {} for {n} unknowns",
                t.len()
            )))
        }
        Some(t) if norm(t) == 0.0 => return Err(Error::arg("ground truth has zero norm")),
        Some(t) => Some(norm(t)),
        None => None,
    };
    let x0 = vec![0.0; n];
    let r0_norm = norm(b);
    if r0_norm == 0.0 {
        return Ok(LsqrOutcome {
            solution: x0,
            residuals: Vec::new(),
            rel_errors: truth.map(|_| Vec::new()),
            breakdown: false,
        });
    }
    let mut basis = Bidiagonalization::new(op, b)?;
    let mut residuals = Vec::with_capacity(iters);
    let mut rel_errors = truth.map(|_| Vec::with_capacity(iters));
    let mut y = Vec::new();
    let mut breakdown = false;
    for _ in 0..iters {
        if basis.breakdown().is_some() {
            break;
        }
        if let StepOutcome::Breakdown(kind) = basis.step() {
            breakdown = true;
            if kind == BreakdownKind::Alpha {
                break;
            }
        }
        let sol = solve_lsqr_subproblem(basis.matrix(), r0_norm)?;
        residuals.push(sol.residual);
        y = sol.y;
        if let (Some(errs), Some(t), Some(tn)) = (rel_errors.as_mut(), truth, truth_norm) {
            errs.push(crate::vector::distance(&basis.iterate(&x0, &y), t) / tn);
        }
    }
    let solution = if y.is_empty() {
        x0
    } else {
        basis.iterate(&x0, &y)
    };
    Ok(LsqrOutcome {
        solution,
        residuals,
        rel_errors,
        breakdown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::Identity;

    #[test]
    fn classic_update_examples() {
        assert_eq!(secant_update_classic(2.0, 3.0, 5.0, 1.0, 1.0), 2.0);
        // Zero numerator → floor.
        assert_eq!(secant_update_classic(2.0, 1.0, 5.0, 1.0, 1.0), 2.0 * LAMBDA_FLOOR);
        // φ_λ = ηε is a fixed point.
        assert_eq!(secant_update_classic(3.0, 0.25, 1.5, 1.5, 1.0), 3.0);
        // Flat secant.
        assert_eq!(secant_update_classic(3.0, 0.7, 0.7, 1.01, 1.0), 3.0);
    }

    #[test]
    fn alternative_update_examples() {
        assert_eq!(secant_update_alternative(4.0, 2.0, 1.5, 2.5, 1.0), 2.0);
        assert_eq!(secant_update_alternative(4.0, 1.5, 1.5, 1.5, 1.0), 4.0);
    }

    #[test]
    fn classic_without_epsilon_is_rejected() {
        let a = Identity::new(3);
        let err = gbit_solve(&a, &[1.0, 2.0, 3.0], GbitConfig::default()).unwrap_err();
        assert!(err.to_string().contains("epsilon"), "{err}");
    }

    #[test]
    fn config_validation() {
        let bad = [
            GbitConfig { eta: 0.9, ..GbitConfig::classic(1.0) },
            GbitConfig { lambda0: 0.0, ..GbitConfig::classic(1.0) },
            GbitConfig { max_iter: 0, ..GbitConfig::classic(1.0) },
            GbitConfig { maxcounter: 0, ..GbitConfig::classic(1.0) },
            GbitConfig::classic(0.0),
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        let fixed_zero = GbitConfig {
            scheme: UpdateScheme::Fixed,
            lambda0: 0.0,
            epsilon: None,
            ..Default::default()
        };
        assert!(fixed_zero.validate().is_ok());
    }

    #[test]
    fn identity_lsqr_recovers_rhs_in_one_step() {
        let a = Identity::new(4);
        let b = [1.0, -2.0, 0.5, 3.0];
        let out = lsqr_solve(&a, &b, 5, None).unwrap();
        assert_eq!(out.iterations(), 1);
        for (x, e) in out.solution.iter().zip(&b) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_rhs_returns_initial_guess() {
        let a = Identity::new(2);
        let out = gbit_solve(&a, &[0.0, 0.0], GbitConfig::classic(1.0)).unwrap();
        assert_eq!(out.solution, vec![0.0, 0.0]);
        assert_eq!(out.report.termination, Termination::DiscrepancyMet);
    }

    #[test]
    fn range_orthogonal_rhs_breaks_down_immediately() {
        let a = crate::dense::DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let out = gbit_solve(&a, &[0.0, 1.0], GbitConfig::classic(0.1)).unwrap();
        assert_eq!(out.report.termination, Termination::Breakdown);
        assert!(out.report.records.is_empty());
        assert_eq!(out.solution, vec![0.0]);
    }
}
