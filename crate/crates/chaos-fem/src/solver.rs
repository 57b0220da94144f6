//! Matrix-free conjugate gradients for the chaos system. Plain CG, no
//! preconditioner, so reported iteration counts reflect the raw operator.

use std::fmt;

use crate::error::{Error, Result};
use crate::operator::{ChaosVector, KroneckerChaosOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative 2-norm residual target, in (0, 1).
    pub tol: f64,
    /// None picks 10 * N2 * N_dof.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Breakdown {
    /// p'Ap <= 0: the operator is indefinite or semidefinite.
    NonPositiveCurvature,
    /// p'Ap is positive but at roundoff scale: numerically semidefinite.
    VanishingCurvature,
}

impl fmt::Display for Breakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Breakdown::NonPositiveCurvature => {
                "non-positive curvature: the system is not positive definite \
                 (often S < N2 or degenerate samples)"
            }
            Breakdown::VanishingCurvature => {
                "vanishing curvature: the system is numerically semidefinite \
                 (often S < N2 or degenerate samples)"
            }
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// True relative residual of the returned iterate whenever convergence
    /// was claimed or the solve ended; never the recurrence estimate alone.
    pub final_relative_residual: f64,
    pub converged: bool,
    pub breakdown: Option<Breakdown>,
    /// S < N2 makes the system singular regardless of the samples; set
    /// up front as a cheap necessary-condition check.
    pub rank_warning: bool,
}

/// Solve A x = rhs. Returns the final iterate along with the report; on
/// nonconvergence or breakdown the iterate is the best one reached and the
/// report says so.
pub fn conjugate_gradient(
    op: &KroneckerChaosOperator,
    rhs: &ChaosVector,
    opts: CgOptions,
) -> Result<(ChaosVector, CgReport)> {
    cg_core(op, rhs, opts, |_| {})
}

fn cg_core(
    op: &KroneckerChaosOperator,
    rhs: &ChaosVector,
    opts: CgOptions,
    mut on_iterate: impl FnMut(&ChaosVector),
) -> Result<(ChaosVector, CgReport)> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {} must lie in (0, 1)",
            opts.tol
        )));
    }
    if rhs.n_blocks() != op.n2() || rhs.block_len() != op.n_dof() {
        return Err(Error::InvalidArgument(format!(
            "right-hand side shape {}x{} does not match operator {}x{}",
            rhs.n_blocks(),
            rhs.block_len(),
            op.n2(),
            op.n_dof()
        )));
    }
    let rank_warning = op.s_count() < op.n2();
    let max_iter = opts.max_iter.unwrap_or(10 * op.dim());
    let mut x = ChaosVector::zeros(op.n2(), op.n_dof());
    let b_norm = rhs.norm();
    if b_norm == 0.0 {
        return Ok((
            x,
            CgReport {
                iterations: 0,
                final_relative_residual: 0.0,
                converged: true,
                breakdown: None,
                rank_warning,
            },
        ));
    }
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rs = r.dot(&r);
    let mut iterations = 0;
    let mut restarts = 0;
    let mut converged = false;
    let mut breakdown = None;
    let curvature_floor = op.dim() as f64 * f64::EPSILON;

    while iterations < max_iter {
        let ap = op.apply(&p)?;
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            breakdown = Some(Breakdown::NonPositiveCurvature);
            break;
        }
        if pap <= curvature_floor * p.norm() * ap.norm() {
            breakdown = Some(Breakdown::VanishingCurvature);
            break;
        }
        let alpha = rs / pap;
        x.add_scaled(alpha, &p);
        r.add_scaled(-alpha, &ap);
        iterations += 1;
        on_iterate(&x);
        let rs_new = r.dot(&r);
        if rs_new.sqrt() <= opts.tol * b_norm {
            // The recurrence residual drifts from the true one over long
            // runs; convergence is only claimed against the true residual,
            // restarting from it when the recurrence is optimistic.
            let mut true_r = rhs.clone();
            true_r.add_scaled(-1.0, &op.apply(&x)?);
            if true_r.norm() <= opts.tol * b_norm {
                converged = true;
                break;
            }
            if restarts >= 3 {
                break;
            }
            restarts += 1;
            r = true_r;
            rs = r.dot(&r);
            p = r.clone();
            continue;
        }
        let beta = rs_new / rs;
        rs = rs_new;
        p.scale(beta);
        p.add_scaled(1.0, &r);
    }

    let mut true_r = rhs.clone();
    true_r.add_scaled(-1.0, &op.apply(&x)?);
    let final_relative_residual = true_r.norm() / b_norm;
    Ok((
        x,
        CgReport {
            iterations,
            final_relative_residual,
            converged,
            breakdown,
            rank_warning,
        },
    ))
}
