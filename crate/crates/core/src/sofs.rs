//! Static output feedback synthesis for a fixed sensor/actuator selection.
//!
//! The selection-reduced conditions are
//!
//! ```text
//! AᵀP + PA + C_qᵀNᵀB_qᵀ + B_qNC_q ≺ 0,   B_qM = PB_q,   P ≻ 0
//! ```
//!
//! and a feasible point yields `u = F y` with `F = M⁻¹N`. Both strict
//! inequalities are homogeneous in `(P, M, N)`, so instead of a pure
//! feasibility problem we solve
//!
//! ```text
//! maximize t  s.t.  LMI ⪯ -(eps_lmi / eps_pd) t I,  P ⪰ t I,  tr P = n_x,
//!                   B_qM = PB_q
//! ```
//!
//! which is feasible and bounded for every selection. The conditions hold
//! iff `t* > 0`; a positive `t` rescales to `P ⪰ eps_pd I`,
//! `LMI ⪯ -eps_lmi I`.

use crate::model::{
    active_input_channels, active_output_channels, reduced_bc, selection_to_matrices,
    DynamicNetwork, ModelError, Selection,
};
use crate::numerics::{
    condition_number, eigenvalues, pseudo_inverse_left, symmetric_eigen_bounds, DenseMatrix,
    NumericsError, SpectrumReport,
};
use crate::sdp::{
    Affine, ClarabelBackend, ConicBackend, ConicProblem, MatExpr, SolverTolerances, VarId,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest accepted condition number of `M` during gain recovery.
pub const MAX_M_CONDITION: f64 = 1e12;

/// Required decay `-α(A_cl)` before a loop counts as stable: `feas_tol`
/// scaled by the largest entry of the matrix.
pub fn stability_margin(m: &DenseMatrix, tol: &SolverTolerances) -> f64 {
    tol.feas_tol * (1.0 + m.amax())
}

#[derive(Debug, Error)]
pub enum SofError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid tolerances: {0}")]
    Tolerances(String),
    #[error("solver could not decide feasibility for {selection}: {diagnostic}")]
    Unknown {
        selection: String,
        diagnostic: String,
    },
}

/// Certificate `(P, M, N)` and the recovered gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SofSolution {
    pub selection: Selection,
    pub p: DenseMatrix,
    pub m: DenseMatrix,
    pub n_mat: DenseMatrix,
    pub f_reduced: DenseMatrix,
    /// `n_u × n_y`, zero outside the active channels.
    pub f_full: DenseMatrix,
    pub spectrum: SpectrumReport,
    /// False when feasibility was settled without a conic solve.
    pub solved_lmi: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum InfeasibleReason {
    /// The maximal margin and its dual bound are both below `feas_tol`.
    Certified,
    /// No active actuator and `A` is not Hurwitz.
    UnstableWithoutInput { abscissa: f64 },
    /// The returned point violates `P ≻ 0` or `B_qM = PB_q`.
    Structure { p_min: f64, coupling: f64 },
    /// The LMI was feasible but `M` could not be inverted reliably.
    GainRecovery { condition: f64 },
    /// The recovered loop is not Hurwitz by the required margin.
    ClosedLoopUnstable { abscissa: f64 },
}

impl InfeasibleReason {
    pub fn solved_lmi(&self) -> bool {
        !matches!(self, InfeasibleReason::UnstableWithoutInput { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SofOutcome {
    Feasible(Box<SofSolution>),
    Infeasible(InfeasibleReason),
}

impl SofOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SofOutcome::Feasible(_))
    }

    pub fn solution(&self) -> Option<&SofSolution> {
        match self {
            SofOutcome::Feasible(s) => Some(s),
            SofOutcome::Infeasible(_) => None,
        }
    }

    pub fn solved_lmi(&self) -> bool {
        match self {
            SofOutcome::Feasible(s) => s.solved_lmi,
            SofOutcome::Infeasible(r) => r.solved_lmi(),
        }
    }
}

/// Conic form of the reduced synthesis problem plus handles to its blocks.
#[derive(Debug, Clone)]
pub struct SofLmi {
    pub problem: ConicProblem,
    pub p: VarId,
    pub m: VarId,
    pub n: VarId,
    /// Margin variable `t`.
    pub t: VarId,
    pub mq: usize,
    pub pq: usize,
}

pub fn build_sof_lmi(
    net: &DynamicNetwork,
    bq: &DenseMatrix,
    cq: &DenseMatrix,
    tol: &SolverTolerances,
) -> Result<SofLmi, SofError> {
    tol.validate().map_err(SofError::Tolerances)?;
    let nx = net.nx();
    if bq.nrows() != nx || cq.ncols() != nx {
        return Err(ModelError::Dimension(format!(
            "B_q is {:?} and C_q is {:?} for n_x = {nx}",
            bq.shape(),
            cq.shape()
        ))
        .into());
    }
    let (mq, pq) = (bq.ncols(), cq.nrows());
    let mut problem = ConicProblem::new();
    let p = problem.add_symmetric("P", nx);
    let m = problem.add_free("M", mq * mq);
    let n = problem.add_free("N", mq * pq);
    let t = problem.add_free("t", 1);
    let pe = problem.sym_matrix(p);
    let me = problem.matrix(m, mq, mq);
    let ne = problem.matrix(n, mq, pq);
    let tv = Affine::scalar(problem.scalar(t, 0));
    let mut ti = MatExpr::zeros(nx, nx);
    let mut trace = Affine::constant(-(nx as f64));
    for i in 0..nx {
        ti.set(i, i, tv.clone());
        trace = trace + Affine::scalar(problem.sym_index(p, i, i));
    }

    let at = net.a().transpose();
    let bnc = &(bq * &ne) * cq;
    let lyap = (&at * &pe) + &(&pe * net.a()) + &bnc + &bnc.transpose();
    let margin = ti.clone().scale(tol.normalized_margin());
    problem.add_lmi("stability", &(lyap.scale(-1.0) - &margin));
    problem.add_lmi("positivity", &(pe.clone() - &ti));
    problem.add_equality("trace", trace);
    problem.add_matrix_equality("input_coupling", &(bq * &me), &(&pe * bq));
    problem.set_objective(-tv);
    Ok(SofLmi {
        problem,
        p,
        m,
        n,
        t,
        mq,
        pq,
    })
}

/// Embed a reduced gain into the full `n_u × n_y` channel grid.
pub fn embed_gain(
    net: &DynamicNetwork,
    s: &Selection,
    f_reduced: &DenseMatrix,
) -> Result<DenseMatrix, SofError> {
    let ins = active_input_channels(s, net);
    let outs = active_output_channels(s, net);
    if f_reduced.shape() != (ins.len(), outs.len()) {
        return Err(ModelError::Dimension(format!(
            "reduced gain is {:?}, selection expects ({}, {})",
            f_reduced.shape(),
            ins.len(),
            outs.len()
        ))
        .into());
    }
    let mut f = DenseMatrix::zeros(net.nu(), net.ny());
    for (r, &i) in ins.iter().enumerate() {
        for (c, &j) in outs.iter().enumerate() {
            f[(i, j)] = f_reduced[(r, c)];
        }
    }
    Ok(f)
}

/// Spectrum of `A + BΠFΓC`.
pub fn verify_closed_loop(
    net: &DynamicNetwork,
    s: &Selection,
    f_full: &DenseMatrix,
) -> Result<SpectrumReport, SofError> {
    if f_full.shape() != (net.nu(), net.ny()) {
        return Err(ModelError::Dimension(format!(
            "gain is {:?}, expected ({}, {})",
            f_full.shape(),
            net.nu(),
            net.ny()
        ))
        .into());
    }
    let sm = selection_to_matrices(s, net)?;
    let closed = net.a() + net.b() * &sm.pi * f_full * &sm.gamma * net.c();
    Ok(eigenvalues(&closed)?)
}

pub fn solve_sof(
    net: &DynamicNetwork,
    s: &Selection,
    tol: &SolverTolerances,
) -> Result<SofOutcome, SofError> {
    solve_sof_with(&ClarabelBackend::default(), net, s, tol)
}

pub fn solve_sof_with(
    backend: &dyn ConicBackend,
    net: &DynamicNetwork,
    s: &Selection,
    tol: &SolverTolerances,
) -> Result<SofOutcome, SofError> {
    tol.validate().map_err(SofError::Tolerances)?;
    let (bq, cq) = reduced_bc(s, net)?;
    let (mq, pq) = (bq.ncols(), cq.nrows());

    // Without inputs the coupling equality is void and the LMI is a plain
    // Lyapunov inequality.
    if mq == 0 {
        let spectrum = eigenvalues(net.a())?;
        if !spectrum.is_stable_by(stability_margin(net.a(), tol)) {
            return Ok(SofOutcome::Infeasible(
                InfeasibleReason::UnstableWithoutInput {
                    abscissa: spectrum.spectral_abscissa,
                },
            ));
        }
        let f_reduced = DenseMatrix::zeros(0, pq);
        return Ok(SofOutcome::Feasible(Box::new(SofSolution {
            selection: *s,
            p: DenseMatrix::zeros(0, 0),
            m: DenseMatrix::zeros(0, 0),
            n_mat: f_reduced.clone(),
            f_full: DenseMatrix::zeros(net.nu(), net.ny()),
            f_reduced,
            spectrum,
            solved_lmi: false,
        })));
    }

    let lmi = build_sof_lmi(net, &bq, &cq, tol)?;
    let sol = backend.solve(&lmi.problem, tol);
    let unknown = |diagnostic: String| SofError::Unknown {
        selection: s.to_string(),
        diagnostic,
    };
    if sol.values.is_empty() {
        return Err(unknown(sol.diagnostic));
    }
    let margin = sol.values[lmi.problem.scalar(lmi.t, 0)];
    // Minimizing -t, so -dual_objective bounds t* from above.
    let upper = -sol.dual_objective;
    // Primal and dual estimates must agree that no positive margin exists.
    if upper.is_finite() && upper.max(margin) <= tol.feas_tol {
        return Ok(SofOutcome::Infeasible(InfeasibleReason::Certified));
    }

    if margin.is_nan() || margin <= tol.feas_tol {
        return Err(unknown(format!(
            "{}; margin {margin:e}, bound {upper:e}",
            sol.diagnostic
        )));
    }
    let p = lmi.problem.extract(lmi.p, &sol.values);
    let n_mat = lmi.problem.extract_matrix(lmi.n, mq, pq, &sol.values);
    match certify(net, s, &bq, &cq, p, n_mat, tol)? {
        Certificate::Valid(sol) => Ok(SofOutcome::Feasible(sol)),
        Certificate::Rejected(reason) => {
            log::debug!(
                "certificate for {s} rejected ({}): {reason:?}",
                sol.diagnostic
            );
            Ok(SofOutcome::Infeasible(reason))
        }
    }
}

enum Certificate {
    Valid(Box<SofSolution>),
    Rejected(InfeasibleReason),
}

/// Relative residual accepted on `B_qM = PB_q` after `M` is recomputed.
const COUPLING_TOL: f64 = 1e-6;

/// Check a candidate `(P, N)` directly: `P ≻ 0`, the coupling equality with
/// `M = B_q⁺PB_q`, gain recovery and closed-loop stability. With the
/// coupling in place the LMI equals `A_clᵀP + PA_cl`; on lightly damped
/// plants its margin sits at solver precision, so the closed loop is the
/// strict test.
fn certify(
    net: &DynamicNetwork,
    s: &Selection,
    bq: &DenseMatrix,
    cq: &DenseMatrix,
    p: DenseMatrix,
    n_mat: DenseMatrix,
    tol: &SolverTolerances,
) -> Result<Certificate, SofError> {
    let p = (&p + p.transpose()) * 0.5;
    let pb = &p * bq;
    let m = pseudo_inverse_left(bq)? * &pb;
    let coupling = (bq * &m - &pb).amax() / (1.0 + pb.amax());
    let (p_min, _) = symmetric_eigen_bounds(&p)?;
    if !(p_min > 0.0 && coupling <= COUPLING_TOL) {
        return Ok(Certificate::Rejected(InfeasibleReason::Structure {
            p_min,
            coupling,
        }));
    }

    let condition = condition_number(&m)?;
    if condition.is_nan() || condition > MAX_M_CONDITION {
        return Ok(Certificate::Rejected(InfeasibleReason::GainRecovery {
            condition,
        }));
    }
    let Some(f_reduced) = m.clone().lu().solve(&n_mat) else {
        return Ok(Certificate::Rejected(InfeasibleReason::GainRecovery {
            condition: f64::INFINITY,
        }));
    };
    let f_full = embed_gain(net, s, &f_reduced)?;
    let spectrum = verify_closed_loop(net, s, &f_full)?;
    let closed = net.a() + bq * &f_reduced * cq;
    if !spectrum.is_stable_by(stability_margin(&closed, tol)) {
        return Ok(Certificate::Rejected(
            InfeasibleReason::ClosedLoopUnstable {
                abscissa: spectrum.spectral_abscissa,
            },
        ));
    }
    Ok(Certificate::Valid(Box::new(SofSolution {
        selection: *s,
        p,
        m,
        n_mat,
        f_reduced,
        f_full,
        spectrum,
        solved_lmi: true,
    })))
}
