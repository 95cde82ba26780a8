//! Binary search over an ordered candidate set (BSA), with either the
//! synthesis LMI or PBH rank tests as the feasibility verdict.

use crate::candidates::{
    enumerate_with, pick_median, prune_on_feasible_with, prune_on_infeasible_with, CandidateError,
    CandidateSet, EnumerateOptions,
};
use crate::exec::Execution;
use crate::model::{reduced_bc, DynamicNetwork, LogisticConstraint, ModelError, Selection};
use crate::numerics::{
    condition_number, eigenvalues, hstack, left_null_space, numerical_rank, singular_values,
    to_complex, Complex64, DenseMatrix, NumericsError,
};
use crate::sdp::{ClarabelBackend, ConicBackend, SolverTolerances};
use crate::sofs::{solve_sof_with, SofError, SofOutcome, SofSolution};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Candidates(#[from] CandidateError),
    #[error(transparent)]
    Sof(#[from] SofError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("oracle failed on {selection}: {message}")]
    Oracle { selection: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    Infeasible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based iteration counter `p`.
    pub iteration: usize,
    /// 1-based probe position `q`.
    pub q: usize,
    pub selection: Selection,
    pub verdict: Verdict,
    /// `σ` after pruning.
    pub sigma: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub initial_sigma: usize,
    pub records: Vec<TraceRecord>,
}

impl SearchTrace {
    pub const CSV_HEADER: &'static str = "iteration,q,selection_bits,verdict,sigma";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iteration,
                r.q,
                r.selection.bit_string(),
                r.verdict,
                r.sigma
            ));
        }
        out
    }

    /// `σ₀, σ₁, …` including the initial size.
    pub fn sigmas(&self) -> Vec<usize> {
        std::iter::once(self.initial_sigma)
            .chain(self.records.iter().map(|r| r.sigma))
            .collect()
    }

    pub fn is_strictly_decreasing_to_zero(&self) -> bool {
        let s = self.sigmas();
        s.windows(2).all(|w| w[1] < w[0]) && s.last() == Some(&0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Option<Selection>,
    pub gain: Option<SofSolution>,
    pub trace: SearchTrace,
    pub iterations: usize,
    /// Conic solves of the synthesis LMI.
    pub lmi_solves: usize,
    /// Probed selections that passed the PBH tests, in replay order.
    pub pbh_passed: Vec<Selection>,
    pub diagnostic: Option<String>,
}

impl SearchResult {
    pub fn cardinality(&self) -> Option<usize> {
        self.best.map(|s| s.cardinality())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PbhMethod {
    /// Rank test, switching to the eigenvector test on ill-conditioned
    /// pencils.
    #[default]
    Auto,
    Rank,
    Eigenvector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PbhOptions {
    /// Modes with `Re(λ) ≥ -unstable_margin` are tested.
    pub unstable_margin: f64,
    /// Absolute singular value threshold. `None` derives one from the
    /// matrices under test.
    pub rank_tol: Option<f64>,
    /// Relative part of the derived threshold.
    pub rel_tol: f64,
    pub eigvec_condition: f64,
    pub method: PbhMethod,
}

impl Default for PbhOptions {
    fn default() -> Self {
        Self {
            unstable_margin: 1e-9,
            rank_tol: None,
            rel_tol: 1e-8,
            eigvec_condition: 1e10,
            method: PbhMethod::Auto,
        }
    }
}

impl PbhOptions {
    /// Fix the threshold from the full network so that it does not change
    /// between selections, which keeps the test monotone.
    pub fn calibrated(mut self, net: &DynamicNetwork) -> Result<Self, NumericsError> {
        if self.rank_tol.is_none() {
            let scale = [net.a(), net.b(), net.c()]
                .iter()
                .map(|m| singular_values(*m).map(|s| s.first().copied().unwrap_or(0.0)))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .fold(1.0, f64::max);
            self.rank_tol = Some(self.rel_tol * scale);
        }
        Ok(self)
    }

    fn threshold(&self, a: &DenseMatrix, b: &DenseMatrix) -> Result<f64, NumericsError> {
        if let Some(t) = self.rank_tol {
            return Ok(t);
        }
        let sa = singular_values(a)?.first().copied().unwrap_or(0.0);
        let sb = singular_values(b)?.first().copied().unwrap_or(0.0);
        Ok(self.rel_tol * sa.max(sb).max(1.0))
    }
}

fn unstable_side_modes(a: &DenseMatrix, margin: f64) -> Result<Vec<Complex64>, NumericsError> {
    let spec = eigenvalues(a)?;
    // Conjugate modes give conjugate pencils with identical rank.
    Ok(spec
        .eigenvalues
        .into_iter()
        .filter(|l| l.re >= -margin && l.im >= 0.0)
        .collect())
}

fn mode_is_controllable(
    a: &DenseMatrix,
    b: &DenseMatrix,
    lambda: Complex64,
    tol: f64,
    opts: &PbhOptions,
) -> Result<bool, NumericsError> {
    let n = a.nrows();
    let shifted = to_complex(a) - DMatrixC::identity(n, n) * lambda;
    let pencil = hstack(&shifted, &to_complex(b));
    let use_eigvec = match opts.method {
        PbhMethod::Rank => false,
        PbhMethod::Eigenvector => true,
        PbhMethod::Auto => condition_number(&pencil)? > opts.eigvec_condition,
    };
    if !use_eigvec {
        return Ok(numerical_rank(&pencil, tol)? == n);
    }
    // Every left eigenvector w of λ must see some input: Wᴴ B full row rank.
    let w = left_null_space(&shifted, tol)?;
    if w.ncols() == 0 {
        return Ok(true);
    }
    let wb = w.adjoint() * to_complex(b);
    if wb.ncols() == 0 {
        return Ok(false);
    }
    Ok(numerical_rank(&wb, tol)? == w.ncols())
}

type DMatrixC = nalgebra::DMatrix<Complex64>;

/// Hautus test on the modes with `Re(λ) ≥ -margin`.
pub fn pbh_stabilizable(
    a: &DenseMatrix,
    bq: &DenseMatrix,
    opts: &PbhOptions,
) -> Result<bool, NumericsError> {
    pbh_stabilizable_with(a, bq, opts, Execution::Sequential)
}

pub fn pbh_stabilizable_with(
    a: &DenseMatrix,
    bq: &DenseMatrix,
    opts: &PbhOptions,
    exec: Execution,
) -> Result<bool, NumericsError> {
    if !a.is_square() || bq.nrows() != a.nrows() {
        return Err(NumericsError::Dimension(format!(
            "PBH test with A {:?} and B {:?}",
            a.shape(),
            bq.shape()
        )));
    }
    let tol = opts.threshold(a, bq)?;
    let modes = unstable_side_modes(a, opts.unstable_margin)?;
    let verdicts = exec.map(&modes, |&l| mode_is_controllable(a, bq, l, tol, opts));
    for v in verdicts {
        if !v? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Dual of [`pbh_stabilizable`] on `(Aᵀ, C_qᵀ)`.
pub fn pbh_detectable(
    a: &DenseMatrix,
    cq: &DenseMatrix,
    opts: &PbhOptions,
) -> Result<bool, NumericsError> {
    pbh_stabilizable(&a.transpose(), &cq.transpose(), opts)
}

pub fn pbh_detectable_with(
    a: &DenseMatrix,
    cq: &DenseMatrix,
    opts: &PbhOptions,
    exec: Execution,
) -> Result<bool, NumericsError> {
    pbh_stabilizable_with(&a.transpose(), &cq.transpose(), opts, exec)
}

/// Settings shared by both search variants.
#[derive(Clone)]
pub struct SearchOptions {
    pub tol: SolverTolerances,
    pub enumerate: EnumerateOptions,
    pub pbh: PbhOptions,
    /// Upper bound on stored PBH-passing selections replayed through the
    /// LMI. `None` replays all of them.
    pub replay_limit: Option<usize>,
    pub backend: Arc<dyn ConicBackend>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            tol: SolverTolerances::default(),
            enumerate: EnumerateOptions::default(),
            pbh: PbhOptions::default(),
            replay_limit: None,
            backend: Arc::new(ClarabelBackend::default()),
        }
    }
}

impl fmt::Debug for SearchOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SearchOptions")
            .field("tol", &self.tol)
            .field("enumerate", &self.enumerate)
            .field("pbh", &self.pbh)
            .field("replay_limit", &self.replay_limit)
            .field("backend", &self.backend.name())
            .finish()
    }
}

impl SearchOptions {
    fn execution(&self) -> Execution {
        self.enumerate.execution
    }
}

/// Algorithm 1 over an explicit candidate set with a caller-supplied
/// verdict. Returns the best selection and the trace.
pub fn bsa_over<F>(
    candidates: CandidateSet,
    exec: Execution,
    mut oracle: F,
) -> Result<(Option<Selection>, SearchTrace), SearchError>
where
    F: FnMut(&Selection) -> Result<Verdict, SearchError>,
{
    let mut cs = candidates;
    let mut best = None;
    let mut trace = SearchTrace {
        initial_sigma: cs.sigma(),
        records: Vec::new(),
    };
    let mut p = 0;
    while !cs.is_empty() {
        p += 1;
        let (q, sq) = pick_median(&cs)?;
        let verdict = oracle(&sq)?;
        let next = match verdict {
            Verdict::Feasible => {
                best = Some(sq);
                prune_on_feasible_with(&cs, &sq, exec)
            }
            Verdict::Infeasible => prune_on_infeasible_with(&cs, &sq, exec),
        };
        assert!(next.sigma() < cs.sigma(), "pruning must shrink the set");
        log::debug!("p={p} q={q} S_q={sq} {verdict} sigma={}", next.sigma());
        trace.records.push(TraceRecord {
            iteration: p,
            q,
            selection: sq,
            verdict,
            sigma: next.sigma(),
        });
        cs = next;
    }
    Ok((best, trace))
}

/// BSA with a custom verdict over the candidates of `(net, lc)`.
pub fn bsa_solve<F>(
    net: &DynamicNetwork,
    lc: &LogisticConstraint,
    opts: &SearchOptions,
    oracle: F,
) -> Result<SearchResult, SearchError>
where
    F: FnMut(&Selection) -> Result<Verdict, SearchError>,
{
    let cs = enumerate_with(net.node_count(), lc, &opts.enumerate)?;
    let (best, trace) = bsa_over(cs, opts.execution(), oracle)?;
    Ok(SearchResult {
        best,
        gain: None,
        iterations: trace.records.len(),
        trace,
        lmi_solves: 0,
        pbh_passed: Vec::new(),
        diagnostic: None,
    })
}

/// BSA with the synthesis LMI as the verdict.
pub fn bsa_sdp_solve(
    net: &DynamicNetwork,
    lc: &LogisticConstraint,
    opts: &SearchOptions,
) -> Result<SearchResult, SearchError> {
    let mut solutions: HashMap<Selection, SofSolution> = HashMap::new();
    let mut solves = 0;
    let mut result = bsa_solve(net, lc, opts, |s| {
        let out = solve_sof_with(opts.backend.as_ref(), net, s, &opts.tol)?;
        solves += usize::from(out.solved_lmi());
        Ok(match out {
            SofOutcome::Feasible(sol) => {
                solutions.insert(*s, *sol);
                Verdict::Feasible
            }
            SofOutcome::Infeasible(reason) => {
                log::debug!("{s} infeasible: {reason:?}");
                Verdict::Infeasible
            }
        })
    })?;
    result.lmi_solves = solves;
    result.gain = result.best.and_then(|b| solutions.remove(&b));
    if result.best.is_none() {
        result.diagnostic = Some("no candidate admits a stabilizing static output feedback".into());
    }
    Ok(result)
}

/// PBH verdict for one selection.
pub fn pbh_verdict(
    net: &DynamicNetwork,
    s: &Selection,
    opts: &PbhOptions,
    exec: Execution,
) -> Result<bool, SearchError> {
    let (bq, cq) = reduced_bc(s, net)?;
    Ok(pbh_stabilizable_with(net.a(), &bq, opts, exec)?
        && pbh_detectable_with(net.a(), &cq, opts, exec)?)
}

/// BSA with the PBH tests as the verdict, followed by LMI synthesis over
/// the stored passing probes, smallest first.
pub fn bsa_pbh_solve(
    net: &DynamicNetwork,
    lc: &LogisticConstraint,
    opts: &SearchOptions,
) -> Result<SearchResult, SearchError> {
    let pbh = opts.pbh.calibrated(net)?;
    let exec = opts.execution();
    let mut passed = Vec::new();
    let mut result = bsa_solve(net, lc, opts, |s| {
        if pbh_verdict(net, s, &pbh, exec)? {
            passed.push(*s);
            Ok(Verdict::Feasible)
        } else {
            Ok(Verdict::Infeasible)
        }
    })?;
    passed.sort_by_key(|s| crate::candidates::canonical_key(s.bits()));
    let limit = opts.replay_limit.unwrap_or(usize::MAX);
    for s in passed.iter().take(limit) {
        let out = solve_sof_with(opts.backend.as_ref(), net, s, &opts.tol)?;
        result.lmi_solves += usize::from(out.solved_lmi());
        match out {
            SofOutcome::Feasible(sol) => {
                result.best = Some(*s);
                result.gain = Some(*sol);
                break;
            }
            SofOutcome::Infeasible(reason) => {
                log::info!("{s} passes PBH but synthesis fails: {reason:?}");
            }
        }
    }
    if result.gain.is_none() {
        result.best = None;
        result.diagnostic = Some(if passed.is_empty() {
            "no probed candidate is stabilizable and detectable".into()
        } else {
            format!(
                "{} candidates pass the PBH tests but none admits a static output feedback gain",
                passed.len()
            )
        });
    }
    result.pbh_passed = passed;
    Ok(result)
}
