//! Big-M mixed-integer SDP for the selection problem and a best-bound
//! branch-and-bound over its binaries.
//!
//! Strict inequalities follow the same scaling as the synthesis LMI:
//! `tr P = n_x`, `P ⪰ t I` and `LMI ⪯ -(eps_lmi / eps_pd) t I`. The big-M
//! constants are therefore measured in the units of that scaled certificate.

use crate::model::{DynamicNetwork, LogisticConstraint, ModelError, Selection};
use crate::numerics::{pseudo_inverse_left, DenseMatrix, NumericsError};
use crate::sdp::{
    Affine, ClarabelBackend, ConicBackend, ConicProblem, ConicStatus, MatExpr, SolverTolerances,
    VarId,
};
use crate::sofs::{solve_sof_with, SofError, SofOutcome, SofSolution};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MisdpError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sof(#[from] SofError),
    #[error("invalid big-M constants: {0}")]
    Constants(String),
    #[error("node limit of {0} reached")]
    NodeLimit(usize),
    #[error("selection {selection} is infeasible for the synthesis LMI")]
    Unconfirmed { selection: String },
}

/// `L1`, `L2`, `L3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigM {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl Default for BigM {
    fn default() -> Self {
        Self {
            l1: 1e5,
            l2: 1e5,
            l3: 1e5,
        }
    }
}

impl BigM {
    pub fn validate(&self) -> Result<(), MisdpError> {
        for (name, v) in [("L1", self.l1), ("L2", self.l2), ("L3", self.l3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(MisdpError::Constants(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

/// Counts of scalar one-sided inequalities per big-M family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilySizes {
    pub gain: usize,
    pub coupling: usize,
    pub range: usize,
}

#[derive(Debug, Clone)]
pub struct MisdpModel {
    pub problem: ConicProblem,
    pub nodes: usize,
    pub consts: BigM,
    pub pi: VarId,
    pub gamma: VarId,
    pub p: VarId,
    pub n: VarId,
    pub m: VarId,
    pub theta: VarId,
    pub omega: VarId,
    pub xi: VarId,
    /// Margin variable, present in [`MisdpObjective::Margin`] models.
    pub t: Option<VarId>,
    /// Selection substituted for the binaries, for [`build_misdp_pinned`].
    pub pinned: Option<Selection>,
    pub families: FamilySizes,
}

/// What the conic model optimizes.
///
/// Both variants fix the scale of the homogeneous certificate with
/// `tr P = n_x` and pose `P ⪰ t I`, `LMI ⪯ -(eps_lmi/eps_pd) t I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MisdpObjective {
    /// Minimize `Σπ + Σγ` with `t = feas_tol`; the branch-and-bound model.
    Cardinality,
    /// Maximize `t`; decides feasibility at fixed binaries.
    Margin,
}

impl MisdpModel {
    /// Scalar index of binary `k` in `(π, γ)` order.
    pub fn binary_index(&self, k: usize) -> usize {
        if k < self.nodes {
            self.problem.scalar(self.pi, k)
        } else {
            self.problem.scalar(self.gamma, k - self.nodes)
        }
    }

    pub fn binary_count(&self) -> usize {
        2 * self.nodes
    }

    /// Copy of the problem with some binaries pinned.
    pub fn with_fixings(&self, fixings: &[Option<bool>]) -> ConicProblem {
        assert_eq!(fixings.len(), self.binary_count());
        let mut prob = self.problem.clone();
        for (k, f) in fixings.iter().enumerate() {
            if let Some(v) = f {
                let idx = self.binary_index(k);
                prob.add_equality(
                    format!("fix[{k}]"),
                    Affine::scalar(idx) - Affine::constant(f64::from(u8::from(*v))),
                );
            }
        }
        prob
    }

    /// Copy with every binary pinned to the given selection.
    pub fn fixed_at(&self, s: &Selection) -> ConicProblem {
        let fixings: Vec<Option<bool>> = (0..self.binary_count())
            .map(|k| Some(s.bits() >> k & 1 == 1))
            .collect();
        self.with_fixings(&fixings)
    }
}

/// `|e| ≤ bound` as two one-sided inequalities.
fn add_abs_le(prob: &mut ConicProblem, name: &str, e: &Affine, bound: &Affine) {
    prob.add_inequality(format!("{name}+"), bound.clone() - e.clone());
    prob.add_inequality(format!("{name}-"), bound.clone() + e.clone());
}

pub fn build_misdp(
    net: &DynamicNetwork,
    lc: &LogisticConstraint,
    consts: &BigM,
    tol: &SolverTolerances,
) -> Result<MisdpModel, MisdpError> {
    build_misdp_as(net, lc, consts, tol, MisdpObjective::Cardinality)
}

pub fn build_misdp_as(
    net: &DynamicNetwork,
    lc: &LogisticConstraint,
    consts: &BigM,
    tol: &SolverTolerances,
    kind: MisdpObjective,
) -> Result<MisdpModel, MisdpError> {
    assemble(net, lc, consts, tol, kind, None)
}

/// Margin model with the binaries of `s` written into the disjunctive
/// families as constants rather than pinned through equalities. A bound
/// such as `L·(1 - π_i)` at `π_i = 1` is then an exact zero instead of a
/// cancellation between two `L`-sized terms.
pub fn build_misdp_pinned(
    net: &DynamicNetwork,
    consts: &BigM,
    tol: &SolverTolerances,
    s: &Selection,
) -> Result<MisdpModel, MisdpError> {
    if s.node_count() != net.node_count() {
        return Err(ModelError::Dimension(format!(
            "selection over {} nodes for a {}-node network",
            s.node_count(),
            net.node_count()
        ))
        .into());
    }
    let mut model = assemble(
        net,
        &LogisticConstraint::none(),
        consts,
        tol,
        MisdpObjective::Margin,
        Some(s),
    )?;
    model.problem = model.fixed_at(s);
    Ok(model)
}

fn assemble(
    net: &DynamicNetwork,
    lc: &LogisticConstraint,
    consts: &BigM,
    tol: &SolverTolerances,
    kind: MisdpObjective,
    pinned: Option<&Selection>,
) -> Result<MisdpModel, MisdpError> {
    consts.validate()?;
    tol.validate().map_err(SofError::Tolerances)?;
    let nodes = net.node_count();
    lc.check_nodes(nodes)?;
    let (nx, nu, ny) = (net.nx(), net.nu(), net.ny());
    let (a, b, c) = (net.a(), net.b(), net.c());
    let b_pinv = pseudo_inverse_left(b)?;
    let range_proj = DenseMatrix::identity(nx, nx) - b * &b_pinv;

    let mut prob = ConicProblem::new();
    let pi = prob.add_nonnegative("pi", nodes);
    let gamma = prob.add_nonnegative("gamma", nodes);
    let p = prob.add_symmetric("P", nx);
    let n = prob.add_free("N", nu * ny);
    let m = prob.add_free("M", nu * nu);
    let theta = prob.add_free("Theta", nu * ny);
    let omega = prob.add_free("Omega", nu * nu);
    let xi = prob.add_free("Xi", nx * nu);

    let pe = prob.sym_matrix(p);
    let ne = prob.matrix(n, nu, ny);
    let me = prob.matrix(m, nu, nu);
    let th = prob.matrix(theta, nu, ny);
    let om = prob.matrix(omega, nu, nu);
    let xe = prob.matrix(xi, nx, nu);

    let binary = |prob: &ConicProblem, id: VarId, k: usize| match pinned {
        Some(s) => {
            let bit = if id == pi { k } else { nodes + k };
            Affine::constant(f64::from(u8::from(s.bits() >> bit & 1 == 1)))
        }
        None => Affine::scalar(prob.scalar(id, k)),
    };
    let pi_of = |prob: &ConicProblem, ch: usize| binary(prob, pi, net.actuator_owner()[ch]);
    let gamma_of = |prob: &ConicProblem, ch: usize| binary(prob, gamma, net.sensor_owner()[ch]);
    let one = || Affine::constant(1.0);

    let mut cardinality = Affine::constant(0.0);
    for k in 0..nodes {
        cardinality = cardinality
            + Affine::scalar(prob.scalar(pi, k))
            + Affine::scalar(prob.scalar(gamma, k));
        for (name, id) in [("pi", pi), ("gamma", gamma)] {
            let v = Affine::scalar(prob.scalar(id, k));
            prob.add_inequality(format!("{name}[{k}]<=1"), one() - v);
        }
    }
    let (t, floor) = match kind {
        MisdpObjective::Cardinality => {
            prob.set_objective(cardinality);
            (None, Affine::constant(tol.feas_tol))
        }
        MisdpObjective::Margin => {
            let t = prob.add_free("t", 1);
            let tv = Affine::scalar(prob.scalar(t, 0));
            prob.set_objective(-tv.clone());
            (Some(t), tv)
        }
    };
    let mut floor_i = MatExpr::zeros(nx, nx);
    let mut trace = Affine::constant(-(nx as f64));
    for i in 0..nx {
        floor_i.set(i, i, floor.clone());
        trace = trace + Affine::scalar(prob.sym_index(p, i, i));
    }

    let bth = &(b * &th) * c;
    let lyap = (&a.transpose() * &pe) + &(&pe * a) + &bth + &bth.transpose();
    let margin = floor_i.clone().scale(tol.normalized_margin());
    prob.add_lmi("stability", &(lyap.scale(-1.0) - &margin));
    prob.add_lmi("positivity", &(pe.clone() - &floor_i));
    prob.add_equality("trace", trace);

    let pb = &pe * b;
    prob.add_matrix_equality("omega", &om, &(&b_pinv * &pb));
    prob.add_matrix_equality("xi", &xe, &(&range_proj * &pb));

    let mut families = FamilySizes {
        gain: 0,
        coupling: 0,
        range: 0,
    };
    let before = prob.inequalities.len();
    for i in 0..nu {
        for j in 0..ny {
            let t = th.get(i, j).clone();
            let d = t.clone() - ne.get(i, j).clone();
            let (pi_i, ga_j) = (pi_of(&prob, i), gamma_of(&prob, j));
            add_abs_le(
                &mut prob,
                &format!("theta_pi[{i},{j}]"),
                &t,
                &pi_i.clone().scale(consts.l1),
            );
            add_abs_le(
                &mut prob,
                &format!("theta_gamma[{i},{j}]"),
                &t,
                &ga_j.clone().scale(consts.l1),
            );
            let slack = (Affine::constant(2.0) - pi_i - ga_j).scale(consts.l1);
            add_abs_le(&mut prob, &format!("theta_n[{i},{j}]"), &d, &slack);
        }
    }
    families.gain = prob.inequalities.len() - before;

    let before = prob.inequalities.len();
    for i in 0..nu {
        for j in 0..nu {
            let (pi_i, pi_j) = (pi_of(&prob, i), pi_of(&prob, j));
            let mij = me.get(i, j).clone();
            let oij = om.get(i, j).clone();
            let upper = (one() - pi_i.clone() + pi_j.clone()).scale(consts.l2);
            let lower = (one() + pi_i.clone() - pi_j.clone()).scale(consts.l2);
            let both = (Affine::constant(2.0) - pi_i - pi_j).scale(consts.l2);
            add_abs_le(&mut prob, &format!("m[{i},{j}]"), &mij, &upper);
            add_abs_le(&mut prob, &format!("omega[{i},{j}]"), &oij, &lower);
            add_abs_le(&mut prob, &format!("m_omega[{i},{j}]"), &(mij - oij), &both);
        }
    }
    families.coupling = prob.inequalities.len() - before;

    let before = prob.inequalities.len();
    for i in 0..nx {
        for j in 0..nu {
            let bound = (one() - pi_of(&prob, j)).scale(consts.l3);
            add_abs_le(&mut prob, &format!("xi[{i},{j}]"), xe.get(i, j), &bound);
        }
    }
    families.range = prob.inequalities.len() - before;

    for (r, (row, &rhs)) in lc.phi().iter().zip(lc.rhs()).enumerate() {
        let mut e = Affine::constant(rhs);
        for (k, &coef) in row.iter().enumerate() {
            if coef != 0.0 {
                let idx = if k < nodes {
                    prob.scalar(pi, k)
                } else {
                    prob.scalar(gamma, k - nodes)
                };
                e = e - Affine::scalar(idx).scale(coef);
            }
        }
        prob.add_inequality(format!("logistic[{r}]"), e);
    }

    Ok(MisdpModel {
        problem: prob,
        nodes,
        consts: *consts,
        pi,
        gamma,
        p,
        n,
        m,
        theta,
        omega,
        xi,
        t,
        pinned: pinned.copied(),
        families,
    })
}

/// Feasibility of the big-M system with every binary pinned to `s`, decided
/// like the reduced problem: the maximal margin must exceed `feas_tol`.
pub fn fixed_feasible(
    net: &DynamicNetwork,
    consts: &BigM,
    s: &Selection,
    tol: &SolverTolerances,
) -> Result<bool, MisdpError> {
    let model = build_misdp_pinned(net, consts, tol, s)?;
    fixed_feasible_with(&ClarabelBackend::default(), &model, tol)
}

/// As [`fixed_feasible`] for a model from [`build_misdp_pinned`].
pub fn fixed_feasible_with(
    backend: &dyn ConicBackend,
    model: &MisdpModel,
    tol: &SolverTolerances,
) -> Result<bool, MisdpError> {
    let (Some(t), Some(s)) = (model.t, model.pinned) else {
        return Err(MisdpError::Constants(
            "fixed-binary check needs a pinned margin model".into(),
        ));
    };
    let sol = backend.solve(&model.problem, tol);
    let margin = sol.values.get(model.problem.scalar(t, 0)).copied();
    let upper = -sol.dual_objective;
    match margin {
        Some(m) if m > tol.feas_tol && sol.status != ConicStatus::Infeasible => Ok(true),
        Some(m) if upper.is_finite() && upper.max(m) <= tol.feas_tol => Ok(false),
        _ if sol.status == ConicStatus::Infeasible => Ok(false),
        _ => Err(MisdpError::Sof(SofError::Unknown {
            selection: s.to_string(),
            diagnostic: sol.diagnostic,
        })),
    }
}

/// Re-solve the reduced synthesis LMI for a selection found by
/// branch-and-bound. The gain comes from this solve.
pub fn confirm_selection(
    net: &DynamicNetwork,
    s: &Selection,
    tol: &SolverTolerances,
) -> Result<SofSolution, MisdpError> {
    confirm_selection_with(&ClarabelBackend::default(), net, s, tol)
}

pub fn confirm_selection_with(
    backend: &dyn ConicBackend,
    net: &DynamicNetwork,
    s: &Selection,
    tol: &SolverTolerances,
) -> Result<SofSolution, MisdpError> {
    match solve_sof_with(backend, net, s, tol)? {
        SofOutcome::Feasible(sol) => Ok(*sol),
        SofOutcome::Infeasible(reason) => {
            log::warn!("{s} rejected by the synthesis LMI: {reason:?}");
            Err(MisdpError::Unconfirmed {
                selection: s.to_string(),
            })
        }
    }
}

#[derive(Clone)]
pub struct BnbOptions {
    pub int_tol: f64,
    pub max_nodes: Option<usize>,
    pub backend: Arc<dyn ConicBackend>,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            int_tol: 1e-5,
            max_nodes: None,
            backend: Arc::new(ClarabelBackend::default()),
        }
    }
}

impl fmt::Debug for BnbOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BnbOptions")
            .field("int_tol", &self.int_tol)
            .field("max_nodes", &self.max_nodes)
            .field("backend", &self.backend.name())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeAction {
    Branch,
    Prune,
    Incumbent,
    /// Relaxation undecided; branched on the parent bound.
    Undecided,
}

impl fmt::Display for NodeAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeAction::Branch => "branch",
            NodeAction::Prune => "prune",
            NodeAction::Incumbent => "incumbent",
            NodeAction::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLogEntry {
    pub node_id: usize,
    pub depth: usize,
    /// One character per binary: `0`, `1` or `-` when free.
    pub fixings: String,
    pub bound: f64,
    pub action: NodeAction,
}

pub const NODE_LOG_HEADER: &str = "node_id,depth,fixings,bound,action";

pub fn node_log_csv(log: &[NodeLogEntry]) -> String {
    let mut out = String::from(NODE_LOG_HEADER);
    out.push('\n');
    for e in log {
        out.push_str(&format!(
            "{},{},{},{:.17e},{}\n",
            e.node_id, e.depth, e.fixings, e.bound, e.action
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisdpResult {
    pub selection: Option<Selection>,
    pub objective: Option<usize>,
    pub gain: Option<SofSolution>,
    pub nodes: usize,
    pub relaxations: usize,
    /// Fixed-binary checks through the reduced synthesis LMI.
    pub lmi_solves: usize,
    /// Integral relaxations whose rounded selection the reduced LMI
    /// rejected.
    pub rejected_integral: usize,
    pub node_log: Vec<NodeLogEntry>,
}

#[derive(Debug, Clone)]
struct Node {
    id: usize,
    depth: usize,
    fixings: Vec<Option<bool>>,
    bound: f64,
}

fn fixing_string(f: &[Option<bool>]) -> String {
    f.iter()
        .map(|v| match v {
            Some(true) => '1',
            Some(false) => '0',
            None => '-',
        })
        .collect()
}

/// Queue state of the branch-and-bound.
#[derive(Debug, Default)]
pub struct BnbState {
    heap: BinaryHeap<Reverse<(i64, Reverse<usize>, usize)>>,
    nodes: Vec<Option<Node>>,
    pub incumbent: Option<(Selection, SofSolution)>,
    pub int_tol: f64,
    pub created: usize,
    pub processed: usize,
}

impl BnbState {
    fn level(&self, bound: f64) -> i64 {
        (bound - self.int_tol).ceil().max(0.0) as i64
    }

    fn push(&mut self, mut node: Node) {
        node.id = self.nodes.len();
        let key = (self.level(node.bound), Reverse(node.depth), node.id);
        self.heap.push(Reverse(key));
        self.nodes.push(Some(node));
        self.created += 1;
    }

    fn pop(&mut self) -> Option<Node> {
        let Reverse((_, _, id)) = self.heap.pop()?;
        self.nodes[id].take()
    }

    fn incumbent_value(&self) -> Option<i64> {
        self.incumbent.as_ref().map(|(s, _)| s.cardinality() as i64)
    }

    fn dominated(&self, bound: f64) -> bool {
        self.incumbent_value()
            .is_some_and(|best| self.level(bound) >= best)
    }
}

pub fn solve_misdp(
    net: &DynamicNetwork,
    model: &MisdpModel,
    tol: &SolverTolerances,
    opts: &BnbOptions,
) -> Result<MisdpResult, MisdpError> {
    let nb = model.binary_count();
    let backend = opts.backend.as_ref();
    let mut state = BnbState {
        int_tol: opts.int_tol,
        ..Default::default()
    };
    let mut log = Vec::new();
    let mut relaxations = 0;
    let mut lmi_solves = 0;
    let mut rejected_integral = 0;
    state.push(Node {
        id: 0,
        depth: 0,
        fixings: vec![None; nb],
        bound: 0.0,
    });

    while let Some(node) = state.pop() {
        let record = |log: &mut Vec<NodeLogEntry>, bound: f64, action| {
            log.push(NodeLogEntry {
                node_id: node.id,
                depth: node.depth,
                fixings: fixing_string(&node.fixings),
                bound,
                action,
            })
        };
        if state.dominated(node.bound) {
            record(&mut log, node.bound, NodeAction::Prune);
            continue;
        }
        if let Some(limit) = opts.max_nodes {
            if state.processed >= limit {
                return Err(MisdpError::NodeLimit(limit));
            }
        }
        state.processed += 1;

        let prob = model.with_fixings(&node.fixings);
        let sol = backend.solve(&prob, tol);
        relaxations += 1;
        let decided = match sol.status {
            ConicStatus::Infeasible => {
                record(&mut log, f64::INFINITY, NodeAction::Prune);
                continue;
            }
            ConicStatus::Unknown => {
                log::debug!("node {} undecided: {}", node.id, sol.diagnostic);
                false
            }
            ConicStatus::Feasible => true,
        };
        // Children can only tighten the relaxation, so the parent bound is
        // always valid; a non-optimal solve contributes nothing more.
        let bound = if decided && sol.optimal {
            node.bound.max(sol.lower_bound())
        } else {
            node.bound
        };
        if state.dominated(bound) {
            record(&mut log, bound, NodeAction::Prune);
            continue;
        }

        // Approximate values still steer branching when the solve stalled.
        let values: Vec<f64> = (0..nb)
            .map(|k| match node.fixings[k] {
                Some(v) => f64::from(u8::from(v)),
                None => sol
                    .values
                    .get(model.binary_index(k))
                    .copied()
                    .filter(|v| v.is_finite())
                    .unwrap_or(0.5)
                    .clamp(0.0, 1.0),
            })
            .collect();
        let all_fixed = node.fixings.iter().all(Option::is_some);
        let integral =
            (decided || all_fixed) && values.iter().all(|v| v.min(1.0 - v) <= opts.int_tol);
        if integral {
            let bits = values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.5)
                .fold(0u64, |acc, (k, _)| acc | 1 << k);
            let s = Selection::from_bits(model.nodes, bits);
            let out = solve_sof_with(backend, net, &s, tol)?;
            lmi_solves += usize::from(out.solved_lmi());
            if let SofOutcome::Feasible(gain) = out {
                log::debug!("incumbent {s} at node {}", node.id);
                record(&mut log, bound, NodeAction::Incumbent);
                state.incumbent = Some((s, *gain));
                continue;
            }
            rejected_integral += 1;
            log::debug!("rounded relaxation {s} rejected at node {}", node.id);
        }

        // Most fractional free binary, lowest index on ties.
        let pick = (0..nb)
            .filter(|&k| node.fixings[k].is_none())
            .min_by(|&x, &y| {
                let fx = (values[x] - 0.5).abs();
                let fy = (values[y] - 0.5).abs();
                fx.total_cmp(&fy).then(x.cmp(&y))
            });
        let Some(k) = pick else {
            // Every binary is pinned and the reduced LMI rejects the
            // selection. When the relaxation accepted it, the big-M
            // constants are too small for this instance.
            if decided {
                log::warn!(
                    "node {} fixes all binaries but the synthesis LMI rejects them",
                    node.id
                );
            }
            record(&mut log, bound, NodeAction::Prune);
            continue;
        };
        let action = if decided {
            NodeAction::Branch
        } else {
            NodeAction::Undecided
        };
        record(&mut log, bound, action);
        for v in [true, false] {
            let mut fixings = node.fixings.clone();
            fixings[k] = Some(v);
            state.push(Node {
                id: 0,
                depth: node.depth + 1,
                fixings,
                bound,
            });
        }
    }

    let (selection, gain) = match state.incumbent {
        Some((s, g)) => (Some(s), Some(g)),
        None => (None, None),
    };
    Ok(MisdpResult {
        objective: selection.map(|s| s.cardinality()),
        selection,
        gain,
        nodes: state.created,
        relaxations,
        lmi_solves,
        rejected_integral,
        node_log: log,
    })
}

/// Build, branch and confirm in one call.
pub fn misdp_solve(
    net: &DynamicNetwork,
    lc: &LogisticConstraint,
    consts: &BigM,
    tol: &SolverTolerances,
    opts: &BnbOptions,
) -> Result<MisdpResult, MisdpError> {
    let model = build_misdp(net, lc, consts, tol)?;
    solve_misdp(net, &model, tol, opts)
}
