//! Benchmark networks and the three-method experiment harness.

use crate::candidates::{enumerate_with, CandidateError, EnumerateOptions};
use crate::exec::Execution;
use crate::misdp::{misdp_solve, BigM, BnbOptions, MisdpError, NodeLogEntry};
use crate::model::{DynamicNetwork, LogisticConstraint, ModelError, Selection};
use crate::numerics::{eigenvalues, DenseMatrix, NumericsError};
use crate::sdp::SolverTolerances;
use crate::search::{bsa_pbh_solve, bsa_sdp_solve, SearchError, SearchOptions, SearchTrace};
use crate::sofs::{solve_sof_with, verify_closed_loop, SofError, SofOutcome, SofSolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid mass-spring spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Candidates(#[from] CandidateError),
    #[error(transparent)]
    Sof(#[from] SofError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Misdp(#[from] MisdpError),
    #[error("no stabilizable instance found after {0} draws")]
    Exhausted(usize),
}

impl BenchError {
    /// Whether the failure comes from an undecided solve rather than from
    /// bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            BenchError::Sof(e) | BenchError::Search(SearchError::Sof(e)) => {
                matches!(e, SofError::Unknown { .. } | SofError::Numerics(_))
            }
            BenchError::Misdp(MisdpError::Sof(e)) => {
                matches!(e, SofError::Unknown { .. } | SofError::Numerics(_))
            }
            BenchError::Misdp(MisdpError::NodeLimit(_)) => true,
            BenchError::Numerics(_)
            | BenchError::Search(SearchError::Numerics(_))
            | BenchError::Misdp(MisdpError::Numerics(_)) => true,
            _ => false,
        }
    }
}

/// Chain of masses between two walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSpringSpec {
    pub mass: Vec<f64>,
    /// `N + 1` springs: wall to mass 1, between neighbours, mass N to wall.
    pub stiffness: Vec<f64>,
    pub damping: Vec<f64>,
}

impl MassSpringSpec {
    pub fn uniform(n: usize) -> Self {
        Self {
            mass: vec![1.0; n],
            stiffness: vec![1.0; n + 1],
            damping: vec![0.0; n],
        }
    }

    pub fn with_damping(mut self, d: f64) -> Self {
        self.damping.iter_mut().for_each(|v| *v = d);
        self
    }

    pub fn nodes(&self) -> usize {
        self.mass.len()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let n = self.nodes();
        if n < 2 {
            return Err(BenchError::Spec(format!("need at least 2 masses, got {n}")));
        }
        if self.stiffness.len() != n + 1 || self.damping.len() != n {
            return Err(BenchError::Spec(format!(
                "{n} masses need {} springs and {n} dampers, got {} and {}",
                n + 1,
                self.stiffness.len(),
                self.damping.len()
            )));
        }
        if self
            .mass
            .iter()
            .chain(&self.stiffness)
            .any(|&v| !(v > 0.0 && v.is_finite()))
        {
            return Err(BenchError::Spec(
                "masses and stiffnesses must be positive".into(),
            ));
        }
        if self.damping.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(BenchError::Spec("damping must be nonnegative".into()));
        }
        Ok(())
    }

    /// Tridiagonal chain stiffness matrix.
    pub fn stiffness_matrix(&self) -> DenseMatrix {
        let n = self.nodes();
        let k = &self.stiffness;
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = k[i] + k[i + 1];
            if i + 1 < n {
                m[(i, i + 1)] = -k[i + 1];
                m[(i + 1, i)] = -k[i + 1];
            }
        }
        m
    }
}

/// Node `i` owns states `(p_i, v_i)` at positions `2i, 2i + 1`, one force
/// input and both states as outputs.
pub fn mass_spring(spec: &MassSpringSpec) -> Result<DynamicNetwork, BenchError> {
    spec.validate()?;
    let n = spec.nodes();
    let k = spec.stiffness_matrix();
    let mut a = DenseMatrix::zeros(2 * n, 2 * n);
    let mut b = DenseMatrix::zeros(2 * n, n);
    for i in 0..n {
        let inv_m = 1.0 / spec.mass[i];
        a[(2 * i, 2 * i + 1)] = 1.0;
        for j in 0..n {
            a[(2 * i + 1, 2 * j)] = -inv_m * k[(i, j)];
        }
        a[(2 * i + 1, 2 * i + 1)] = -inv_m * spec.damping[i];
        b[(2 * i + 1, i)] = inv_m;
    }
    Ok(DynamicNetwork::new(
        a,
        b,
        DenseMatrix::identity(2 * n, 2 * n),
        vec![2; n],
        vec![1; n],
        vec![2; n],
    )?)
}

/// Parameters of the seeded random network family used in cross-checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomNetworkSpec {
    pub nodes: usize,
    pub max_states_per_node: usize,
    /// Target spectral abscissa of the open loop.
    pub abscissa: f64,
    /// Probability that a pair of nodes is coupled.
    pub coupling: f64,
    pub seed: u64,
}

impl RandomNetworkSpec {
    pub fn new(nodes: usize, seed: u64) -> Self {
        Self {
            nodes,
            max_states_per_node: 2,
            abscissa: 0.5,
            coupling: 0.6,
            seed,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller.
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// One draw of the random family: per-node states, one input per node, a
/// random output map, and `A` shifted to the requested abscissa.
pub fn random_network(spec: &RandomNetworkSpec) -> Result<DynamicNetwork, BenchError> {
    if spec.nodes == 0 || spec.nodes > 32 || spec.max_states_per_node == 0 {
        return Err(BenchError::Spec(format!(
            "bad random network spec {spec:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nx: Vec<usize> = (0..spec.nodes)
        .map(|_| rng.gen_range(1..=spec.max_states_per_node))
        .collect();
    let nu = vec![1; spec.nodes];
    let ny: Vec<usize> = nx.iter().map(|&d| rng.gen_range(1..=d)).collect();
    let (sx, sy) = (nx.iter().sum::<usize>(), ny.iter().sum::<usize>());
    let xo: Vec<usize> = nx
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let yo: Vec<usize> = ny
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();

    let mut a = DenseMatrix::zeros(sx, sx);
    for i in 0..spec.nodes {
        for j in 0..spec.nodes {
            if i != j && rng.gen::<f64>() >= spec.coupling {
                continue;
            }
            for r in 0..nx[i] {
                for c in 0..nx[j] {
                    a[(xo[i] + r, xo[j] + c)] = gaussian(&mut rng);
                }
            }
        }
    }
    let current = eigenvalues(&a)?.spectral_abscissa;
    for d in 0..sx {
        a[(d, d)] += spec.abscissa - current;
    }

    let mut b = DenseMatrix::zeros(sx, spec.nodes);
    let mut c = DenseMatrix::zeros(sy, sx);
    for i in 0..spec.nodes {
        for r in 0..nx[i] {
            b[(xo[i] + r, i)] = gaussian(&mut rng);
        }
        for r in 0..ny[i] {
            for s in 0..nx[i] {
                c[(yo[i] + r, xo[i] + s)] = gaussian(&mut rng);
            }
        }
    }
    Ok(DynamicNetwork::new(a, b, c, nx, nu, ny)?)
}

/// First draw (seed, seed + 1, …) whose fully instrumented loop admits a
/// stabilizing static output feedback. Returns the network and the seed
/// that produced it.
pub fn random_stabilizable_network(
    spec: &RandomNetworkSpec,
    tol: &SolverTolerances,
    max_draws: usize,
) -> Result<(DynamicNetwork, u64), BenchError> {
    for k in 0..max_draws as u64 {
        let seed = spec.seed.wrapping_add(k);
        let net = match random_network(&RandomNetworkSpec { seed, ..*spec }) {
            Ok(n) => n,
            Err(BenchError::Model(_)) => continue,
            Err(e) => return Err(e),
        };
        let full = Selection::full(net.node_count());
        match crate::sofs::solve_sof(&net, &full, tol) {
            Ok(out) if out.is_feasible() => return Ok((net, seed)),
            Ok(_) | Err(SofError::Unknown { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(BenchError::Exhausted(max_draws))
}

/// Minimum-cardinality feasible selection by solving the synthesis LMI on
/// whole cardinality layers of the candidate set, smallest first.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub best: Option<Selection>,
    /// Every feasible selection of the minimal layer.
    pub minimal: Vec<Selection>,
    pub lmi_solves: usize,
}

pub fn brute_force_minimum(
    net: &DynamicNetwork,
    lc: &LogisticConstraint,
    cfg: &MethodConfig,
) -> Result<BruteForce, BenchError> {
    let cs = enumerate_with(net.node_count(), lc, &cfg.search.enumerate)?;
    let all = cs.to_vec();
    let exec = cfg.search.enumerate.execution;
    let backend = cfg.search.backend.as_ref();
    let mut solves = 0;
    let mut start = 0;
    while start < all.len() {
        let h = all[start].cardinality();
        let end = all[start..]
            .iter()
            .position(|s| s.cardinality() != h)
            .map_or(all.len(), |p| start + p);
        let layer = &all[start..end];
        let outcomes = exec.map(layer, |s| solve_sof_with(backend, net, s, &cfg.tol));
        let mut minimal = Vec::new();
        for (s, out) in layer.iter().zip(outcomes) {
            let out = out?;
            solves += usize::from(out.solved_lmi());
            if out.is_feasible() {
                minimal.push(*s);
            }
        }
        if !minimal.is_empty() {
            return Ok(BruteForce {
                best: Some(minimal[0]),
                minimal,
                lmi_solves: solves,
            });
        }
        start = end;
    }
    Ok(BruteForce {
        best: None,
        minimal: Vec::new(),
        lmi_solves: solves,
    })
}

/// Feasibility of every candidate, in canonical order.
pub fn feasibility_table(
    net: &DynamicNetwork,
    lc: &LogisticConstraint,
    cfg: &MethodConfig,
) -> Result<Vec<(Selection, bool)>, BenchError> {
    let cs = enumerate_with(net.node_count(), lc, &cfg.search.enumerate)?;
    let all = cs.to_vec();
    let backend = cfg.search.backend.as_ref();
    let outs = cfg
        .search
        .enumerate
        .execution
        .map(&all, |s| solve_sof_with(backend, net, s, &cfg.tol));
    all.into_iter()
        .zip(outs)
        .map(|(s, o)| Ok((s, o?.is_feasible())))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "misdp")]
    Misdp,
    #[serde(rename = "bsa-sdp")]
    BsaSdp,
    #[serde(rename = "bsa-pbh")]
    BsaPbh,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Misdp, Method::BsaSdp, Method::BsaPbh];

    pub fn name(self) -> &'static str {
        match self {
            Method::Misdp => "misdp",
            Method::BsaSdp => "bsa-sdp",
            Method::BsaPbh => "bsa-pbh",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?}; expected misdp, bsa-sdp or bsa-pbh"))
    }
}

/// Solver settings shared by every method.
#[derive(Debug, Clone, Default)]
pub struct MethodConfig {
    pub tol: SolverTolerances,
    pub big_m: BigM,
    pub search: SearchOptions,
    pub bnb: BnbOptions,
}

impl MethodConfig {
    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.search.enumerate = EnumerateOptions {
            execution: exec,
            ..self.search.enumerate
        };
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub selection: Option<Selection>,
    pub gain: Option<SofSolution>,
    /// BSA probes or branch-and-bound relaxations.
    pub iterations: usize,
    pub lmi_solves: usize,
    pub trace: Option<SearchTrace>,
    #[serde(skip)]
    pub node_log: Vec<NodeLogEntry>,
    pub diagnostic: Option<String>,
}

pub fn run_method(
    net: &DynamicNetwork,
    lc: &LogisticConstraint,
    method: Method,
    cfg: &MethodConfig,
) -> Result<MethodOutcome, BenchError> {
    let out = match method {
        Method::Misdp => {
            let r = misdp_solve(net, lc, &cfg.big_m, &cfg.tol, &cfg.bnb)?;
            MethodOutcome {
                method,
                diagnostic: r
                    .selection
                    .is_none()
                    .then(|| "branch-and-bound found no feasible selection".to_string()),
                selection: r.selection,
                gain: r.gain,
                iterations: r.relaxations,
                lmi_solves: r.relaxations + r.lmi_solves,
                trace: None,
                node_log: r.node_log,
            }
        }
        Method::BsaSdp | Method::BsaPbh => {
            let r = if method == Method::BsaSdp {
                bsa_sdp_solve(net, lc, &cfg.search)?
            } else {
                bsa_pbh_solve(net, lc, &cfg.search)?
            };
            MethodOutcome {
                method,
                selection: r.best,
                gain: r.gain,
                iterations: r.iterations,
                lmi_solves: r.lmi_solves,
                trace: Some(r.trace),
                node_log: Vec::new(),
                diagnostic: r.diagnostic,
            }
        }
    };
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub status: String,
    pub selection: Option<Selection>,
    pub actuators: Vec<usize>,
    pub sensors: Vec<usize>,
    pub cardinality: Option<usize>,
    pub spectral_abscissa: Option<f64>,
    pub wall_time_s: f64,
    pub iterations: usize,
    pub lmi_solves: usize,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaTrace {
    pub method: Method,
    pub sigma: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub sigma_traces: Vec<SigmaTrace>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn row(&self, m: Method) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == m)
    }

    /// Table-shaped summary, one line per method.
    pub fn table_csv(&self) -> String {
        let mut out = String::from(
            "method,status,actuators,sensors,cardinality,spectral_abscissa,wall_time_s,iterations,lmi_solves\n",
        );
        let join = |v: &[usize]| {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        };
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.method,
                r.status,
                join(&r.actuators),
                join(&r.sensors),
                r.cardinality.map_or(String::new(), |c| c.to_string()),
                r.spectral_abscissa
                    .map_or(String::new(), |a| format!("{a:.17e}")),
                r.wall_time_s,
                r.iterations,
                r.lmi_solves
            ));
        }
        out
    }

    /// `σ` per iteration for every search method.
    pub fn sigma_trace_csv(&self) -> String {
        let mut out = String::from("method,iteration,sigma\n");
        for t in &self.sigma_traces {
            for (p, s) in t.sigma.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", t.method, p, s));
            }
        }
        out
    }
}

/// Run each method in turn, timing only the method call, and re-verify
/// every returned gain on the full closed loop.
pub fn run_experiment(
    net: &DynamicNetwork,
    lc: &LogisticConstraint,
    methods: &[Method],
    cfg: &MethodConfig,
) -> ExperimentReport {
    let mut rows = Vec::new();
    let mut sigma_traces = Vec::new();
    for &method in methods {
        let start = Instant::now();
        let result = run_method(net, lc, method, cfg);
        let wall_time_s = start.elapsed().as_secs_f64();
        let row = match result {
            Ok(out) => {
                if let Some(t) = &out.trace {
                    sigma_traces.push(SigmaTrace {
                        method,
                        sigma: t.sigmas(),
                    });
                }
                let verified = match (&out.selection, &out.gain) {
                    (Some(s), Some(g)) => verify_closed_loop(net, s, &g.f_full).ok(),
                    _ => None,
                };
                let stable = verified.as_ref().is_some_and(|v| v.is_stable());
                ReportRow {
                    method,
                    status: if stable {
                        "ok".into()
                    } else if out.selection.is_none() {
                        "infeasible".into()
                    } else {
                        "unverified".into()
                    },
                    actuators: out
                        .selection
                        .map(|s| s.actuator_nodes())
                        .unwrap_or_default(),
                    sensors: out.selection.map(|s| s.sensor_nodes()).unwrap_or_default(),
                    cardinality: out.selection.map(|s| s.cardinality()),
                    spectral_abscissa: verified.map(|v| v.spectral_abscissa),
                    selection: out.selection,
                    wall_time_s,
                    iterations: out.iterations,
                    lmi_solves: out.lmi_solves,
                    message: out.diagnostic,
                }
            }
            Err(e) => ReportRow {
                method,
                status: "error".into(),
                selection: None,
                actuators: Vec::new(),
                sensors: Vec::new(),
                cardinality: None,
                spectral_abscissa: None,
                wall_time_s,
                iterations: 0,
                lmi_solves: 0,
                message: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    ExperimentReport { rows, sigma_traces }
}

/// Whether every accepted certificate of `outcome` also stabilizes the
/// loop (used by tests on the success paths).
pub fn outcome_is_sound(net: &DynamicNetwork, out: &SofOutcome) -> bool {
    match out {
        SofOutcome::Feasible(sol) => verify_closed_loop(net, &sol.selection, &sol.f_full)
            .map(|r| r.is_stable())
            .unwrap_or(false),
        SofOutcome::Infeasible(_) => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_mass_chain_modes() {
        let spec = MassSpringSpec::uniform(2);
        assert_eq!(
            spec.stiffness_matrix(),
            DenseMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])
        );
        let net = mass_spring(&spec).unwrap();
        let eig = eigenvalues(net.a()).unwrap();
        assert_abs_diff_eq!(eig.spectral_abscissa, 0.0, epsilon = 1e-8);
        // Modes ±i√1 and ±i√3.
        let mut im: Vec<f64> = eig.eigenvalues.iter().map(|l| l.im.abs()).collect();
        im.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(im[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(im[3], 3f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn damped_soft_chain_is_stable() {
        let mut spec = MassSpringSpec::uniform(2).with_damping(2.0);
        spec.stiffness = vec![1e-6; 3];
        let net = mass_spring(&spec).unwrap();
        assert!(eigenvalues(net.a()).unwrap().spectral_abscissa < 0.0);
    }

    #[test]
    fn benchmark_dimensions() {
        let net = mass_spring(&MassSpringSpec::uniform(10)).unwrap();
        assert_eq!((net.nx(), net.nu(), net.ny()), (20, 10, 20));
        assert_eq!(net.c(), &DenseMatrix::identity(20, 20));
        assert!(mass_spring(&MassSpringSpec::uniform(1)).is_err());
    }

    #[test]
    fn random_networks_are_reproducible() {
        let spec = RandomNetworkSpec::new(3, 11);
        assert_eq!(
            random_network(&spec).unwrap(),
            random_network(&spec).unwrap()
        );
        let net = random_network(&spec).unwrap();
        assert_abs_diff_eq!(
            eigenvalues(net.a()).unwrap().spectral_abscissa,
            0.5,
            epsilon = 1e-8
        );
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("sdp".parse::<Method>().is_err());
    }
}
