//! Node-partitioned LTI network `(A, B, C)`, binary sensor/actuator
//! selections and the linear logistic constraint on them.

use crate::numerics::{numerical_rank, DenseMatrix, NumericsError};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("block structure violated: {0}")]
    BlockStructure(String),
    #[error("{matrix} must have full {which} rank: rank {rank}, expected {expected}")]
    Rank {
        matrix: &'static str,
        which: &'static str,
        rank: usize,
        expected: usize,
    },
    #[error("invalid selection: {0}")]
    Selection(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// `ẋ = Ax + Bu`, `y = Cx` over `N` nodes, with `B` and `C` block diagonal
/// along the node partition.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicNetwork {
    a: DenseMatrix,
    b: DenseMatrix,
    c: DenseMatrix,
    nx: Vec<usize>,
    nu: Vec<usize>,
    ny: Vec<usize>,
    u_owner: Vec<usize>,
    y_owner: Vec<usize>,
}

fn offsets(dims: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    dims.iter()
        .map(|d| {
            let o = acc;
            acc += d;
            o
        })
        .collect()
}

fn owners(dims: &[usize]) -> Vec<usize> {
    dims.iter()
        .enumerate()
        .flat_map(|(node, &d)| std::iter::repeat_n(node, d))
        .collect()
}

fn check_block_diagonal(
    name: &str,
    m: &DenseMatrix,
    row_dims: &[usize],
    col_dims: &[usize],
) -> Result<(), ModelError> {
    let ro = offsets(row_dims);
    let co = offsets(col_dims);
    for (i, (&r0, &rn)) in ro.iter().zip(row_dims).enumerate() {
        for (j, (&c0, &cn)) in co.iter().zip(col_dims).enumerate() {
            if i == j {
                continue;
            }
            let block = m.view((r0, c0), (rn, cn));
            if block.iter().any(|&v| v != 0.0) {
                return Err(ModelError::BlockStructure(format!(
                    "{name} has a nonzero entry coupling node {} to node {}",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

impl DynamicNetwork {
    /// Validates dimensions, the per-node block structure of `B` and `C`,
    /// and that `B` has full column rank and `C` full row rank.
    pub fn new(
        a: DenseMatrix,
        b: DenseMatrix,
        c: DenseMatrix,
        nx: Vec<usize>,
        nu: Vec<usize>,
        ny: Vec<usize>,
    ) -> Result<Self, ModelError> {
        let n = nx.len();
        if n == 0 {
            return Err(ModelError::Dimension(
                "network needs at least one node".into(),
            ));
        }
        if nu.len() != n || ny.len() != n {
            return Err(ModelError::Dimension(format!(
                "per-node dimension lists have lengths {}, {}, {}",
                nx.len(),
                nu.len(),
                ny.len()
            )));
        }
        if n > 32 {
            return Err(ModelError::Dimension(format!(
                "at most 32 nodes are supported, got {n}"
            )));
        }
        let (sx, su, sy) = (
            nx.iter().sum::<usize>(),
            nu.iter().sum::<usize>(),
            ny.iter().sum::<usize>(),
        );
        if a.shape() != (sx, sx) {
            return Err(ModelError::Dimension(format!(
                "A is {:?}, expected ({sx}, {sx})",
                a.shape()
            )));
        }
        if b.shape() != (sx, su) {
            return Err(ModelError::Dimension(format!(
                "B is {:?}, expected ({sx}, {su})",
                b.shape()
            )));
        }
        if c.shape() != (sy, sx) {
            return Err(ModelError::Dimension(format!(
                "C is {:?}, expected ({sy}, {sx})",
                c.shape()
            )));
        }
        if a.iter()
            .chain(b.iter())
            .chain(c.iter())
            .any(|v| !v.is_finite())
        {
            return Err(ModelError::Numerics(NumericsError::NonFinite));
        }
        check_block_diagonal("B", &b, &nx, &nu)?;
        check_block_diagonal("C", &c, &ny, &nx)?;
        let rb = numerical_rank(&b, 0.0)?;
        if rb != su {
            return Err(ModelError::Rank {
                matrix: "B",
                which: "column",
                rank: rb,
                expected: su,
            });
        }
        let rc = numerical_rank(&c, 0.0)?;
        if rc != sy {
            return Err(ModelError::Rank {
                matrix: "C",
                which: "row",
                rank: rc,
                expected: sy,
            });
        }
        Ok(Self {
            u_owner: owners(&nu),
            y_owner: owners(&ny),
            a,
            b,
            c,
            nx,
            nu,
            ny,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nx.len()
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }

    pub fn c(&self) -> &DenseMatrix {
        &self.c
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }

    pub fn nu(&self) -> usize {
        self.b.ncols()
    }

    pub fn ny(&self) -> usize {
        self.c.nrows()
    }

    pub fn node_dims(&self) -> (&[usize], &[usize], &[usize]) {
        (&self.nx, &self.nu, &self.ny)
    }

    /// Node owning each input channel.
    pub fn actuator_owner(&self) -> &[usize] {
        &self.u_owner
    }

    /// Node owning each output channel.
    pub fn sensor_owner(&self) -> &[usize] {
        &self.y_owner
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let raw: NetworkFile = serde_json::from_str(s)?;
        raw.try_into()
    }
}

fn to_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn from_rows(
    name: &str,
    rows: &[Vec<f64>],
    cols_if_empty: usize,
) -> Result<DenseMatrix, ModelError> {
    let cols = rows.first().map_or(cols_if_empty, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(ModelError::Dimension(format!("{name} has ragged rows")));
    }
    Ok(DenseMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// On-disk layout of a network: per-node dims and dense row-major matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct NetworkFile {
    #[serde(rename = "N")]
    n: usize,
    nx_i: Vec<usize>,
    nu_i: Vec<usize>,
    ny_i: Vec<usize>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
}

impl TryFrom<NetworkFile> for DynamicNetwork {
    type Error = ModelError;

    fn try_from(f: NetworkFile) -> Result<Self, ModelError> {
        if f.nx_i.len() != f.n {
            return Err(ModelError::Dimension(format!(
                "N = {} but nx_i has {} entries",
                f.n,
                f.nx_i.len()
            )));
        }
        let nx: usize = f.nx_i.iter().sum();
        let nu: usize = f.nu_i.iter().sum();
        let a = from_rows("A", &f.a, nx)?;
        let b = from_rows("B", &f.b, nu)?;
        let c = from_rows("C", &f.c, nx)?;
        DynamicNetwork::new(a, b, c, f.nx_i, f.nu_i, f.ny_i)
    }
}

impl Serialize for DynamicNetwork {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        NetworkFile {
            n: self.node_count(),
            nx_i: self.nx.clone(),
            nu_i: self.nu.clone(),
            ny_i: self.ny.clone(),
            a: to_rows(&self.a),
            b: to_rows(&self.b),
            c: to_rows(&self.c),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DynamicNetwork {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = NetworkFile::deserialize(d)?;
        raw.try_into().map_err(serde::de::Error::custom)
    }
}

/// Binary activation tuple `(π₁..π_N, γ₁..γ_N)` packed into a word: bit `k`
/// is `π_{k+1}` for `k < N` and `γ_{k-N+1}` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Selection {
    nodes: u8,
    bits: u64,
}

impl Selection {
    pub fn empty(nodes: usize) -> Self {
        assert!(nodes <= 32, "at most 32 nodes");
        Self {
            nodes: nodes as u8,
            bits: 0,
        }
    }

    pub fn full(nodes: usize) -> Self {
        let mut s = Self::empty(nodes);
        s.bits = low_mask(2 * nodes);
        s
    }

    /// Raw packed form; bits at positions `>= 2N` must be clear.
    pub fn from_bits(nodes: usize, bits: u64) -> Self {
        assert!(nodes <= 32, "at most 32 nodes");
        assert_eq!(bits & !low_mask(2 * nodes), 0, "bits beyond 2N set");
        Self {
            nodes: nodes as u8,
            bits,
        }
    }

    pub fn from_parts(pi: &[bool], gamma: &[bool]) -> Result<Self, ModelError> {
        if pi.len() != gamma.len() {
            return Err(ModelError::Selection(format!(
                "pi has {} entries, gamma {}",
                pi.len(),
                gamma.len()
            )));
        }
        if pi.len() > 32 {
            return Err(ModelError::Selection("at most 32 nodes".into()));
        }
        let n = pi.len();
        let mut s = Self::empty(n);
        for (k, &on) in pi.iter().chain(gamma).enumerate() {
            if on {
                s.bits |= 1 << k;
            }
        }
        Ok(s)
    }

    /// From a 0/1 slice in `(π, γ)` order.
    pub fn from_tuple(t: &[u8]) -> Result<Self, ModelError> {
        if !t.len().is_multiple_of(2) {
            return Err(ModelError::Selection(format!(
                "odd tuple length {}",
                t.len()
            )));
        }
        if t.iter().any(|&v| v > 1) {
            return Err(ModelError::Selection("entries must be 0 or 1".into()));
        }
        let n = t.len() / 2;
        let pi: Vec<bool> = t[..n].iter().map(|&v| v == 1).collect();
        let gamma: Vec<bool> = t[n..].iter().map(|&v| v == 1).collect();
        Self::from_parts(&pi, &gamma)
    }

    /// Actuator nodes and sensor nodes, 1-based, as used in reports.
    pub fn from_active_nodes(
        nodes: usize,
        actuators: &[usize],
        sensors: &[usize],
    ) -> Result<Self, ModelError> {
        let mut pi = vec![false; nodes];
        let mut gamma = vec![false; nodes];
        for (list, dst) in [(actuators, &mut pi), (sensors, &mut gamma)] {
            for &k in list {
                if k == 0 || k > nodes {
                    return Err(ModelError::Selection(format!(
                        "node {k} outside 1..={nodes}"
                    )));
                }
                dst[k - 1] = true;
            }
        }
        Self::from_parts(&pi, &gamma)
    }

    pub fn node_count(&self) -> usize {
        self.nodes as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn width(&self) -> usize {
        2 * self.node_count()
    }

    pub fn pi(&self, node: usize) -> bool {
        assert!(node < self.node_count());
        self.bits >> node & 1 == 1
    }

    pub fn gamma(&self, node: usize) -> bool {
        assert!(node < self.node_count());
        self.bits >> (self.node_count() + node) & 1 == 1
    }

    pub fn pi_vec(&self) -> Vec<bool> {
        (0..self.node_count()).map(|k| self.pi(k)).collect()
    }

    pub fn gamma_vec(&self) -> Vec<bool> {
        (0..self.node_count()).map(|k| self.gamma(k)).collect()
    }

    /// `H(S) = Σ π_k + γ_k`.
    pub fn cardinality(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn actuator_count(&self) -> usize {
        (self.bits & low_mask(self.node_count())).count_ones() as usize
    }

    pub fn sensor_count(&self) -> usize {
        self.cardinality() - self.actuator_count()
    }

    /// Positions (in `(π, γ)` order) of the active entries, ascending.
    pub fn active_positions(&self) -> Vec<usize> {
        (0..self.width())
            .filter(|&k| self.bits >> k & 1 == 1)
            .collect()
    }

    /// 1-based actuator nodes.
    pub fn actuator_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&k| self.pi(k))
            .map(|k| k + 1)
            .collect()
    }

    /// 1-based sensor nodes.
    pub fn sensor_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&k| self.gamma(k))
            .map(|k| k + 1)
            .collect()
    }

    /// Whether every active entry of `self` is also active in `other`
    /// (`self ∨ other = other`).
    pub fn is_subset_of(&self, other: &Selection) -> bool {
        self.bits | other.bits == other.bits
    }

    pub fn union(&self, other: &Selection) -> Selection {
        assert_eq!(self.nodes, other.nodes);
        Selection {
            nodes: self.nodes,
            bits: self.bits | other.bits,
        }
    }

    /// `node` is 0-based.
    pub fn with_actuator(mut self, node: usize, on: bool) -> Self {
        self.set(node, on);
        self
    }

    /// `node` is 0-based.
    pub fn with_sensor(mut self, node: usize, on: bool) -> Self {
        self.set(self.node_count() + node, on);
        self
    }

    fn set(&mut self, pos: usize, on: bool) {
        assert!(pos < self.width());
        if on {
            self.bits |= 1 << pos;
        } else {
            self.bits &= !(1 << pos);
        }
    }

    /// Bit string in `(π, γ)` order, e.g. `"1001"`.
    pub fn bit_string(&self) -> String {
        (0..self.width())
            .map(|k| if self.bits >> k & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    /// Column vector `[π; γ]` of 0/1 values.
    pub fn as_vector(&self) -> Vec<f64> {
        (0..self.width())
            .map(|k| (self.bits >> k & 1) as f64)
            .collect()
    }
}

pub(crate) fn low_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for k in 0..self.width() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.bits >> k & 1)?;
        }
        write!(f, ")")
    }
}

impl FromStr for Selection {
    type Err = ModelError;

    /// Accepts `"1001"` or `"(1,0,0,1)"`.
    fn from_str(s: &str) -> Result<Self, ModelError> {
        let t: Vec<u8> = s
            .chars()
            .filter(|c| !matches!(c, '(' | ')' | ',' | ' '))
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(ModelError::Selection(format!(
                    "unexpected character {other:?}"
                ))),
            })
            .collect::<Result<_, _>>()?;
        Self::from_tuple(&t)
    }
}

impl Serialize for Selection {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.bit_string())
    }
}

impl<'de> Deserialize<'de> for Selection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `Π = blkdiag(π_i I)`, `Γ = blkdiag(γ_i I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMatrices {
    pub pi: DenseMatrix,
    pub gamma: DenseMatrix,
}

fn check_width(s: &Selection, net: &DynamicNetwork) -> Result<(), ModelError> {
    if s.node_count() != net.node_count() {
        return Err(ModelError::Dimension(format!(
            "selection covers {} nodes, network has {}",
            s.node_count(),
            net.node_count()
        )));
    }
    Ok(())
}

pub fn selection_to_matrices(
    s: &Selection,
    net: &DynamicNetwork,
) -> Result<SelectionMatrices, ModelError> {
    check_width(s, net)?;
    let pi_diag: Vec<f64> = net
        .actuator_owner()
        .iter()
        .map(|&node| if s.pi(node) { 1.0 } else { 0.0 })
        .collect();
    let gamma_diag: Vec<f64> = net
        .sensor_owner()
        .iter()
        .map(|&node| if s.gamma(node) { 1.0 } else { 0.0 })
        .collect();
    Ok(SelectionMatrices {
        pi: DenseMatrix::from_diagonal(&nalgebra::DVector::from_vec(pi_diag)),
        gamma: DenseMatrix::from_diagonal(&nalgebra::DVector::from_vec(gamma_diag)),
    })
}

pub fn cardinality(s: &Selection) -> usize {
    s.cardinality()
}

/// Input channels (columns of `B`) switched on by `s`.
pub fn active_input_channels(s: &Selection, net: &DynamicNetwork) -> Vec<usize> {
    net.actuator_owner()
        .iter()
        .enumerate()
        .filter(|(_, &node)| s.pi(node))
        .map(|(ch, _)| ch)
        .collect()
}

/// Output channels (rows of `C`) switched on by `s`.
pub fn active_output_channels(s: &Selection, net: &DynamicNetwork) -> Vec<usize> {
    net.sensor_owner()
        .iter()
        .enumerate()
        .filter(|(_, &node)| s.gamma(node))
        .map(|(ch, _)| ch)
        .collect()
}

/// `(B_q, C_q)`: the columns of `B` and rows of `C` belonging to active
/// channels. Either may be empty.
pub fn reduced_bc(
    s: &Selection,
    net: &DynamicNetwork,
) -> Result<(DenseMatrix, DenseMatrix), ModelError> {
    check_width(s, net)?;
    let cols = active_input_channels(s, net);
    let rows = active_output_channels(s, net);
    let bq = net.b().select_columns(cols.iter());
    let cq = net.c().select_rows(rows.iter());
    Ok((bq, cq))
}

/// `Φ [π; γ] ≤ φ`, one row per constraint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogisticConstraint {
    phi: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl LogisticConstraint {
    /// No restriction.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(phi: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self, ModelError> {
        if phi.len() != rhs.len() {
            return Err(ModelError::Dimension(format!(
                "Phi has {} rows, phi has {} entries",
                phi.len(),
                rhs.len()
            )));
        }
        if let Some(first) = phi.first() {
            if first.len() % 2 != 0 || phi.iter().any(|r| r.len() != first.len()) {
                return Err(ModelError::Dimension(
                    "Phi rows must all have the same even length 2N".into(),
                ));
            }
        }
        if phi.iter().flatten().chain(&rhs).any(|v| !v.is_finite()) {
            return Err(ModelError::Numerics(NumericsError::NonFinite));
        }
        Ok(Self { phi, rhs })
    }

    /// Appends `coeffs · [π; γ] ≤ bound`.
    pub fn with_row(mut self, coeffs: Vec<f64>, bound: f64) -> Result<Self, ModelError> {
        self.phi.push(coeffs);
        self.rhs.push(bound);
        Self::new(self.phi, self.rhs)
    }

    /// At least `actuators` active actuators and `sensors` active sensors.
    pub fn at_least(nodes: usize, actuators: usize, sensors: usize) -> Self {
        let mut a = vec![0.0; 2 * nodes];
        let mut g = vec![0.0; 2 * nodes];
        a[..nodes].iter_mut().for_each(|v| *v = -1.0);
        g[nodes..].iter_mut().for_each(|v| *v = -1.0);
        Self::new(vec![a, g], vec![-(actuators as f64), -(sensors as f64)])
            .expect("well-formed rows")
    }

    /// `lo ≤ H(S) ≤ hi`.
    pub fn cardinality_between(nodes: usize, lo: usize, hi: usize) -> Self {
        Self::new(
            vec![vec![-1.0; 2 * nodes], vec![1.0; 2 * nodes]],
            vec![-(lo as f64), hi as f64],
        )
        .expect("well-formed rows")
    }

    /// At most `actuators` active actuators.
    pub fn at_most_actuators(nodes: usize, actuators: usize) -> Self {
        let mut a = vec![0.0; 2 * nodes];
        a[..nodes].iter_mut().for_each(|v| *v = 1.0);
        Self::new(vec![a], vec![actuators as f64]).expect("well-formed rows")
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn phi(&self) -> &[Vec<f64>] {
        &self.phi
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Width `2N` implied by `Phi`, `None` when there are no rows.
    pub fn width(&self) -> Option<usize> {
        self.phi.first().map(Vec::len)
    }

    pub fn check_nodes(&self, nodes: usize) -> Result<(), ModelError> {
        match self.width() {
            Some(w) if w != 2 * nodes => Err(ModelError::Dimension(format!(
                "logistic constraint has {w} columns, expected {}",
                2 * nodes
            ))),
            _ => Ok(()),
        }
    }

    pub fn satisfied(&self, s: &Selection) -> Result<bool, ModelError> {
        self.check_nodes(s.node_count())?;
        Ok(self.satisfied_unchecked(s))
    }

    pub(crate) fn satisfied_unchecked(&self, s: &Selection) -> bool {
        // Small slack so integer data written as decimals still compares
        // exactly.
        self.phi.iter().zip(&self.rhs).all(|(row, &bound)| {
            let lhs: f64 = row
                .iter()
                .enumerate()
                .filter(|(k, _)| s.bits >> k & 1 == 1)
                .map(|(_, v)| v)
                .sum();
            lhs <= bound + 1e-9
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("logistic constraint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Deserialize)]
struct LogisticFile {
    #[serde(rename = "Phi")]
    phi: Vec<Vec<f64>>,
    #[serde(rename = "phi", default)]
    rhs: Vec<f64>,
}

impl Serialize for LogisticConstraint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            #[serde(rename = "Phi")]
            phi: &'a [Vec<f64>],
            #[serde(rename = "phi")]
            rhs: &'a [f64],
        }
        Out {
            phi: &self.phi,
            rhs: &self.rhs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LogisticConstraint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = LogisticFile::deserialize(d)?;
        LogisticConstraint::new(raw.phi, raw.rhs).map_err(serde::de::Error::custom)
    }
}

pub fn logistic_satisfied(s: &Selection, lc: &LogisticConstraint) -> Result<bool, ModelError> {
    lc.satisfied(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> DynamicNetwork {
        DynamicNetwork::new(
            DenseMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, -1.0]),
            DenseMatrix::identity(2, 2),
            DenseMatrix::identity(2, 2),
            vec![1, 1],
            vec![1, 1],
            vec![1, 1],
        )
        .unwrap()
    }

    fn chain_like() -> DynamicNetwork {
        // N = 2, node 1 has two inputs.
        let b = DenseMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        DynamicNetwork::new(
            DenseMatrix::zeros(3, 3),
            b,
            DenseMatrix::identity(3, 3),
            vec![2, 1],
            vec![2, 1],
            vec![2, 1],
        )
        .unwrap()
    }

    #[test]
    fn example_selection_matrices() {
        let net = two_node();
        let s: Selection = "(1,0,0,1)".parse().unwrap();
        let m = selection_to_matrices(&s, &net).unwrap();
        assert_eq!(
            m.pi,
            DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])
        );
        assert_eq!(
            m.gamma,
            DenseMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0])
        );

        let z = selection_to_matrices(&Selection::empty(2), &net).unwrap();
        assert!(z.pi.iter().chain(z.gamma.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn multi_channel_expansion() {
        let net = chain_like();
        let s = Selection::from_parts(&[true, false], &[false, false]).unwrap();
        let m = selection_to_matrices(&s, &net).unwrap();
        assert_eq!(m.pi.diagonal().as_slice(), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let net = two_node();
        assert!(matches!(
            selection_to_matrices(&Selection::empty(3), &net),
            Err(ModelError::Dimension(_))
        ));
    }

    #[test]
    fn cardinality_examples() {
        assert_eq!(cardinality(&Selection::empty(4)), 0);
        assert_eq!(cardinality(&"1001".parse().unwrap()), 2);
        assert_eq!(cardinality(&Selection::full(10)), 20);
    }

    #[test]
    fn logistic_examples() {
        let lc = LogisticConstraint::at_least(3, 2, 2);
        let s = Selection::from_active_nodes(3, &[1, 3], &[2, 3]).unwrap();
        assert!(logistic_satisfied(&s, &lc).unwrap());
        assert!(!logistic_satisfied(&Selection::empty(3), &lc).unwrap());
        let none = LogisticConstraint::none();
        assert!(logistic_satisfied(&Selection::full(3), &none).unwrap());
        assert!(logistic_satisfied(&Selection::empty(5), &none).unwrap());
        assert!(matches!(
            logistic_satisfied(&Selection::empty(2), &lc),
            Err(ModelError::Dimension(_))
        ));
    }

    #[test]
    fn reduced_bc_examples() {
        let net = two_node();
        let (bq, cq) = reduced_bc(&Selection::full(2), &net).unwrap();
        assert_eq!((&bq, &cq), (net.b(), net.c()));
        let (bq, cq) = reduced_bc(&Selection::empty(2), &net).unwrap();
        assert_eq!(bq.shape(), (2, 0));
        assert_eq!(cq.shape(), (0, 2));
    }

    #[test]
    fn rejects_cross_node_coupling_in_b() {
        let mut b = DenseMatrix::identity(2, 2);
        b[(0, 1)] = 1.0;
        let err = DynamicNetwork::new(
            DenseMatrix::zeros(2, 2),
            b,
            DenseMatrix::identity(2, 2),
            vec![1, 1],
            vec![1, 1],
            vec![1, 1],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::BlockStructure(_)));
    }

    #[test]
    fn rejects_rank_deficient_b() {
        let b = DenseMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let err = DynamicNetwork::new(
            DenseMatrix::zeros(2, 2),
            b,
            DenseMatrix::identity(2, 2),
            vec![2],
            vec![2],
            vec![2],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::Rank { matrix: "B", .. }));
    }

    #[test]
    fn network_json_round_trip() {
        let net = chain_like();
        let back = DynamicNetwork::from_json(&net.to_json()).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn logistic_json_round_trip() {
        let lc = LogisticConstraint::at_least(2, 1, 1);
        let json = lc.to_json();
        assert!(json.contains("\"Phi\"") && json.contains("\"phi\""));
        assert_eq!(LogisticConstraint::from_json(&json).unwrap(), lc);
        let empty = LogisticConstraint::from_json(r#"{"Phi": [], "phi": []}"#).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn selection_text_forms() {
        let s: Selection = "(0,1,0,1)".parse().unwrap();
        assert_eq!(s.bit_string(), "0101");
        assert_eq!(s.to_string(), "(0,1,0,1)");
        assert_eq!(s.actuator_nodes(), vec![2]);
        assert_eq!(s.sensor_nodes(), vec![2]);
        assert!("012".parse::<Selection>().is_err());
        assert!("101".parse::<Selection>().is_err());
    }
}
