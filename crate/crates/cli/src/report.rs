//! Machine-readable solve report.

use anyhow::{anyhow, bail};
use saasel_core::bench::{Method, MethodOutcome};
use saasel_core::model::{DynamicNetwork, Selection};
use saasel_core::numerics::DenseMatrix;
use saasel_core::sofs::{verify_closed_loop, SofError};
use serde::{Deserialize, Serialize};

/// Contents depend only on the inputs, so equal runs give equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub status: String,
    pub selection: Option<Selection>,
    pub actuators: Vec<usize>,
    pub sensors: Vec<usize>,
    pub cardinality: Option<usize>,
    /// Full `n_u × n_y` gain, row by row.
    pub gain: Option<Vec<Vec<f64>>>,
    pub spectral_abscissa: Option<f64>,
    /// `[re, im]` pairs, largest real part first.
    pub eigenvalues: Vec<[f64; 2]>,
    pub iterations: usize,
    pub lmi_solves: usize,
    pub reason: Option<String>,
}

pub fn rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub fn matrix_from_rows(r: &[Vec<f64>], nrows: usize, ncols: usize) -> anyhow::Result<DenseMatrix> {
    if r.len() != nrows || r.iter().any(|row| row.len() != ncols) {
        bail!("gain must be {nrows}x{ncols}");
    }
    if r.iter().flatten().any(|v| !v.is_finite()) {
        return Err(anyhow!("gain has non-finite entries"));
    }
    Ok(DenseMatrix::from_fn(nrows, ncols, |i, j| r[i][j]))
}

impl SolveReport {
    /// Re-verifies the returned gain on the full model.
    pub fn from_outcome(net: &DynamicNetwork, out: &MethodOutcome) -> Result<Self, SofError> {
        let verified = match (&out.selection, &out.gain) {
            (Some(s), Some(g)) => Some(verify_closed_loop(net, s, &g.f_full)?),
            _ => None,
        };
        let stable = verified.as_ref().is_some_and(|v| v.spectral_abscissa < 0.0);
        Ok(Self {
            method: out.method,
            status: match (&out.selection, stable) {
                (Some(_), true) => "feasible",
                (Some(_), false) => "unverified",
                (None, _) => "infeasible",
            }
            .into(),
            selection: out.selection,
            actuators: out
                .selection
                .map(|s| s.actuator_nodes())
                .unwrap_or_default(),
            sensors: out.selection.map(|s| s.sensor_nodes()).unwrap_or_default(),
            cardinality: out.selection.map(|s| s.cardinality()),
            gain: out.gain.as_ref().map(|g| rows(&g.f_full)),
            spectral_abscissa: verified.as_ref().map(|v| v.spectral_abscissa),
            eigenvalues: verified
                .map(|v| v.eigenvalues.iter().map(|l| [l.re, l.im]).collect())
                .unwrap_or_default(),
            iterations: out.iterations,
            lmi_solves: out.lmi_solves,
            reason: out.diagnostic.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
