//! Dense linear algebra used by every other module: spectra, numerical rank,
//! left pseudo-inverse and symmetric eigenvalue bounds.

use nalgebra::{Complex, ComplexField, DMatrix, Schur, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Row-major logical dense matrix of reals.
pub type DenseMatrix = DMatrix<f64>;

pub type Complex64 = Complex<f64>;

const SCHUR_MAX_ITER: usize = 10_000;
const SVD_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    #[error("matrix is rank deficient: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

/// Eigenvalues of a square matrix together with its spectral abscissa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    #[serde(with = "complex_pairs")]
    pub eigenvalues: Vec<Complex64>,
    pub spectral_abscissa: f64,
}

impl SpectrumReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        let spectral_abscissa = eigenvalues
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            eigenvalues,
            spectral_abscissa,
        }
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_abscissa < 0.0
    }

    /// Abscissa strictly below `-margin`.
    pub fn is_stable_by(&self, margin: f64) -> bool {
        self.spectral_abscissa < -margin
    }
}

mod complex_pairs {
    use super::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect())
    }
}

fn ensure_finite<T: ComplexField>(m: &DMatrix<T>) -> Result<(), NumericsError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite)
    }
}

/// Eigenvalues via real Schur reduction. Deterministic for fixed input.
pub fn eigenvalues(m: &DenseMatrix) -> Result<SpectrumReport, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::Dimension(format!(
            "eigenvalues of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m)?;
    if m.nrows() == 0 {
        return Ok(SpectrumReport {
            eigenvalues: Vec::new(),
            spectral_abscissa: f64::NEG_INFINITY,
        });
    }
    let scale = m.amax();
    if scale == 0.0 {
        return Ok(SpectrumReport::from_eigenvalues(vec![
            Complex64::new(
                0.0, 0.0
            );
            m.nrows()
        ]));
    }
    let scaled = m / scale;
    let schur = [f64::EPSILON, 1e3 * f64::EPSILON]
        .into_iter()
        .find_map(|eps| Schur::try_new(scaled.clone(), eps, SCHUR_MAX_ITER))
        .ok_or(NumericsError::NoConvergence("Schur reduction"))?;
    let eig = schur.complex_eigenvalues();
    Ok(SpectrumReport::from_eigenvalues(
        eig.iter().map(|l| l * scale).collect(),
    ))
}

/// Singular values in non-increasing order, real or complex input.
pub fn singular_values<T>(m: &DMatrix<T>) -> Result<Vec<f64>, NumericsError>
where
    T: ComplexField<RealField = f64>,
{
    ensure_finite(m)?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(NumericsError::NoConvergence("SVD"))?;
    let mut s: Vec<f64> = svd.singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Default rank tolerance: `max(rows, cols) * eps * sigma_max`.
pub fn default_rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Number of singular values strictly above `tol`; `tol == 0` selects the
/// default tolerance.
pub fn numerical_rank<T>(m: &DMatrix<T>, tol: f64) -> Result<usize, NumericsError>
where
    T: ComplexField<RealField = f64>,
{
    if tol < 0.0 || !tol.is_finite() {
        return Err(NumericsError::Dimension(format!(
            "invalid rank tolerance {tol}"
        )));
    }
    let s = singular_values(m)?;
    let Some(&smax) = s.first() else {
        return Ok(0);
    };
    let tol = if tol == 0.0 {
        default_rank_tolerance(m.nrows(), m.ncols(), smax)
    } else {
        tol
    };
    Ok(s.iter().filter(|&&v| v > tol).count())
}

/// `sigma_max / sigma_min` over the `min(rows, cols)` singular values.
/// Infinite when the smallest one is zero.
pub fn condition_number<T>(m: &DMatrix<T>) -> Result<f64, NumericsError>
where
    T: ComplexField<RealField = f64>,
{
    let s = singular_values(m)?;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
        (Some(_), Some(_)) => Ok(f64::INFINITY),
        _ => Ok(1.0),
    }
}

/// `B† = (BᵀB)⁻¹Bᵀ` for a full column rank `b`.
pub fn pseudo_inverse_left(b: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    let rank = numerical_rank(b, 0.0)?;
    if rank < b.ncols() {
        return Err(NumericsError::RankDeficient {
            rank,
            expected: b.ncols(),
        });
    }
    let gram = b.transpose() * b;
    let chol = gram.cholesky().ok_or(NumericsError::RankDeficient {
        rank,
        expected: b.ncols(),
    })?;
    Ok(chol.solve(&b.transpose()))
}

/// Smallest and largest eigenvalue of the symmetric part of `m`.
pub fn symmetric_eigen_bounds(m: &DenseMatrix) -> Result<(f64, f64), NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::Dimension(format!(
            "symmetric eigenvalues of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m)?;
    if m.nrows() == 0 {
        return Ok((f64::INFINITY, f64::NEG_INFINITY));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lo = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Orthonormal basis (as columns) of the left null space of a complex
/// matrix, i.e. all `w` with `wᴴ m = 0` up to `tol`.
pub fn left_null_space(
    m: &DMatrix<Complex64>,
    tol: f64,
) -> Result<DMatrix<Complex64>, NumericsError> {
    ensure_finite(m)?;
    let rows = m.nrows();
    if m.ncols() == 0 {
        return Ok(DMatrix::identity(rows, rows));
    }
    // Left null space of m is the null space of mᴴ, spanned by the left
    // singular vectors past the numerical rank.
    let full = if m.ncols() < rows {
        let mut padded = DMatrix::zeros(rows, rows);
        padded.columns_mut(0, m.ncols()).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = full
        .try_svd(true, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(NumericsError::NoConvergence("SVD"))?;
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let cols: Vec<_> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return Ok(DMatrix::zeros(rows, 0));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Promote a real matrix to complex entries.
pub fn to_complex(m: &DenseMatrix) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Horizontal concatenation `[a, b]`.
pub fn hstack<T: ComplexField>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    assert_eq!(a.nrows(), b.nrows(), "hstack row mismatch");
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Vertical concatenation `[a; b]`.
pub fn vstack<T: ComplexField>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    assert_eq!(a.ncols(), b.ncols(), "vstack column mismatch");
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_spectrum() {
        let r = eigenvalues(&DenseMatrix::identity(3, 3)).unwrap();
        assert_eq!(r.eigenvalues.len(), 3);
        for l in &r.eigenvalues {
            assert_abs_diff_eq!(l.re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(l.im, 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(r.spectral_abscissa, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_spectrum() {
        let m = DenseMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let r = eigenvalues(&m).unwrap();
        let mut ims: Vec<f64> = r.eigenvalues.iter().map(|l| l.im).collect();
        ims.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ims[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ims[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.spectral_abscissa, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn companion_roots() {
        // (s+1)(s+2)(s+3) = s^3 + 6s^2 + 11s + 6
        let m =
            DenseMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -6.0, -11.0, -6.0]);
        let r = eigenvalues(&m).unwrap();
        let mut re: Vec<f64> = r.eigenvalues.iter().map(|l| l.re).collect();
        re.sort_by(f64::total_cmp);
        for (got, want) in re.iter().zip([-3.0, -2.0, -1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(r.spectral_abscissa, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn eigenvalues_reject_rectangular() {
        assert!(matches!(
            eigenvalues(&DenseMatrix::zeros(2, 3)),
            Err(NumericsError::Dimension(_))
        ));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&DenseMatrix::zeros(2, 3), 0.0).unwrap(), 0);
        assert_eq!(
            numerical_rank(&DenseMatrix::identity(4, 4), 0.0).unwrap(),
            4
        );
        let u = nalgebra::DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let v = nalgebra::DVector::from_vec(vec![0.5, 4.0]);
        assert_eq!(numerical_rank(&(u * v.transpose()), 0.0).unwrap(), 1);
    }

    #[test]
    fn pseudo_inverse_examples() {
        let i = DenseMatrix::identity(3, 3);
        assert_abs_diff_eq!(pseudo_inverse_left(&i).unwrap(), i, epsilon = 1e-14);

        let b = DenseMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let p = pseudo_inverse_left(&b).unwrap();
        assert_eq!(p.shape(), (1, 2));
        assert_abs_diff_eq!(p[(0, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(p[(0, 1)], 0.5, epsilon = 1e-14);

        let z = DenseMatrix::zeros(3, 1);
        assert!(matches!(
            pseudo_inverse_left(&z),
            Err(NumericsError::RankDeficient {
                rank: 0,
                expected: 1
            })
        ));
    }

    #[test]
    fn left_null_space_of_diagonal() {
        let m = to_complex(&DenseMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0]));
        let w = left_null_space(&m, 1e-9).unwrap();
        assert_eq!(w.ncols(), 1);
        assert_abs_diff_eq!(w[(0, 0)].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[(1, 0)].norm(), 0.0, epsilon = 1e-12);
    }
}
