use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::tol;
use crate::error::{Error, Result};

/// Dense real symmetric matrix.
///
/// Storage is always exactly symmetric: constructors average the input with
/// its transpose and write the same value to both halves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    data: Array2<f64>,
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Array1<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: Array2<f64>,
}

impl SymMatrix {
    /// Builds a symmetric matrix from a square array, symmetrizing it.
    pub fn from_array(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: c,
            });
        }
        if r == 0 {
            return Err(Error::InvalidArgument(
                "matrix dimension must be at least 1".into(),
            ));
        }
        Ok(Self::from_array_unchecked(a))
    }

    /// Symmetrizes a square, non-empty array. Panics in debug builds on misuse.
    pub(crate) fn from_array_unchecked(mut a: Array2<f64>) -> Self {
        let p = a.nrows();
        debug_assert_eq!(p, a.ncols());
        for i in 0..p {
            for j in (i + 1)..p {
                let v = 0.5 * (a[[i, j]] + a[[j, i]]);
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        Self { data: a }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let mut a = Array2::zeros((p, p));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                a[[i, j]] = v;
            }
        }
        Self::from_array(a)
    }

    pub fn identity(p: usize) -> Self {
        Self {
            data: Array2::eye(p),
        }
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            data: Array2::zeros((p, p)),
        }
    }

    pub fn from_diag(d: &[f64]) -> Self {
        Self {
            data: Array2::from_diag(&Array1::from(d.to_vec())),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[[i, j]]
    }

    /// Writes `v` to both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[[i, j]] = v;
        self.data[[j, i]] = v;
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn diag(&self) -> Array1<f64> {
        self.data.diag().to_owned()
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().sum()
    }

    /// `trace(self * other)` without forming the product.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        // Both symmetric, so tr(AB) = sum_ij a_ij b_ij.
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Sum of absolute values of every entry, diagonal included.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix {
            data: &self.data * c,
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data - &other.data,
        }
    }

    pub fn add_identity(&self, c: f64) -> SymMatrix {
        let mut out = self.clone();
        for i in 0..out.dim() {
            out.data[[i, i]] += c;
        }
        out
    }

    /// `P * self * P^T` where row `i` of the result is row `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> SymMatrix {
        let p = self.dim();
        assert_eq!(perm.len(), p, "permutation length must match dimension");
        let data = Array2::from_shape_fn((p, p), |(i, j)| self.data[[perm[i], perm[j]]]);
        SymMatrix { data }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Lower-triangular `L` with `L * L^T == self`.
    pub fn cholesky(&self) -> Result<Array2<f64>> {
        let p = self.dim();
        let a = &self.data;
        let mut l = Array2::<f64>::zeros((p, p));
        for j in 0..p {
            let mut d = a[[j, j]];
            for k in 0..j {
                d -= l[[j, k]] * l[[j, k]];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = d.sqrt();
            l[[j, j]] = ljj;
            for i in (j + 1)..p {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / ljj;
            }
        }
        Ok(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    pub fn log_det(&self) -> Result<f64> {
        let l = self.cholesky()?;
        Ok(2.0 * l.diag().iter().map(|v| v.ln()).sum::<f64>())
    }

    /// Inverse through the Cholesky factor; the result is exactly symmetric.
    pub fn invert(&self) -> Result<SymMatrix> {
        let l = self.cholesky()?;
        let linv = lower_triangular_inverse(&l);
        // A^-1 = L^-T L^-1
        let inv = linv.t().dot(&linv);
        Ok(SymMatrix::from_array_unchecked(inv))
    }

    /// Log-determinant and inverse from a single factorization.
    pub fn log_det_and_inverse(&self) -> Result<(f64, SymMatrix)> {
        let l = self.cholesky()?;
        let log_det = 2.0 * l.diag().iter().map(|v| v.ln()).sum::<f64>();
        let linv = lower_triangular_inverse(&l);
        Ok((
            log_det,
            SymMatrix::from_array_unchecked(linv.t().dot(&linv)),
        ))
    }

    /// Cyclic Jacobi eigendecomposition.
    pub fn eigen(&self) -> Eigen {
        jacobi_eigen(&self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().values[0]
    }

    /// Rebuilds `V diag(f(lambda)) V^T`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let eig = self.eigen();
        eig.reconstruct_with(f)
    }

    pub fn matmul(&self, other: &SymMatrix) -> Array2<f64> {
        self.data.dot(&other.data)
    }
}

impl Eigen {
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let mapped = self.values.mapv(f);
        let scaled = &self.vectors * &mapped.insert_axis(ndarray::Axis(0));
        SymMatrix::from_array_unchecked(scaled.dot(&self.vectors.t()))
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|v| v)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.data.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

fn lower_triangular_inverse(l: &Array2<f64>) -> Array2<f64> {
    let p = l.nrows();
    let mut inv = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        inv[[j, j]] = 1.0 / l[[j, j]];
        for i in (j + 1)..p {
            let mut s = 0.0;
            for k in j..i {
                s -= l[[i, k]] * inv[[k, j]];
            }
            inv[[i, j]] = s / l[[i, i]];
        }
    }
    inv
}

pub(crate) fn jacobi_eigen(a: &Array2<f64>) -> Eigen {
    let p = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(p);
    let norm: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = tol::JACOBI_OFFDIAG * norm.max(f64::MIN_POSITIVE);

    for _ in 0..tol::JACOBI_MAX_SWEEPS {
        let off: f64 = (0..p)
            .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= stop {
            break;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let aij = m[[i, j]];
                if aij == 0.0 {
                    continue;
                }
                let theta = (m[[j, j]] - m[[i, i]]) / (2.0 * aij);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let mki = m[[k, i]];
                    let mkj = m[[k, j]];
                    m[[k, i]] = c * mki - s * mkj;
                    m[[k, j]] = s * mki + c * mkj;
                }
                for k in 0..p {
                    let mik = m[[i, k]];
                    let mjk = m[[j, k]];
                    m[[i, k]] = c * mik - s * mjk;
                    m[[j, k]] = s * mik + c * mjk;
                }
                for k in 0..p {
                    let vki = v[[k, i]];
                    let vkj = v[[k, j]];
                    v[[k, i]] = c * vki - s * vkj;
                    v[[k, j]] = s * vki + c * vkj;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| m[[x, x]].total_cmp(&m[[y, y]]));
    let values = Array1::from_iter(order.iter().map(|&k| m[[k, k]]));
    let vectors = Array2::from_shape_fn((p, p), |(r, c)| v[[r, order[c]]]);
    Eigen { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random_pd(p: usize, seed: u64) -> SymMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = Array2::from_shape_fn((p, p), |_| rng.random_range(-1.0..1.0));
        SymMatrix::from_array(a.t().dot(&a))
            .unwrap()
            .add_identity(0.1)
    }

    #[test]
    fn constructor_symmetrizes_bit_exactly() {
        let a = ndarray::arr2(&[[1.0, 0.3], [0.1, 2.0]]);
        let s = SymMatrix::from_array(a).unwrap();
        assert_eq!(s.get(0, 1).to_bits(), s.get(1, 0).to_bits());
        assert_eq!(s.get(0, 1), 0.2);
    }

    #[test]
    fn rejects_non_square_and_empty() {
        assert!(SymMatrix::from_array(Array2::zeros((2, 3))).is_err());
        assert!(SymMatrix::from_array(Array2::zeros((0, 0))).is_err());
    }

    #[test]
    fn cholesky_examples() {
        let l = SymMatrix::identity(3).cholesky().unwrap();
        assert_eq!(l, Array2::<f64>::eye(3));

        let a = m(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let l = a.cholesky().unwrap();
        assert_abs_diff_eq!(l[[0, 0]], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[[1, 0]], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[[1, 1]], 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(l[[0, 1]], 0.0);
        let rec = SymMatrix::from_array(l.dot(&l.t())).unwrap();
        assert!(rec.sub(&a).frobenius_norm() / a.frobenius_norm() < tol::CHOLESKY_RECONSTRUCTION);

        assert!(matches!(
            m(&[&[1.0, 2.0], &[2.0, 1.0]]).cholesky(),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn log_det_examples() {
        assert_eq!(SymMatrix::identity(5).log_det().unwrap(), 0.0);
        assert_abs_diff_eq!(
            SymMatrix::from_diag(&[2.0, 2.0]).log_det().unwrap(),
            1.386294,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            m(&[&[4.0, 2.0], &[2.0, 3.0]]).log_det().unwrap(),
            8f64.ln(),
            epsilon = 1e-12
        );
        assert!(m(&[&[0.0, 0.0], &[0.0, 1.0]]).log_det().is_err());
    }

    #[test]
    fn invert_examples() {
        assert_eq!(
            SymMatrix::identity(4).invert().unwrap(),
            SymMatrix::identity(4)
        );
        let d = SymMatrix::from_diag(&[2.0, 4.0]).invert().unwrap();
        assert_abs_diff_eq!(d.get(0, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.get(1, 1), 0.25, epsilon = 1e-15);
        assert_eq!(d.get(0, 1), 0.0);

        let inv = m(&[&[2.0, 1.0], &[1.0, 2.0]]).invert().unwrap();
        let expected = m(&[&[2.0 / 3.0, -1.0 / 3.0], &[-1.0 / 3.0, 2.0 / 3.0]]);
        assert!(inv.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn invert_residual_small() {
        let a = random_pd(12, 3);
        let inv = a.invert().unwrap();
        let prod = a.matmul(&inv);
        let err = (&prod - &Array2::<f64>::eye(12))
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < tol::INVERSE_RESIDUAL);
    }

    #[test]
    fn eigen_examples() {
        let e = SymMatrix::from_diag(&[3.0, 1.0, 2.0]).eigen();
        assert_eq!(e.values.to_vec(), vec![1.0, 2.0, 3.0]);

        let e = m(&[&[0.0, 1.0], &[1.0, 0.0]]).eigen();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);

        let e = m(&[&[2.0, 1.0], &[1.0, 2.0]]).eigen();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn serde_round_trip() {
        let a = random_pd(3, 9);
        let json = serde_json::to_string(&a).unwrap();
        let b: SymMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn eigen_reconstructs_and_is_orthonormal(p in 1usize..9, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = SymMatrix::from_array(Array2::from_shape_fn((p, p), |_| rng.random_range(-3.0..3.0))).unwrap();
            let e = a.eigen();
            prop_assert!(e.reconstruct().max_abs_diff(&a) < 1e-8);
            let vtv = e.vectors.t().dot(&e.vectors);
            for i in 0..p {
                for j in 0..p {
                    let target = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((vtv[[i, j]] - target).abs() < 1e-8);
                }
            }
            for k in 1..p {
                prop_assert!(e.values[k - 1] <= e.values[k]);
            }
        }

        #[test]
        fn invert_round_trips(p in 1usize..10, seed in any::<u64>()) {
            let a = random_pd(p, seed);
            let back = a.invert().unwrap().invert().unwrap();
            prop_assert!(back.max_abs_diff(&a) < 1e-6);
        }

        #[test]
        fn log_det_matches_eigenvalues(p in 1usize..10, seed in any::<u64>()) {
            let a = random_pd(p, seed);
            let from_eig: f64 = a.eigen().values.iter().map(|v| v.ln()).sum();
            prop_assert!((a.log_det().unwrap() - from_eig).abs() < 1e-8);
        }
    }
}
