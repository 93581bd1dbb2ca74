use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::sym::{jacobi_eigen, SymMatrix};
use crate::error::{Error, Result};

/// Dense complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMatrix {
    data: Array2<Complex64>,
}

impl HermMatrix {
    /// Hermitianizes a square array: `h_ij = (a_ij + conj(a_ji)) / 2`, with
    /// `h_ji` written as the exact conjugate and a real diagonal.
    pub fn from_array(mut a: Array2<Complex64>) -> Result<Self> {
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
        for i in 0..r {
            a[[i, i]] = Complex64::new(a[[i, i]].re, 0.0);
            for j in (i + 1)..r {
                let v = (a[[i, j]] + a[[j, i]].conj()) * 0.5;
                a[[i, j]] = v;
                a[[j, i]] = v.conj();
            }
        }
        Ok(Self { data: a })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[[i, j]]
    }

    pub fn as_array(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn real_part(&self) -> SymMatrix {
        SymMatrix::from_array_unchecked(self.data.mapv(|z| z.re))
    }

    pub fn add_identity(&self, c: f64) -> HermMatrix {
        let mut out = self.clone();
        for i in 0..out.dim() {
            out.data[[i, i]] += c;
        }
        out
    }

    pub fn permuted(&self, perm: &[usize]) -> HermMatrix {
        let p = self.dim();
        assert_eq!(perm.len(), p, "permutation length must match dimension");
        HermMatrix {
            data: Array2::from_shape_fn((p, p), |(i, j)| self.data[[perm[i], perm[j]]]),
        }
    }

    /// Lower-triangular complex `L` with `L L^H == self`.
    pub fn cholesky(&self) -> Result<Array2<Complex64>> {
        let p = self.dim();
        let a = &self.data;
        let mut l = Array2::<Complex64>::zeros((p, p));
        for j in 0..p {
            let mut d = a[[j, j]].re;
            for k in 0..j {
                d -= l[[j, k]].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = d.sqrt();
            l[[j, j]] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..p {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]].conj();
                }
                l[[i, j]] = s / ljj;
            }
        }
        Ok(l)
    }

    pub fn invert(&self) -> Result<HermMatrix> {
        let l = self.cholesky()?;
        let p = self.dim();
        let mut linv = Array2::<Complex64>::zeros((p, p));
        for j in 0..p {
            linv[[j, j]] = Complex64::new(1.0, 0.0) / l[[j, j]];
            for i in (j + 1)..p {
                let mut s = Complex64::new(0.0, 0.0);
                for k in j..i {
                    s -= l[[i, k]] * linv[[k, j]];
                }
                linv[[i, j]] = s / l[[i, i]];
            }
        }
        // A^-1 = L^-H L^-1
        let linv_h = linv.t().mapv(|z| z.conj());
        HermMatrix::from_array(linv_h.dot(&linv))
    }

    /// Real eigenvalues, ascending, computed from the `2p x 2p` real
    /// embedding `[[Re, -Im], [Im, Re]]` whose spectrum repeats each
    /// eigenvalue twice.
    pub fn eigenvalues(&self) -> Array1<f64> {
        let p = self.dim();
        let mut emb = Array2::<f64>::zeros((2 * p, 2 * p));
        for i in 0..p {
            for j in 0..p {
                let z = self.data[[i, j]];
                emb[[i, j]] = z.re;
                emb[[i + p, j + p]] = z.re;
                emb[[i, j + p]] = -z.im;
                emb[[i + p, j]] = z.im;
            }
        }
        let all = jacobi_eigen(&emb).values;
        Array1::from_iter((0..p).map(|k| 0.5 * (all[2 * k] + all[2 * k + 1])))
    }

    pub fn is_hermitian_exact(&self) -> bool {
        let p = self.dim();
        (0..p).all(|i| {
            self.data[[i, i]].im == 0.0
                && ((i + 1)..p).all(|j| {
                    let a = self.data[[i, j]];
                    let b = self.data[[j, i]];
                    a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == (-b.im).to_bits()
                })
        })
    }
}
