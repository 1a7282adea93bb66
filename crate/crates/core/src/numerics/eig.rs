use crate::scalar::{c, Real};

/// Eigendecomposition `A = V diag(values) V^T` of a small real symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T, const N: usize> {
    pub values: [T; N],
    /// Column `j` is the eigenvector for `values[j]`.
    pub vectors: [[T; N]; N],
}

/// Cyclic Jacobi rotations; converges quadratically for the 4x4 coupling blocks.
pub fn symmetric_eigen<T: Real, const N: usize>(a: &[[T; N]; N]) -> SymmetricEigen<T, N> {
    let mut m = *a;
    let mut v = [[T::zero(); N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let scale = a.iter().flatten().fold(T::zero(), |s, x| s + *x * *x).sqrt();
    let tiny = scale * T::epsilon() * c(1e-3);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..N {
            for q in (p + 1)..N {
                off += m[p][q] * m[p][q];
            }
        }
        if off.sqrt() <= tiny || off == T::zero() {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = m[p][q];
                if apq.abs() <= tiny {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                for k in 0..N {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = cs * mkp - sn * mkq;
                    m[k][q] = sn * mkp + cs * mkq;
                }
                for k in 0..N {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = cs * mpk - sn * mqk;
                    m[q][k] = sn * mpk + cs * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = cs * vkp - sn * vkq;
                    row[q] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    let mut values = [T::zero(); N];
    for (i, val) in values.iter_mut().enumerate() {
        *val = m[i][i];
    }
    SymmetricEigen { values, vectors: v }
}
