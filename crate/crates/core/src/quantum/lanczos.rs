//! Lanczos iteration with full reorthogonalization for the lowest eigenpair of
//! a real symmetric operator given only through its action on vectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub(crate) struct Eigenpair {
    pub value: f64,
    pub vector: DVector<f64>,
}

fn orthogonalize(w: &mut DVector<f64>, basis: &[DVector<f64>]) {
    // two passes keep the Krylov basis orthogonal to machine precision
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(w);
            w.axpy(-c, q, 1.0);
        }
    }
}

/// Lowest eigenpair of `op` restricted to the orthogonal complement of `deflate`.
pub(crate) fn lowest_eigenpair<F>(
    dim: usize,
    op: F,
    start: DVector<f64>,
    deflate: &[DVector<f64>],
    tol: f64,
) -> Result<Eigenpair>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let max_iter = dim.saturating_sub(deflate.len());
    if max_iter == 0 {
        return Err(Error::invalid(
            "deflation space covers the whole Hilbert space",
        ));
    }
    let mut q0 = start;
    orthogonalize(&mut q0, deflate);
    let norm = q0.norm();
    if norm < 1e-12 {
        return Err(Error::invalid(
            "Lanczos start vector lies in the deflated space",
        ));
    }
    q0.unscale_mut(norm);

    let mut basis: Vec<DVector<f64>> = vec![q0];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    loop {
        let k = basis.len() - 1;
        let mut w = op(&basis[k]);
        let a = basis[k].dot(&w);
        alpha.push(a);
        orthogonalize(&mut w, deflate);
        orthogonalize(&mut w, &basis);
        let b = w.norm();

        let m = alpha.len();
        let exhausted = m >= max_iter || b < 1e-12 * a.abs().max(1.0);
        if exhausted || m.is_multiple_of(8) {
            let t = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let (idx, &theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .expect("non-empty tridiagonal");
            let s = eig.eigenvectors.column(idx);
            let residual = b * s[m - 1].abs();
            if exhausted || residual < tol * theta.abs().max(1.0) {
                let mut v = DVector::zeros(dim);
                for (j, q) in basis.iter().take(m).enumerate() {
                    v.axpy(s[j], q, 1.0);
                }
                let n = v.norm();
                v.unscale_mut(n);
                return Ok(Eigenpair {
                    value: theta,
                    vector: v,
                });
            }
        }
        beta.push(b);
        w.unscale_mut(b);
        basis.push(w);
    }
}
