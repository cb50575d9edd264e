//! Small dense helpers shared by the projectors and the regularity estimates.

use nalgebra::DMatrix;

/// Gram-Schmidt on the columns of `m` (twice, for stability). Columns that are
/// numerically dependent on earlier ones are dropped.
pub fn orthonormal_columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for col in m.column_iter() {
        let mut v: Vec<f64> = col.iter().copied().collect();
        if let Some(u) = orthogonalize(&mut v, &basis, 1e-10 * scale) {
            basis.push(u);
        }
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of `span(basis)` in `R^n`.
pub fn orthogonal_complement(basis: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut all: Vec<Vec<f64>> = basis.to_vec();
    let mut out = Vec::new();
    for i in 0..n {
        if all.len() == n {
            break;
        }
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        if let Some(u) = orthogonalize(&mut e, &all, 1e-8) {
            all.push(u.clone());
            out.push(u);
        }
    }
    out
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>], tol: f64) -> Option<Vec<f64>> {
    for _ in 0..2 {
        for q in basis {
            let c: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > tol).then(|| v.iter().map(|x| x / n).collect())
}

pub fn basis_matrix(basis: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, basis.len(), |i, j| basis[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_completes_basis() {
        let m = DMatrix::from_column_slice(3, 2, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0]);
        let b = orthonormal_columns(&m);
        assert_eq!(b.len(), 1);
        let c = orthogonal_complement(&b, 3);
        assert_eq!(c.len(), 2);
        let all: Vec<Vec<f64>> = b.iter().chain(&c).cloned().collect();
        let q = basis_matrix(&all, 3);
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-12);
    }
}
