//! Small dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{DMatrix, SymmetricEigen};

/// Exact determinant of a square integer matrix (row-major) by fraction-free
/// Bareiss elimination. Returns `None` on `i128` overflow.
pub fn bareiss_det(entries: &[i128], dim: usize) -> Option<i128> {
    if dim == 0 {
        return Some(1);
    }
    let mut m = entries.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..dim - 1 {
        if m[k * dim + k] == 0 {
            let swap = (k + 1..dim).find(|&r| m[r * dim + k] != 0);
            match swap {
                Some(r) => {
                    for c in 0..dim {
                        m.swap(k * dim + c, r * dim + c);
                    }
                    sign = -sign;
                }
                None => return Some(0),
            }
        }
        for i in k + 1..dim {
            for j in k + 1..dim {
                let a = m[i * dim + j].checked_mul(m[k * dim + k])?;
                let b = m[i * dim + k].checked_mul(m[k * dim + j])?;
                m[i * dim + j] = a.checked_sub(b)? / prev;
            }
        }
        prev = m[k * dim + k];
    }
    Some(sign * m[dim * dim - 1])
}

/// Leading principal minors of an integer matrix, all strictly positive.
pub fn leading_minors_positive(entries: &[i128], dim: usize) -> Option<bool> {
    for k in 1..=dim {
        let mut sub = Vec::with_capacity(k * k);
        for i in 0..k {
            sub.extend_from_slice(&entries[i * dim..i * dim + k]);
        }
        if bareiss_det(&sub, k)? <= 0 {
            return Some(false);
        }
    }
    Some(true)
}

/// Volume of the parallelotope spanned by `vectors`, i.e. `sqrt(det Gram)`.
///
/// Computed as the product of the residual norms of a modified Gram-Schmidt
/// sweep, which equals the square root of the Gram determinant and is exactly
/// zero for repeated inputs.
pub fn parallelotope_volume(vectors: &[Vec<f64>]) -> f64 {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    let mut volume = 1.0;
    for v in vectors {
        let mut r = v.clone();
        for q in &basis {
            let proj: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= proj * qi;
            }
        }
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        volume *= norm;
        if norm == 0.0 {
            return 0.0;
        }
        basis.push(r.iter().map(|x| x / norm).collect());
    }
    volume
}

/// Eigenpairs of a symmetric matrix, ascending by eigenvalue.
pub fn symmetric_eigen(entries: &[f64], dim: usize) -> Vec<(f64, Vec<f64>)> {
    let m = DMatrix::from_row_slice(dim, dim, entries);
    let eig = SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..dim)
        .map(|i| {
            let v = eig.eigenvectors.column(i).iter().copied().collect();
            (eig.eigenvalues[i], v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Flip `v` so that its first non-negligible component is positive.
pub fn canonical_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bareiss_matches_small_determinants() {
        assert_eq!(bareiss_det(&[2, 1, 1, 3], 2), Some(5));
        assert_eq!(bareiss_det(&[0, 1, 1, 0], 2), Some(-1));
        assert_eq!(bareiss_det(&[1, 2, 3, 4, 5, 6, 7, 8, 9], 3), Some(0));
        assert_eq!(bareiss_det(&[2, -1, 0, -1, 2, -1, 0, -1, 2], 3), Some(4));
    }

    #[test]
    fn minors_detect_indefinite() {
        assert_eq!(leading_minors_positive(&[1, 0, 0, 2], 2), Some(true));
        assert_eq!(leading_minors_positive(&[1, 2, 2, 1], 2), Some(false));
        assert_eq!(leading_minors_positive(&[-1, 0, 0, -1], 2), Some(false));
    }

    #[test]
    fn volume_of_unit_square_and_degenerate_pair() {
        assert_eq!(parallelotope_volume(&[vec![1.0, 0.0], vec![0.0, 1.0]]), 1.0);
        assert_eq!(parallelotope_volume(&[vec![1.0, 0.0], vec![1.0, 0.0]]), 0.0);
    }

    #[test]
    fn eigen_sorted_ascending() {
        let pairs = symmetric_eigen(&[2.0, 0.0, 0.0, 0.0], 2);
        assert!(pairs[0].0.abs() < 1e-14);
        assert!((pairs[0].1[1].abs() - 1.0).abs() < 1e-14);
    }
}
