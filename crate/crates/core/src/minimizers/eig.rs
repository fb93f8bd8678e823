//! Smallest eigenpair of a symmetric matrix via cyclic Jacobi rotations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit-norm eigenvector.
    pub vector: DVector<f64>,
}

/// Full eigendecomposition of `(H + Hᵀ)/2`: eigenvalues (unsorted) and the
/// matrix whose columns are the matching orthonormal eigenvectors.
pub fn symmetric_eigen(h: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(Error::invalid(format!(
            "expected a non-empty square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let mut a = (h + h.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm();
    let off_diagonal = |a: &DMatrix<f64>| {
        let mut s = 0.0;
        for q in 1..n {
            for p in 0..q {
                s += a[(p, q)] * a[(p, q)];
            }
        }
        s.sqrt()
    };

    let mut previous = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal(&a);
        if off <= f64::EPSILON * scale || off >= previous {
            break;
        }
        previous = off;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Ok((a.diagonal(), v))
}

/// The minimum (eigenvalue, eigenvector) pair of the symmetrized matrix.
pub fn min_eig(h: &DMatrix<f64>) -> Result<EigenPair> {
    let (values, vectors) = symmetric_eigen(h)?;
    let idx = values.argmin().0;
    let vector = vectors.column(idx).into_owned();
    let norm = vector.norm();
    Ok(EigenPair {
        value: values[idx],
        vector: vector / norm,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn residual(h: &DMatrix<f64>, pair: &EigenPair) -> f64 {
        let sym = (h + h.transpose()) * 0.5;
        (&sym * &pair.vector - &pair.vector * pair.value).norm()
    }

    #[test]
    fn diagonal() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -3.0]));
        let p = min_eig(&h).unwrap();
        assert_eq!(p.value, -3.0);
        assert_eq!(p.vector.abs(), DVector::from_vec(vec![0.0, 1.0]));
    }

    #[test]
    fn swap_matrix() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let p = min_eig(&h).unwrap();
        assert!((p.value + 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let aligned = (p.vector[0] - s).abs() < 1e-12 && (p.vector[1] + s).abs() < 1e-12;
        let flipped = (p.vector[0] + s).abs() < 1e-12 && (p.vector[1] - s).abs() < 1e-12;
        assert!(aligned || flipped, "{}", p.vector);
    }

    #[test]
    fn identity_has_any_unit_vector() {
        let p = min_eig(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!(p.value, 1.0);
        assert!((p.vector.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let mut h = DMatrix::identity(2, 2);
        h[(0, 1)] = f64::NAN;
        assert!(min_eig(&h).is_err());
        assert!(min_eig(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn asymmetric_input_is_symmetrized() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 4.0, 0.0, 1.0]);
        let p = min_eig(&h).unwrap();
        assert!((p.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_dense_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [1, 2, 3, 7, 20, 50] {
            for _ in 0..5 {
                let h = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                let sym = (&h + h.transpose()) * 0.5;
                let p = min_eig(&h).unwrap();
                let reference = sym.clone().symmetric_eigen().eigenvalues.min();
                assert!((p.value - reference).abs() <= 1e-10 * (1.0 + reference.abs()));
                assert!(residual(&h, &p) <= 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn eigenvectors_are_orthonormal(entries in prop::collection::vec(-5.0f64..5.0, 16)) {
            let h = DMatrix::from_row_slice(4, 4, &entries);
            let (_, v) = symmetric_eigen(&h).unwrap();
            let gram = v.transpose() * &v;
            prop_assert!((gram - DMatrix::identity(4, 4)).norm() < 1e-12);
        }
    }
}
