//! Small dense helpers on top of nalgebra's SVD.

use nalgebra::{DMatrix, DVector};

/// Minimum-norm least-squares solution of `a x = rhs`, dropping singular
/// values below `cutoff * sigma_max`.
pub(crate) fn pinv_solve(a: &DMatrix<f64>, rhs: &DVector<f64>, cutoff: f64) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma = &svd.singular_values;
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let mut coeff = u.transpose() * rhs;
    for (k, s) in sigma.iter().enumerate() {
        if *s > cutoff * smax && *s > 0.0 {
            coeff[k] /= *s;
        } else {
            coeff[k] = 0.0;
        }
    }
    v_t.transpose() * coeff
}

/// Full right-singular basis of `a` with singular values sorted descending.
///
/// Wide matrices are padded with zero rows so that the returned `v` is
/// square; padded directions report singular value zero.
pub(crate) fn full_svd(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (rows, cols) = a.shape();
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let mut svd = padded.svd(false, true);
    svd.sort_by_singular_values();
    let v = svd.v_t.expect("v_t requested").transpose();
    (svd.singular_values, v)
}

pub(crate) fn norm_sq(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn norm(v: &DVector<f64>) -> f64 {
    libm::sqrt(norm_sq(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_solves_underdetermined_with_min_norm() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let rhs = DVector::from_vec(alloc::vec![2.0]);
        let x = pinv_solve(&a, &rhs, 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn full_svd_pads_wide_matrices() {
        let a = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 2.0]);
        let (s, v) = full_svd(&a);
        assert_eq!(v.shape(), (3, 3));
        assert!((s[0] - 2.0).abs() < 1e-14);
        assert!(s[1].abs() < 1e-14 && s[2].abs() < 1e-14);
        assert!((v[(2, 0)].abs() - 1.0).abs() < 1e-14);
    }
}
