use nalgebra::{DMatrix, DVector};

/// Solution set `{ particular + null_basis * y }` of a linear system.
#[derive(Debug, Clone)]
pub(crate) struct AffineSolution {
    pub particular: DVector<f64>,
    pub null_basis: DMatrix<f64>,
}

impl AffineSolution {
    pub fn nullity(&self) -> usize {
        self.null_basis.ncols()
    }
}

const RANK_TOL: f64 = 1e-10;

/// Solves `a x = b` via SVD. Returns `None` when the system is inconsistent.
pub(crate) fn solve_affine(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<AffineSolution> {
    let cols = a.ncols();
    if cols == 0 {
        return (b.amax() <= 1e-9)
            .then(|| AffineSolution { particular: DVector::zeros(0), null_basis: DMatrix::zeros(0, 0) });
    }
    // Pad wide systems with zero rows so the thin SVD spans every column.
    let padded = if a.nrows() < cols { a.clone().resize_vertically(cols, 0.0) } else { a.clone() };
    let b_padded = if b.len() < cols { b.clone().resize_vertically(cols, 0.0) } else { b.clone() };
    let svd = padded.svd(true, true);
    let u = svd.u.as_ref()?;
    let v_t = svd.v_t.as_ref()?;
    let sigma_max = svd.singular_values.max();
    let cutoff = RANK_TOL * sigma_max.max(1.0);

    let mut x = DVector::zeros(cols);
    let mut null_cols = Vec::new();
    let k = svd.singular_values.len();
    for r in 0..k {
        let s = svd.singular_values[r];
        if s > cutoff {
            let coef = u.column(r).dot(&b_padded) / s;
            x += v_t.row(r).transpose() * coef;
        } else {
            null_cols.push(v_t.row(r).transpose());
        }
    }
    let residual = (a * &x - b).amax();
    if residual > 1e-8 * (1.0 + b.amax()) {
        return None;
    }
    let null_basis = if null_cols.is_empty() { DMatrix::zeros(cols, 0) } else { DMatrix::from_columns(&null_cols) };
    Some(AffineSolution { particular: x, null_basis })
}

/// Euclidean projection of `v` onto `{x >= 0, sum x = total}`.
pub(crate) fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    if total <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - total) / (i as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_solution() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![3.0, 5.0]);
        let s = solve_affine(&a, &b).unwrap();
        assert_eq!(s.nullity(), 0);
        assert!((s.particular[0] - 0.8).abs() < 1e-12);
        assert!((s.particular[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_and_inconsistent() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let s = solve_affine(&a, &DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert_eq!(s.nullity(), 1);
        let n = s.null_basis.column(0);
        assert!((n[0] + n[1]).abs() < 1e-12);
        assert!(solve_affine(&a, &DVector::from_vec(vec![1.0, 3.0])).is_none());
    }

    #[test]
    fn wide_system_nullspace() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let s = solve_affine(&a, &DVector::from_vec(vec![3.0])).unwrap();
        assert_eq!(s.nullity(), 2);
        for c in 0..2 {
            assert!((a.clone() * s.null_basis.column(c)).amax() < 1e-12);
        }
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5], 1.0);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = project_simplex(&[3.0, 0.0, -1.0], 2.0);
        assert!((p[0] - 2.0).abs() < 1e-15 && p[1] == 0.0 && p[2] == 0.0);
        let p = project_simplex(&[1.0, 1.0, 1.0], 1.5);
        assert!(p.iter().all(|x| (x - 0.5).abs() < 1e-15));
    }
}
