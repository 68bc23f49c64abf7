//! Dense 4x4 complex elimination used by the matching system.

use num_complex::Complex64;

pub(crate) type Mat4 = [[Complex64; 4]; 4];

/// Determinant by Gaussian elimination with partial pivoting.
pub(crate) fn det4(m: &Mat4) -> Complex64 {
    let mut a = *m;
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..4 {
        let p = (k..4)
            .max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))
            .unwrap_or(k);
        if a[p][k].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..4 {
            let f = a[i][k] / a[k][k];
            let pivot_row = a[k];
            for (x, t) in a[i][k..].iter_mut().zip(&pivot_row[k..]) {
                *x -= f * t;
            }
        }
    }
    det
}

/// Outcome of full-pivot elimination: pivot magnitudes in elimination order
/// and the vector spanning the numerically smallest direction.
pub(crate) struct PivotedNull {
    pub pivots: [f64; 4],
    pub vector: [Complex64; 4],
}

/// Full-pivot elimination; the last column of the permuted triangle is set
/// free and back-substituted.
pub(crate) fn null_vector(m: &Mat4) -> PivotedNull {
    let mut a = *m;
    let mut cols = [0usize, 1, 2, 3];
    let mut pivots = [0.0; 4];
    for k in 0..4 {
        let (mut pi, mut pj, mut best) = (k, k, -1.0);
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().skip(k) {
                if v.norm() > best {
                    best = v.norm();
                    pi = i;
                    pj = j;
                }
            }
        }
        a.swap(pi, k);
        for row in a.iter_mut() {
            row.swap(pj, k);
        }
        cols.swap(pj, k);
        pivots[k] = best;
        if best == 0.0 {
            continue;
        }
        for i in k + 1..4 {
            let f = a[i][k] / a[k][k];
            let pivot_row = a[k];
            for (x, t) in a[i][k..].iter_mut().zip(&pivot_row[k..]) {
                *x -= f * t;
            }
        }
    }

    let zero = Complex64::new(0.0, 0.0);
    let mut y = [zero; 4];
    y[3] = Complex64::new(1.0, 0.0);
    for i in (0..3).rev() {
        let mut acc = zero;
        for j in i + 1..4 {
            acc += a[i][j] * y[j];
        }
        y[i] = if a[i][i].norm() == 0.0 {
            zero
        } else {
            -acc / a[i][i]
        };
    }
    let mut vector = [zero; 4];
    for (k, &c) in cols.iter().enumerate() {
        vector[c] = y[k];
    }
    PivotedNull { pivots, vector }
}
