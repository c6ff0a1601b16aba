//! Small dense linear algebra: symmetric 3×3 eigen-decomposition by cyclic
//! Jacobi rotations.

pub type Mat3 = [[f64; 3]; 3];

pub const JACOBI_TOLERANCE: f64 = 1e-14;
pub const JACOBI_MAX_SWEEPS: usize = 50;

/// Eigenvalues (descending) and the matching unit eigenvectors stored as columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricEigen {
    pub values: [f64; 3],
    pub vectors: Mat3,
    pub sweeps: usize,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> [f64; 3] {
        [self.vectors[0][k], self.vectors[1][k], self.vectors[2][k]]
    }
}

fn off_diagonal_norm(a: &Mat3) -> f64 {
    libm::sqrt(2.0 * (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]))
}

fn frobenius_norm(a: &Mat3) -> f64 {
    libm::sqrt(a.iter().flatten().map(|x| x * x).sum::<f64>())
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
///
/// Sweeps stop once the off-diagonal Frobenius norm drops below
/// `JACOBI_TOLERANCE · ‖A‖_F` or after `JACOBI_MAX_SWEEPS` sweeps.
pub fn symmetric_eigen(m: &Mat3) -> SymmetricEigen {
    let mut a = *m;
    let mut v: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let scale = frobenius_norm(&a);
    let mut sweeps = 0;

    while sweeps < JACOBI_MAX_SWEEPS && off_diagonal_norm(&a) > JACOBI_TOLERANCE * scale {
        sweeps += 1;
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / libm::sqrt(t * t + 1.0);
            let s = t * c;

            // A ← Jᵀ A J with the rotation acting on rows/columns p and q.
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            a[p][q] = 0.0;
            a[q][p] = 0.0;

            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = [a[order[0]][order[0]], a[order[1]][order[1]], a[order[2]][order[2]]];
    let mut vectors = [[0.0; 3]; 3];
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..3 {
            vectors[r][dst] = v[r][src];
        }
    }
    SymmetricEigen { values, vectors, sweeps }
}
