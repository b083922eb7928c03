//! Dense pseudoinverse via one-sided Jacobi SVD.

use alloc::vec;
use alloc::vec::Vec;

/// Moore-Penrose pseudoinverse of a row-major `rows x cols` matrix. Singular
/// values below `rcond * sigma_max` are treated as zero. Returns the
/// row-major `cols x rows` result.
pub fn pinv(a: &[f64], rows: usize, cols: usize, rcond: f64) -> Vec<f64> {
    assert_eq!(a.len(), rows * cols);
    if rows >= cols {
        pinv_tall(a, rows, cols, rcond)
    } else {
        let at = transpose(a, rows, cols);
        let p = pinv_tall(&at, cols, rows, rcond); // rows x cols
        transpose(&p, rows, cols)
    }
}

pub fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = a[r * cols + c];
        }
    }
    t
}

/// Pseudoinverse for `m >= n`. Columns are orthogonalized in place by Jacobi
/// rotations, so `A V = U S` with `V` accumulated from the same rotations.
fn pinv_tall(a: &[f64], m: usize, n: usize, rcond: f64) -> Vec<f64> {
    // Column-major working copy.
    let mut u = vec![0.0; m * n];
    for r in 0..m {
        for c in 0..n {
            u[c * m + r] = a[r * n + c];
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let cp = &u[p * m..(p + 1) * m];
                    let cq = &u[q * m..(q + 1) * m];
                    let mut al = 0.0;
                    let mut be = 0.0;
                    let mut ga = 0.0;
                    for i in 0..m {
                        al += cp[i] * cp[i];
                        be += cq[i] * cq[i];
                        ga += cp[i] * cq[i];
                    }
                    (al, be, ga)
                };
                if gamma == 0.0 || libm::fabs(gamma) <= eps * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut u, m, p, q, c, s);
                rotate(&mut v, n, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..n)
        .map(|j| libm::sqrt(u[j * m..(j + 1) * m].iter().map(|x| x * x).sum::<f64>()))
        .collect();
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let cutoff = rcond * smax;
    // pinv = V S^+ U^T where U column j = u_j / sigma_j, so
    // pinv[i][r] = sum_j v[i][j] * u_j[r] / sigma_j^2.
    let mut out = vec![0.0; n * m];
    for j in 0..n {
        if sigma[j] <= cutoff || sigma[j] == 0.0 {
            continue;
        }
        let inv = 1.0 / (sigma[j] * sigma[j]);
        let uj = &u[j * m..(j + 1) * m];
        for i in 0..n {
            let coef = v[j * n + i] * inv;
            if coef == 0.0 {
                continue;
            }
            let row = &mut out[i * m..(i + 1) * m];
            for r in 0..m {
                row[r] += coef * uj[r];
            }
        }
    }
    out
}

fn rotate(mat: &mut [f64], len: usize, p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = mat.split_at_mut(q * len);
    let cp = &mut lo[p * len..(p + 1) * len];
    let cq = &mut hi[..len];
    for i in 0..len {
        let a = cp[i];
        let b = cq[i];
        cp[i] = c * a - s * b;
        cq[i] = s * a + c * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matmul(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                out[i * m + j] = (0..k).map(|l| a[i * k + l] * b[l * m + j]).sum();
            }
        }
        out
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn penrose_conditions_wide_and_tall() {
        let vals = crate::rng::normal_vec(3, "pinv", 7 * 12);
        for (r, c) in [(7usize, 12usize), (12, 7)] {
            let a = &vals[..r * c];
            let p = pinv(a, r, c, 1e-12);
            let apa = matmul(&matmul(a, &p, r, c, r), a, r, r, c);
            assert!(close(&apa, a, 1e-10));
            let pap = matmul(&matmul(&p, a, c, r, c), &p, c, c, r);
            assert!(close(&pap, &p, 1e-10));
        }
    }

    #[test]
    fn rank_deficient_uses_cutoff() {
        // Second row is twice the first.
        let a = [1.0, 2.0, 3.0, 2.0, 4.0, 6.0];
        let p = pinv(&a, 2, 3, 1e-8);
        let apa = matmul(&matmul(&a, &p, 2, 3, 2), &a, 2, 2, 3);
        assert!(close(&apa, &a, 1e-10));
        assert!(p.iter().all(|v| v.is_finite()));
    }
}
