//! Symmetric tridiagonal kernels: LDL^T factorization/solve, Sturm-sequence
//! eigenvalue bisection, and inverse iteration for eigenvectors.

use crate::error::{Error, Result};

/// Factorized symmetric tridiagonal matrix T = L D L^T.
#[derive(Debug, Clone)]
pub struct TridiagFactor {
    d: Vec<f64>,
    l: Vec<f64>,
}

/// Factor the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (len n-1). Fails on a vanishing pivot.
pub fn ldlt_factor(diag: &[f64], off: &[f64]) -> Result<TridiagFactor> {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1));
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n.saturating_sub(1)];
    let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for i in 0..n {
        let mut di = diag[i];
        if i > 0 {
            di -= l[i - 1] * l[i - 1] * d[i - 1];
        }
        if di.abs() < 1e-14 * scale {
            return Err(Error::EigenNonConvergence(format!(
                "pivot {di:.3e} at row {i}"
            )));
        }
        d[i] = di;
        if i + 1 < n {
            l[i] = off[i] / di;
        }
    }
    Ok(TridiagFactor { d, l })
}

/// Factor with tiny pivots replaced by a signed floor instead of failing;
/// only for inverse iteration, where a near-singular shift is the point.
fn ldlt_factor_perturbed(diag: &[f64], off: &[f64]) -> TridiagFactor {
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n.saturating_sub(1)];
    for i in 0..n {
        let mut di = diag[i];
        if i > 0 {
            di -= l[i - 1] * l[i - 1] * d[i - 1];
        }
        let floor = 1e-300 + 1e-15 * diag[i].abs();
        if di.abs() < floor {
            di = if di < 0.0 { -floor } else { floor };
        }
        d[i] = di;
        if i + 1 < n {
            l[i] = off[i] / di;
        }
    }
    TridiagFactor { d, l }
}

impl TridiagFactor {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 1..n {
            b[i] -= self.l[i - 1] * b[i - 1];
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n - 1).rev() {
            b[i] -= self.l[i] * b[i + 1];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Number of negative pivots = eigenvalues below the factored shift.
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|p| **p < 0.0).count()
    }
}

/// Count of eigenvalues of (diag, off) strictly below `shift`, by the Sturm
/// sequence of the shifted LDL^T recursion (pivot signs are robust even when
/// the factorization itself would be declined).
pub fn eigen_count_below(diag: &[f64], off: &[f64], shift: f64) -> usize {
    let n = diag.len();
    let mut count = 0usize;
    let mut d = diag[0] - shift;
    if d < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let denom = if d == 0.0 { 1e-300 } else { d };
        d = (diag[i] - shift) - off[i - 1] * off[i - 1] / denom;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// k smallest eigenvalues of the symmetric tridiagonal matrix, by bisection.
pub fn smallest_eigenvalues(diag: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let n = diag.len();
    let k = k.min(n);
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += off[i - 1].abs();
        }
        if i + 1 < n {
            r += off[i].abs();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    (0..k)
        .map(|j| {
            let mut a = lo;
            let mut b = hi;
            // invariant: count(a) <= j < count(b)
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if eigen_count_below(diag, off, mid) <= j {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a <= 1e-15 * scale {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Eigenvector for an isolated eigenvalue estimate, by inverse iteration with
/// a perturbed factorization (tiny pivots floored, never failed).
pub fn eigenvector(diag: &[f64], off: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut shift = lambda;
    let mut v = vec![1.0; n];
    // deterministic, slightly irregular start to avoid orthogonal seeds
    for (i, vi) in v.iter_mut().enumerate() {
        *vi = 1.0 + 0.3 * ((i as f64 * 0.7368421352).sin());
    }
    normalize(&mut v);
    let mut last_residual = f64::INFINITY;
    for attempt in 0..5 {
        let shifted: Vec<f64> = diag.iter().map(|d| d - shift).collect();
        let factor = ldlt_factor_perturbed(&shifted, off);
        for _ in 0..8 {
            factor.solve_in_place(&mut v);
            normalize(&mut v);
        }
        let r = residual(diag, off, lambda, &v);
        if r < 1e-8 * scale.max(lambda.abs()) {
            return Ok(v);
        }
        last_residual = r;
        shift = lambda + (attempt as f64 + 1.0) * 1e-11 * scale.max(lambda.abs());
    }
    Err(Error::EigenNonConvergence(format!(
        "inverse iteration residual {last_residual:.3e} at lambda {lambda:.6e}"
    )))
}

fn residual(diag: &[f64], off: &[f64], lambda: f64, v: &[f64]) -> f64 {
    let n = diag.len();
    let mut r = 0.0f64;
    for i in 0..n {
        let mut t = (diag[i] - lambda) * v[i];
        if i > 0 {
            t += off[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            t += off[i] * v[i + 1];
        }
        r = r.max(t.abs());
    }
    r
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn solve_matches_direct() {
        let (d, e) = laplacian(8);
        let f = ldlt_factor(&d, &e).unwrap();
        let b: Vec<f64> = (0..8).map(|i| (i as f64 + 1.0).sin()).collect();
        let x = f.solve(&b);
        // residual check
        for i in 0..8 {
            let mut r = d[i] * x[i] - b[i];
            if i > 0 {
                r += e[i - 1] * x[i - 1];
            }
            if i + 1 < 8 {
                r += e[i] * x[i + 1];
            }
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_of_discrete_laplacian() {
        // eigenvalues 2 - 2 cos(j pi / (n+1))
        let n = 50;
        let (d, e) = laplacian(n);
        let lams = smallest_eigenvalues(&d, &e, 3);
        for (j, lam) in lams.iter().enumerate() {
            let exact =
                2.0 - 2.0 * ((j as f64 + 1.0) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!(
                (lam - exact).abs() < 1e-10,
                "lambda_{j} = {lam}, exact {exact}"
            );
        }
    }

    #[test]
    fn eigenvector_matches_sine_mode() {
        let n = 40;
        let (d, e) = laplacian(n);
        let lam = smallest_eigenvalues(&d, &e, 1)[0];
        let v = eigenvector(&d, &e, lam).unwrap();
        let scale = v[0].signum();
        for (i, vi) in v.iter().enumerate() {
            let exact = ((i as f64 + 1.0) * std::f64::consts::PI / (n as f64 + 1.0)).sin();
            let norm: f64 = (0..n)
                .map(|j| {
                    ((j as f64 + 1.0) * std::f64::consts::PI / (n as f64 + 1.0))
                        .sin()
                        .powi(2)
                })
                .sum::<f64>()
                .sqrt();
            assert!((vi * scale - exact / norm).abs() < 1e-8, "component {i}");
        }
    }

    #[test]
    fn sturm_count_is_monotone() {
        let (d, e) = laplacian(20);
        let mut prev = 0;
        for s in [-1.0, 0.1, 0.5, 1.0, 2.0, 3.5, 4.1] {
            let c = eigen_count_below(&d, &e, s);
            assert!(c >= prev);
            prev = c;
        }
        assert_eq!(eigen_count_below(&d, &e, -1e-9), 0);
        assert_eq!(eigen_count_below(&d, &e, 4.0 + 1e-9), 20);
    }
}
