//! Globally adaptive Gauss-Kronrod quadrature.
//!
//! The integrands in this crate are smooth except for power-law blow-up at an
//! endpoint (1/c near a degeneracy), so a 7-15 pair with worst-panel-first
//! bisection converges quickly even for ranges spanning many decades.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// 15-point Kronrod abscissae (positive half) and weights, 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_kronrod = f_center * WGK[7];
    let mut res_gauss = f_center * WG[3];
    let mut res_abs = res_kronrod.abs();

    let mut fv = [0.0f64; 15];
    fv[7] = f_center;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            // odd Kronrod indices are the embedded Gauss nodes
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (fv[7] - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let value = res_kronrod * half;
    let res_abs_scaled = res_abs * half.abs();
    let res_asc_scaled = res_asc * half.abs();
    let mut err = ((res_kronrod - res_gauss) * half).abs();
    if res_asc_scaled != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc_scaled).powf(1.5);
        err = if scale < 1.0 {
            res_asc_scaled * scale
        } else {
            res_asc_scaled
        };
    }
    let min_err = 50.0 * f64::EPSILON * res_abs_scaled;
    if min_err > err {
        err = min_err;
    }

    Panel {
        a,
        b,
        value,
        error: err,
    }
}

/// Integrate `f` over `[a, b]` to the requested relative tolerance.
///
/// Worst panel is bisected first; integrable endpoint singularities are
/// resolved by the geometric shrinking of panels toward the endpoint.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    const MAX_PANELS: usize = 4000;
    let mut heap = BinaryHeap::new();
    let first = kronrod_panel(&f, lo, hi);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut evals = 15usize;
    heap.push(first);

    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_PANELS {
            return Err(Error::QuadratureNonConvergence {
                a,
                b,
                err: total_err,
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel at floating-point resolution; keep its estimate and stop refining it
            total_err -= worst.error;
            total_err += 0.0;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = kronrod_panel(&f, worst.a, mid);
        let right = kronrod_panel(&f, mid, worst.b);
        evals += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    if !total.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            a,
            b,
            err: f64::INFINITY,
            panels: heap.len(),
        });
    }
    Ok(QuadResult {
        value: sign * total,
        abs_error: total_err,
        evaluations: evals,
    })
}

/// Convenience wrapper with the crate-wide default tolerance 1e-10 relative.
pub fn integrate_default<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<QuadResult> {
    integrate(f, a, b, 1e-10, 1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate_default(|x| 3.0 * x * x, 0.0, 2.0).unwrap();
        assert!((r.value - 8.0).abs() < 1e-12);
    }

    #[test]
    fn singular_endpoint_power() {
        // integral of x^{-1/2} over (1e-14, 1) = 2 (1 - 1e-7)
        let r = integrate(|x| x.powf(-0.5), 1e-14, 1.0, 1e-10, 0.0).unwrap();
        let exact = 2.0 * (1.0 - 1e-7);
        assert!((r.value - exact).abs() / exact < 1e-9, "got {}", r.value);
    }

    #[test]
    fn steep_reciprocal_power() {
        // integral of s^{-1.25} over (1e-8, 1) = 4 (1e2 - 1)
        let r = integrate(|s| s.powf(-1.25), 1e-8, 1.0, 1e-10, 0.0).unwrap();
        let exact = 4.0 * (1e2 - 1.0);
        assert!((r.value - exact).abs() / exact < 1e-9, "got {}", r.value);
    }

    #[test]
    fn log_integrand() {
        let r = integrate_default(|x| x.ln(), 1e-12, 1.0).unwrap();
        // antiderivative x ln x - x
        let exact = -1.0 - (1e-12 * (1e-12f64).ln() - 1e-12);
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let fwd = integrate_default(|x| x, 0.0, 1.0).unwrap();
        let rev = integrate_default(|x| x, 1.0, 0.0).unwrap();
        assert!((fwd.value + rev.value).abs() < 1e-14);
    }

    #[test]
    fn non_integrable_singularity_errors() {
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, 1e-10, 0.0);
        assert!(r.is_err());
    }
}
