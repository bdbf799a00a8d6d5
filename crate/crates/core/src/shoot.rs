//! Shooting integration of the second-order equations in the variables
//! (psi, c psi'), with L2/Lp tail diagnostics.
//!
//! The integrated flux variable c psi' stays finite and continuous across a
//! degeneracy even where psi' itself blows up, so the first-order system is
//! psi' = flux / c, flux' = gamma psi. The deficiency equation, the harmonic
//! equation (gamma = 0) and the blow-up equation (c psi')' = psi are all of
//! this form.

use crate::classify::Classifier;
use crate::coeff::{Coefficient, Side};
use crate::error::{Error, Result};
use serde::Serialize;

/// Cash-Karp embedded Runge-Kutta 4(5) step.
fn rk_step<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]>(
    f: &F,
    x: f64,
    y: &[f64; N],
    h: f64,
) -> ([f64; N], f64) {
    const B: [[f64; 5]; 5] = [
        [0.2, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
        [0.3, -0.9, 1.2, 0.0, 0.0],
        [-11.0 / 54.0, 2.5, -70.0 / 27.0, 35.0 / 27.0, 0.0],
        [
            1631.0 / 55296.0,
            175.0 / 512.0,
            575.0 / 13824.0,
            44275.0 / 110592.0,
            253.0 / 4096.0,
        ],
    ];
    const A: [f64; 5] = [0.2, 0.3, 0.6, 1.0, 0.875];
    const C5: [f64; 6] = [
        37.0 / 378.0,
        0.0,
        250.0 / 621.0,
        125.0 / 594.0,
        0.0,
        512.0 / 1771.0,
    ];
    const C4: [f64; 6] = [
        2825.0 / 27648.0,
        0.0,
        18575.0 / 48384.0,
        13525.0 / 55296.0,
        277.0 / 14336.0,
        0.25,
    ];

    let mut k = [[0.0f64; N]; 6];
    k[0] = f(x, y);
    for s in 0..5 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s + 1) {
            for i in 0..N {
                ys[i] += h * B[s][j] * kj[i];
            }
        }
        k[s + 1] = f(x + A[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = 0.0f64;
    for i in 0..N {
        let mut d5 = 0.0;
        let mut d4 = 0.0;
        for s in 0..6 {
            d5 += C5[s] * k[s][i];
            d4 += C4[s] * k[s][i];
        }
        y5[i] += h * d5;
        let scale = 1e-12 + y[i].abs().max(y5[i].abs());
        err = err.max((h * (d5 - d4)).abs() / scale);
    }
    (y5, err)
}

#[derive(Debug, Clone, Serialize)]
pub struct ShootingSolution {
    /// Sample points in ascending order.
    pub grid: Vec<f64>,
    pub psi: Vec<f64>,
    /// The integrated flux variable c psi'.
    pub flux: Vec<f64>,
    pub gamma: f64,
    /// Cumulative integral of psi^2 from the left end of the grid.
    pub l2_partial: Vec<f64>,
    /// Fitted power of |psi| over the lowest decade of the grid.
    pub lp_tail_exponent: Option<f64>,
    /// psi^2 non-decreasing along the grid (within integrator tolerance).
    pub monotone_square: bool,
    /// Set when step control hit the floor before reaching the target.
    pub truncated: bool,
}

impl ShootingSolution {
    pub fn total_l2(&self) -> f64 {
        *self.l2_partial.last().unwrap_or(&0.0)
    }

    /// Value of psi at x by linear interpolation on the sample grid; the
    /// fitted tail power extrapolates below the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if n == 0 {
            return 0.0;
        }
        if x <= self.grid[0] {
            if let Some(p) = self.lp_tail_exponent {
                if self.grid[0] > 0.0 && x > 0.0 {
                    return self.psi[0] * (x / self.grid[0]).powf(p);
                }
            }
            return self.psi[0];
        }
        if x >= self.grid[n - 1] {
            return self.psi[n - 1];
        }
        let j = self.grid.partition_point(|g| *g < x).max(1);
        let (x0, x1) = (self.grid[j - 1], self.grid[j]);
        let t = (x - x0) / (x1 - x0);
        self.psi[j - 1] * (1.0 - t) + self.psi[j] * t
    }

    pub fn normalize_l2(&mut self) {
        let norm = self.total_l2().sqrt();
        if norm > 0.0 {
            for v in self.psi.iter_mut() {
                *v /= norm;
            }
            for v in self.flux.iter_mut() {
                *v /= norm;
            }
            for v in self.l2_partial.iter_mut() {
                *v /= norm * norm;
            }
        }
    }
}

/// Raw integration state threaded between segments.
#[derive(Debug, Clone, Copy)]
pub struct ShotState {
    pub x: f64,
    pub psi: f64,
    pub flux: f64,
    pub mass: f64,
}

struct Recorder {
    xs: Vec<f64>,
    psi: Vec<f64>,
    flux: Vec<f64>,
    mass: Vec<f64>,
}

/// Integrate psi' = flux/c, flux' = gamma psi, mass' = psi^2 from state to
/// x_end (either direction), appending accepted steps to the recorder.
fn integrate_raw(
    ceval: &dyn Fn(f64) -> f64,
    gamma: f64,
    mut state: ShotState,
    x_end: f64,
    rel_tol: f64,
    rec: &mut Recorder,
) -> (ShotState, bool) {
    let rhs = |x: f64, y: &[f64; 3]| -> [f64; 3] {
        let c = ceval(x);
        let dpsi = if c > 0.0 { y[1] / c } else { 0.0 };
        [dpsi, gamma * y[0], y[0] * y[0]]
    };
    let dir = (x_end - state.x).signum();
    if dir == 0.0 {
        return (state, false);
    }
    let mut h = dir * 1e-3 * (state.x.abs().max(x_end.abs()).max(1e-6));
    let mut y = [state.psi, state.flux, state.mass];
    let mut truncated = false;
    let max_steps = 4_000_000usize;
    if rec.xs.is_empty() {
        rec.xs.push(state.x);
        rec.psi.push(y[0]);
        rec.flux.push(y[1]);
        rec.mass.push(y[2]);
    }
    for _ in 0..max_steps {
        if (x_end - state.x) * dir <= 0.0 {
            break;
        }
        if (state.x + h - x_end) * dir > 0.0 {
            h = x_end - state.x;
        }
        let floor = 1e-13 * state.x.abs().max(1e-280);
        if h.abs() < floor {
            truncated = true;
            break;
        }
        let (y_new, err) = rk_step(&rhs, state.x, &y, h);
        if err <= rel_tol || h.abs() <= floor * 2.0 {
            state.x += h;
            y = y_new;
            rec.xs.push(state.x);
            rec.psi.push(y[0]);
            rec.flux.push(y[1]);
            rec.mass.push(y[2]);
            let grow = if err > 0.0 {
                0.9 * (rel_tol / err).powf(0.2)
            } else {
                5.0
            };
            h *= grow.clamp(0.2, 5.0);
        } else {
            h *= (0.9 * (rel_tol / err).powf(0.25)).clamp(0.1, 1.0);
        }
        if !y.iter().all(|v| v.is_finite()) {
            truncated = true;
            break;
        }
    }
    if (x_end - state.x) * dir > 0.0 {
        truncated = true;
    }
    state.psi = y[0];
    state.flux = y[1];
    state.mass = y[2];
    (state, truncated)
}

fn fit_tail_power(xs: &[f64], psi: &[f64]) -> Option<f64> {
    // log-log least squares over the lowest decade of the grid
    let x0 = xs.first().copied()?;
    if x0 <= 0.0 {
        return None;
    }
    let hi = x0 * 10.0;
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(psi)
        .filter(|(x, p)| **x <= hi && p.abs() > 1e-280)
        .map(|(x, p)| (x.ln(), p.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

fn finish(rec: Recorder, gamma: f64, truncated: bool) -> ShootingSolution {
    let ascending = rec.xs.windows(2).all(|w| w[1] >= w[0]);
    let (grid, psi, flux, mass) = if ascending {
        (rec.xs, rec.psi, rec.flux, rec.mass)
    } else {
        (
            rec.xs.into_iter().rev().collect(),
            rec.psi.into_iter().rev().collect(),
            rec.flux.into_iter().rev().collect(),
            rec.mass.into_iter().rev().collect::<Vec<_>>(),
        )
    };
    let m0 = mass.first().copied().unwrap_or(0.0);
    let l2_partial: Vec<f64> = mass.iter().map(|m| (m - m0).abs()).collect();
    let lp_tail_exponent = fit_tail_power(&grid, &psi);
    let scale = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let monotone_square = grid
        .windows(2)
        .zip(psi.windows(2))
        .all(|(_, p)| p[1] * p[1] >= p[0] * p[0] - 1e-9 * scale * scale);
    ShootingSolution {
        grid,
        psi,
        flux,
        gamma,
        l2_partial,
        lp_tail_exponent,
        monotone_square,
        truncated,
    }
}

/// Integrate the deficiency equation (gamma + H*) psi = 0 from a seeded point.
/// A partial solution is returned with the truncation marker set when step
/// control underflows before reaching `x_end`.
pub fn integrate_deficiency(
    c: &Coefficient,
    gamma: f64,
    x_start: f64,
    seed: (f64, f64),
    x_end: f64,
) -> Result<ShootingSolution> {
    if gamma < 0.0 {
        return Err(Error::Invalid("gamma must be non-negative".into()));
    }
    if seed.0 == 0.0 && seed.1 == 0.0 {
        return Err(Error::Invalid("seed must not vanish identically".into()));
    }
    let lo = x_start.min(x_end);
    let hi = x_start.max(x_end);
    let zs = c.zero_set(1e-12);
    if zs.intersects_open(lo, hi) {
        return Err(Error::CoefficientVanishes { a: lo, b: hi });
    }
    let ceval = |x: f64| c.eval_unchecked(x);
    let mut rec = Recorder {
        xs: Vec::new(),
        psi: Vec::new(),
        flux: Vec::new(),
        mass: Vec::new(),
    };
    let state = ShotState {
        x: x_start,
        psi: seed.0,
        flux: seed.1,
        mass: 0.0,
    };
    let (_, truncated) = integrate_raw(&ceval, gamma, state, x_end, 1e-10, &mut rec);
    Ok(finish(rec, gamma, truncated))
}

/// Far-field start for the recessive (L2 at infinity) deficiency solution:
/// march until the WKB distance integral of sqrt(gamma/c) reaches ~40, or an
/// algebraic-decay cap when c grows too fast for the metric to diverge.
fn far_field_start(ceval: &dyn Fn(f64) -> f64, gamma: f64) -> f64 {
    let mut x = 1.0;
    let mut dist = 0.0;
    while x < 1e4 {
        let step = 0.25 * x;
        let mid = x + 0.5 * step;
        let cm = ceval(mid).max(1e-300);
        dist += step * (gamma / cm).sqrt();
        x += step;
        if dist >= 40.0 {
            return x;
        }
    }
    x
}

/// The normalized deficiency solution eta_gamma on the half-line, recovered by
/// integrating downward from the far field (the direction that damps the
/// non-L2 component) to `x_inner`.
pub fn eta(c: &Coefficient, side: Side, gamma: f64, x_inner: f64) -> Result<ShootingSolution> {
    if gamma <= 0.0 {
        return Err(Error::Invalid(
            "gamma must be positive for the deficiency solution".into(),
        ));
    }
    let sgn = side.sign();
    let ceval = move |s: f64| c.eval_unchecked(sgn * s);
    let x_out = far_field_start(&ceval, gamma);
    let c_out = ceval(x_out).max(1e-300);
    // WKB decaying seed; any admixture of the growing solution dies on the way down
    let seed_psi = 1.0;
    let seed_flux = -(gamma * c_out).sqrt() * seed_psi;
    let mut rec = Recorder {
        xs: Vec::new(),
        psi: Vec::new(),
        flux: Vec::new(),
        mass: Vec::new(),
    };
    let state = ShotState {
        x: x_out,
        psi: seed_psi,
        flux: seed_flux,
        mass: 0.0,
    };
    let (_, truncated) = integrate_raw(&ceval, gamma, state, x_inner, 1e-10, &mut rec);
    let mut sol = finish(rec, gamma, truncated);
    // orient positively and normalize to unit L2 on the truncated range
    let flip = sol.psi.last().map_or(1.0, |v| v.signum());
    if flip < 0.0 {
        for v in sol.psi.iter_mut() {
            *v = -*v;
        }
        for v in sol.flux.iter_mut() {
            *v = -*v;
        }
    }
    sol.normalize_l2();
    Ok(sol)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeficiencyDiagnostics {
    pub index: u32,
    pub tail_exponent: f64,
    /// Partial masses of the normalized solution over (eps, 1) at the probe depths.
    pub partial_masses: [f64; 3],
    pub per_decade_growth: f64,
}

/// Deficiency index of the half-line operator on the given side: 1 when the
/// recessive solution keeps finite L2 mass toward the degeneracy, 0 when it
/// diverges. Decided by the extrapolated tail exponent with the partial-mass
/// growth rate as corroboration.
pub fn deficiency_index(c: &Coefficient, side: Side, gamma: f64) -> Result<DeficiencyDiagnostics> {
    let probes = [1e-4, 1e-6, 1e-8];
    let sgn = side.sign();
    let ceval = move |s: f64| c.eval_unchecked(sgn * s);
    let x_out = far_field_start(&ceval, gamma);
    let c_out = ceval(x_out).max(1e-300);
    let mut rec = Recorder {
        xs: Vec::new(),
        psi: Vec::new(),
        flux: Vec::new(),
        mass: Vec::new(),
    };
    let mut state = ShotState {
        x: x_out,
        psi: 1.0,
        flux: -(gamma * c_out).sqrt(),
        mass: 0.0,
    };
    let mut truncated = false;
    // land exactly on x = 1 to anchor the normalization, then on each probe
    let mut checkpoints = vec![1.0f64];
    checkpoints.extend_from_slice(&probes);
    let mut mass_at = Vec::new();
    let mut mass_at_one = 0.0;
    let mut psi_at_one = 1.0;
    for (i, target) in checkpoints.iter().enumerate() {
        let (s, t) = integrate_raw(&ceval, gamma, state, *target, 1e-10, &mut rec);
        state = s;
        truncated |= t;
        if i == 0 {
            mass_at_one = state.mass;
            psi_at_one = state.psi;
            if psi_at_one == 0.0 {
                psi_at_one = 1.0;
            }
        } else {
            mass_at.push(state.mass);
        }
        if truncated {
            break;
        }
    }
    if truncated || mass_at.len() != 3 {
        return Err(Error::Indeterminate(
            "shooting truncated before reaching the innermost probe".into(),
        ));
    }
    let sol = finish(rec, gamma, false);
    let tail = sol.lp_tail_exponent.ok_or_else(|| {
        Error::Indeterminate("tail exponent fit failed near the degeneracy".into())
    })?;
    // partial masses over (eps, 1) for the solution normalized by psi(1)
    let norm = psi_at_one * psi_at_one;
    let partial: Vec<f64> = mass_at
        .iter()
        .map(|m| (m - mass_at_one).abs() / norm)
        .collect();
    let g1 = (partial[1] / partial[0].max(1e-300)).sqrt();
    let g2 = (partial[2] / partial[1].max(1e-300)).sqrt();
    let per_decade = g1.max(g2);

    // x^{2p} integrable on (0,1) iff p > -1/2; the boundary case diverges
    let exponent_divergent = tail <= -0.5 + 0.01;
    let ratio_divergent = g1 > 3.0 && g2 > 3.0;
    let index = if exponent_divergent || ratio_divergent {
        0
    } else {
        1
    };
    if !exponent_divergent && ratio_divergent && tail > -0.35 {
        return Err(Error::Indeterminate(format!(
            "tail exponent {tail:.3} suggests convergence but partial masses grow {g1:.2}x/{g2:.2}x per decade: {partial:?}"
        )));
    }
    Ok(DeficiencyDiagnostics {
        index,
        tail_exponent: tail,
        partial_masses: [partial[0], partial[1], partial[2]],
        per_decade_growth: per_decade,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EtaProperties {
    pub positive: bool,
    pub non_increasing: bool,
    pub tail_exponent: f64,
}

impl EtaProperties {
    /// eta in Lp(0,1) iff its tail power p satisfies p * tail > -1; membership
    /// flips at the same p as for nu (resolvent Lp-boundedness criterion).
    pub fn lp_member(&self, p: f64) -> bool {
        if self.tail_exponent >= 0.0 {
            return true;
        }
        if p.is_infinite() {
            return false;
        }
        p * self.tail_exponent > -1.0
    }
}

/// Positivity/monotonicity flags of a normalized deficiency solution.
pub fn eta_properties(sol: &ShootingSolution) -> EtaProperties {
    let scale = sol.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let positive = sol.psi.iter().all(|v| *v >= -1e-9 * scale);
    let non_increasing = sol.psi.windows(2).all(|w| w[1] <= w[0] + 1e-7 * scale);
    EtaProperties {
        positive,
        non_increasing,
        tail_exponent: sol.lp_tail_exponent.unwrap_or(0.0),
    }
}

/// Boundary seeding for the blow-up equation (c psi')' = psi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BlowupBoundary {
    /// Flux ratio (c psi')(0+) = gamma psi(0+), gamma >= 0.
    FluxRatio(f64),
    /// The limiting Dirichlet case psi(0+) = 0.
    Dirichlet,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub monotone_square: bool,
    pub growth_factor: f64,
    pub solution: ShootingSolution,
}

/// Verify the no-bounded-solution blow-up: under the growth hypothesis
/// (integral of s/c(s) infinite) every solution with a non-negative boundary
/// ratio has non-decreasing psi^2 and grows without bound.
pub fn blowup_check(c: &Coefficient, boundary: BlowupBoundary, x_max: f64) -> Result<BlowupReport> {
    if let BlowupBoundary::FluxRatio(g) = boundary {
        if g < 0.0 {
            return Err(Error::Invalid("boundary ratio must be non-negative".into()));
        }
    }
    // growth hypothesis: mu unbounded at infinity
    let classifier = Classifier::default();
    let side = Side::Right;
    let mu_unbounded = match c.infinity_power(side) {
        Some((_, d)) => d <= 2.0,
        None => {
            let p = classifier.membership(c, side)?;
            !p.mu_in_linf.holds
        }
    };
    if !mu_unbounded {
        return Err(Error::GrowthHypothesisViolated);
    }

    let eps = 1e-8;
    let (psi0, flux0) = match boundary {
        BlowupBoundary::FluxRatio(g) => (1.0, g),
        BlowupBoundary::Dirichlet => (eps, c.eval_unchecked(eps)),
    };
    let ceval = |s: f64| c.eval_unchecked(s);
    let mut rec = Recorder {
        xs: Vec::new(),
        psi: Vec::new(),
        flux: Vec::new(),
        mass: Vec::new(),
    };
    let state = ShotState {
        x: eps,
        psi: psi0,
        flux: flux0,
        mass: 0.0,
    };
    let (_, truncated) = integrate_raw(&ceval, 1.0, state, x_max, 1e-10, &mut rec);
    let sol = finish(rec, 1.0, truncated);
    let first_nonzero = sol
        .psi
        .iter()
        .position(|v| v.abs() > 0.0)
        .ok_or_else(|| Error::Invalid("blow-up solution vanished identically".into()))?;
    let base = sol.psi[first_nonzero];
    let last = *sol.psi.last().unwrap();
    let growth_factor = (last * last) / (base * base);
    let scale = sol.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let monotone_square = sol
        .psi
        .windows(2)
        .skip(first_nonzero)
        .all(|w| w[1] * w[1] >= w[0] * w[0] - 1e-10 * scale * scale);
    Ok(BlowupReport {
        monotone_square,
        growth_factor,
        solution: sol,
    })
}
