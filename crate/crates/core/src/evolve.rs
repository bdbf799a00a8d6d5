//! Semigroup marching e^{-tH} and the submarkov metrics.
//!
//! Backward Euler solves (W + dt A) u_{n+1} = W u_n; on an M-matrix (penalty
//! sign >= 0) the inverse is entrywise non-negative, so positivity and the
//! L-infinity bound hold exactly, which is why it is the default scheme for
//! every positivity or Markov assertion. Crank-Nicolson is offered for
//! accuracy studies only: it can undershoot on stiff modes.

use crate::error::{Error, Result};
use crate::grid::DiscreteOperator;
use crate::linalg::{self, TridiagFactor};
use crate::rng::Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    BackwardEuler,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SnapshotMetrics {
    pub time: f64,
    pub min_value: f64,
    pub sup_norm: f64,
    /// Mass-weighted L1 norm.
    pub l1_mass: f64,
    pub l2_norm: f64,
    pub mass_left_of_origin: f64,
    pub mass_right_of_origin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SemigroupTrace {
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub metrics: Vec<SnapshotMetrics>,
    pub scheme: Scheme,
}

impl SemigroupTrace {
    pub fn last(&self) -> &Vec<f64> {
        self.snapshots
            .last()
            .expect("trace holds the initial snapshot")
    }
}

fn factor_step(op: &DiscreteOperator, dt: f64, weight: f64) -> Result<TridiagFactor> {
    let (a_diag, a_off) = op.stiffness();
    let w = op.mass_weights();
    let diag: Vec<f64> = (0..op.n_dofs())
        .map(|i| w[i] + weight * dt * a_diag[i])
        .collect();
    let off: Vec<f64> = a_off.iter().map(|a| weight * dt * a).collect();
    let factor = linalg::ldlt_factor(&diag, &off).map_err(|_| Error::SingularStep { dt })?;
    // (W + dt A) must stay positive definite: a negative pivot means dt
    // crossed the resolvent pole of a negative-eigenvalue extension
    if factor.negative_pivots() > 0 {
        return Err(Error::SingularStep { dt });
    }
    Ok(factor)
}

/// One implicit step of length dt.
pub fn step(op: &DiscreteOperator, u: &[f64], dt: f64, scheme: Scheme) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Invalid("time step must be positive".into()));
    }
    let w = op.mass_weights();
    match scheme {
        Scheme::BackwardEuler => {
            let f = factor_step(op, dt, 1.0)?;
            let rhs: Vec<f64> = u.iter().zip(w).map(|(ui, wi)| ui * wi).collect();
            Ok(f.solve(&rhs))
        }
        Scheme::CrankNicolson => {
            let f = factor_step(op, dt, 0.5)?;
            let (a_diag, a_off) = op.stiffness();
            let n = op.n_dofs();
            let mut rhs = vec![0.0; n];
            for i in 0..n {
                let mut au = a_diag[i] * u[i];
                if i > 0 {
                    au += a_off[i - 1] * u[i - 1];
                }
                if i + 1 < n {
                    au += a_off[i] * u[i + 1];
                }
                rhs[i] = w[i] * u[i] - 0.5 * dt * au;
            }
            Ok(f.solve(&rhs))
        }
    }
}

fn metrics(
    op: &DiscreteOperator,
    t: f64,
    u: &[f64],
    left_w: &[f64],
    right_w: &[f64],
) -> SnapshotMetrics {
    let w = op.mass_weights();
    let mut min_value = f64::INFINITY;
    let mut sup = 0.0f64;
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut ml = 0.0;
    let mut mr = 0.0;
    for i in 0..u.len() {
        min_value = min_value.min(u[i]);
        sup = sup.max(u[i].abs());
        l1 += w[i] * u[i].abs();
        l2 += w[i] * u[i] * u[i];
        ml += left_w[i] * u[i].abs();
        mr += right_w[i] * u[i].abs();
    }
    SnapshotMetrics {
        time: t,
        min_value,
        sup_norm: sup,
        l1_mass: l1,
        l2_norm: l2.sqrt(),
        mass_left_of_origin: ml,
        mass_right_of_origin: mr,
    }
}

/// March n_steps implicit steps to the horizon, recording per-time metrics.
pub fn evolve(
    op: &DiscreteOperator,
    initial: &[f64],
    horizon: f64,
    n_steps: usize,
    scheme: Scheme,
) -> Result<SemigroupTrace> {
    if n_steps == 0 {
        return Err(Error::Invalid("n_steps must be at least 1".into()));
    }
    if initial.len() != op.n_dofs() {
        return Err(Error::Invalid(format!(
            "initial datum has {} entries for {} DOFs",
            initial.len(),
            op.n_dofs()
        )));
    }
    let dt = horizon / n_steps as f64;
    let (left_w, right_w) = op.side_mass_weights();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut snapshots = Vec::with_capacity(n_steps + 1);
    let mut all_metrics = Vec::with_capacity(n_steps + 1);
    let mut u = initial.to_vec();
    times.push(0.0);
    all_metrics.push(metrics(op, 0.0, &u, &left_w, &right_w));
    snapshots.push(u.clone());

    // factor once; the step operator is time-independent
    let factor = factor_step(
        op,
        dt,
        if scheme == Scheme::BackwardEuler {
            1.0
        } else {
            0.5
        },
    )?;
    let (a_diag, a_off) = op.stiffness();
    let w = op.mass_weights();
    let n = op.n_dofs();
    for k in 1..=n_steps {
        let mut rhs = vec![0.0; n];
        match scheme {
            Scheme::BackwardEuler => {
                for i in 0..n {
                    rhs[i] = w[i] * u[i];
                }
            }
            Scheme::CrankNicolson => {
                for i in 0..n {
                    let mut au = a_diag[i] * u[i];
                    if i > 0 {
                        au += a_off[i - 1] * u[i - 1];
                    }
                    if i + 1 < n {
                        au += a_off[i] * u[i + 1];
                    }
                    rhs[i] = w[i] * u[i] - 0.5 * dt * au;
                }
            }
        }
        factor.solve_in_place(&mut rhs);
        u = rhs;
        let t = dt * k as f64;
        times.push(t);
        all_metrics.push(metrics(op, t, &u, &left_w, &right_w));
        snapshots.push(u.clone());
    }
    Ok(SemigroupTrace {
        times,
        snapshots,
        metrics: all_metrics,
        scheme,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConservativenessReport {
    /// max over t of |m(t) - m(0)| / m(0) with m the signed mass.
    pub max_mass_drift: f64,
    /// Largest far-boundary flux observed, relative to the initial mass.
    pub far_flux_relative: f64,
}

/// Relative mass drift along a trace. Errors with a truncation diagnostic when
/// the artificial far boundary carried non-negligible flux, since the drift
/// verdict would conflate physical absorption with truncation error.
pub fn conservativeness(
    op: &DiscreteOperator,
    trace: &SemigroupTrace,
    far_flux_tol: f64,
) -> Result<ConservativenessReport> {
    let w = op.mass_weights();
    let mass_of = |u: &[f64]| -> f64 { u.iter().zip(w).map(|(a, b)| a * b).sum() };
    let m0 = mass_of(&trace.snapshots[0]);
    if m0 == 0.0 {
        return Err(Error::Invalid("initial mass vanishes".into()));
    }
    let horizon = *trace.times.last().unwrap();
    let mut max_flux = 0.0f64;
    for u in &trace.snapshots {
        for &(dof, g) in op.truncation_faces() {
            max_flux = max_flux.max((g * u[dof]).abs());
        }
    }
    let far_flux_relative = max_flux * horizon / m0.abs();
    if far_flux_relative > far_flux_tol {
        return Err(Error::TruncationTooSmall {
            flux: far_flux_relative,
            tol: far_flux_tol,
        });
    }
    let mut drift = 0.0f64;
    for u in &trace.snapshots {
        drift = drift.max((mass_of(u) - m0).abs() / m0.abs());
    }
    Ok(ConservativenessReport {
        max_mass_drift: drift,
        far_flux_relative,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ViolationReport {
    pub positivity_failures: usize,
    pub sup_expansion: f64,
    pub lambda_min: f64,
}

/// Evolve random non-negative data and the constant function, counting
/// positivity failures and the worst sup-norm expansion. A negative penalty
/// boundary condition must show expansion above 1 (simple negative eigenvalue);
/// a non-negative penalty must stay clean.
pub fn submarkov_violation(
    op: &DiscreteOperator,
    trials: usize,
    horizon: f64,
    n_steps: usize,
    seed: u64,
) -> Result<ViolationReport> {
    let n = op.n_dofs();
    let lambda_min = op.lowest_eigenpairs(1)?[0].0;
    // keep backward Euler on the stable side of the resolvent pole
    let mut steps = n_steps.max(1);
    if lambda_min < 0.0 {
        let dt_max = 0.5 / lambda_min.abs();
        let needed = (horizon / dt_max).ceil() as usize;
        steps = steps.max(needed);
    }
    let mut rng = Rng::new(seed);
    let mut data: Vec<Vec<f64>> = Vec::with_capacity(trials + 1);
    data.push(vec![1.0; n]);
    for _ in 0..trials {
        data.push((0..n).map(|_| rng.uniform()).collect());
    }
    let mut positivity_failures = 0usize;
    let mut sup_expansion = 0.0f64;
    for datum in &data {
        let trace = evolve(op, datum, horizon, steps, Scheme::BackwardEuler)?;
        let sup0 = trace.metrics[0].sup_norm.max(1e-300);
        for m in &trace.metrics[1..] {
            if m.min_value < -1e-12 * sup0 {
                positivity_failures += 1;
            }
            sup_expansion = sup_expansion.max(m.sup_norm / sup0);
        }
    }
    Ok(ViolationReport {
        positivity_failures,
        sup_expansion,
        lambda_min,
    })
}
