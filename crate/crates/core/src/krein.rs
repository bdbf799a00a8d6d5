//! Krein rank-one resolvent verification.
//!
//! The resolvent of any admissible extension differs from the Friedrichs
//! resolvent by kappa(gamma) times the projection onto the deficiency
//! direction. The difference is probed on a small random block rather than
//! formed densely: two singular triplets suffice for the rank test.

use crate::classify::{Classifier, TrichotomyCase};
use crate::coeff::Coefficient;
use crate::error::{Error, Result};
use crate::grid::{assemble, BoundaryCondition, DiscreteOperator, Mesh, MeshGeometry};
use crate::linalg::{self, TridiagFactor};
use crate::rng::Rng;
use crate::shoot;
use serde::Serialize;

/// Factorized application of (gamma + H)^{-1}.
pub struct Resolvent<'a> {
    op: &'a DiscreteOperator,
    factor: TridiagFactor,
    pub gamma: f64,
}

impl<'a> Resolvent<'a> {
    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        let w = self.op.mass_weights();
        let rhs: Vec<f64> = b.iter().zip(w).map(|(bi, wi)| bi * wi).collect();
        self.factor.solve(&rhs)
    }
}

/// Factor (gamma W + A); gamma must sit above the spectral threshold.
pub fn resolvent(op: &DiscreteOperator, gamma: f64) -> Result<Resolvent<'_>> {
    if !(gamma > 0.0) {
        return Err(Error::Invalid("gamma must be positive".into()));
    }
    // a negative penalty can push an eigenvalue below -gamma
    if op.bc.penalty_sign() == Some(-1.0) {
        let lambda_min = op.lowest_eigenpairs(1)?[0].0;
        if gamma <= -lambda_min {
            return Err(Error::ResolventPole {
                gamma,
                threshold: -lambda_min,
            });
        }
    }
    let (a_diag, a_off) = op.stiffness();
    let w = op.mass_weights();
    let diag: Vec<f64> = (0..op.n_dofs()).map(|i| gamma * w[i] + a_diag[i]).collect();
    let factor = linalg::ldlt_factor(&diag, a_off).map_err(|_| Error::ResolventPole {
        gamma,
        threshold: f64::NAN,
    })?;
    Ok(Resolvent { op, factor, gamma })
}

#[derive(Debug, Clone, Serialize)]
pub struct KreinDiagnostics {
    pub gamma: f64,
    /// Top singular value of the resolvent difference, signed by its Rayleigh quotient.
    pub kappa: f64,
    /// Second-to-first singular value ratio; near zero certifies rank one.
    pub rank_ratio: f64,
    /// Mass-weighted cosine between the top singular vector and eta_gamma.
    pub range_alignment: f64,
}

/// Mass-orthonormalize a block of vectors in place (modified Gram-Schmidt),
/// dropping residuals below `rel_floor` times the largest input norm.
fn orthonormalize(op: &DiscreteOperator, block: &mut Vec<Vec<f64>>, rel_floor: f64) {
    let max_norm = block
        .iter()
        .map(|v| op.mass_inner(v, v).sqrt())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(block.len());
    for mut v in block.drain(..) {
        for u in &kept {
            let proj = op.mass_inner(&v, u);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = op.mass_inner(&v, &v).sqrt();
        if norm > rel_floor * max_norm {
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            kept.push(v);
        }
    }
    *block = kept;
}

/// Symmetric eigen-decomposition of a small dense matrix by Jacobi rotations.
fn jacobi_eigen(mut m: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(m[i][j].abs());
            }
        }
        if off < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (m[q][q] - m[p][p]) / m[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigs: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    (eigs, v)
}

/// Verify the rank-one resolvent identity for the extension (alpha, beta)
/// against the Friedrichs baseline on the given mesh.
pub fn krein_check(
    c: &Coefficient,
    alpha: f64,
    beta: f64,
    gamma: f64,
    mesh: &Mesh,
    seed: u64,
) -> Result<KreinDiagnostics> {
    let classifier = Classifier::default();
    let report = classifier.classify(c)?;
    if report.case == TrichotomyCase::I {
        return Err(Error::NothingToCompare);
    }
    let side = match mesh.geometry {
        MeshGeometry::HalfLine { side, .. } => side,
        _ => {
            return Err(Error::Invalid(
                "the rank-one check is stated against the half-line Friedrichs baseline".into(),
            ))
        }
    };

    let friedrichs = assemble(c, mesh, BoundaryCondition::FriedrichsAuto)?;
    let other = assemble(c, mesh, BoundaryCondition::Robin { alpha, beta })?;
    let r_f = resolvent(&friedrichs, gamma)?;
    let r_b = resolvent(&other, gamma)?;

    // both operators share positions; the Friedrichs (Dirichlet) one may drop
    // the origin DOF, so map through node positions
    let nf = friedrichs.n_dofs();
    let nb = other.n_dofs();
    let offset = nb - nf; // 0 or 1 leading DOFs eliminated by Dirichlet
    let embed = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; nb];
        out[offset..].copy_from_slice(v);
        out
    };
    let restrict = |v: &[f64]| -> Vec<f64> { v[offset..].to_vec() };

    let apply_difference = |b: &[f64]| -> Vec<f64> {
        let ub = r_b.apply(b);
        let uf = embed(&r_f.apply(&restrict(b)));
        ub.iter().zip(&uf).map(|(p, q)| p - q).collect()
    };

    // randomized probing: mass-orthonormal block, range capture, small eigenproblem
    let k = 32.min(nb);
    let mut rng = Rng::new(seed);
    let mut probes: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..nb).map(|_| rng.normal()).collect())
        .collect();
    orthonormalize(&other, &mut probes, 1e-10);
    let mut images: Vec<Vec<f64>> = probes.iter().map(|p| apply_difference(p)).collect();
    orthonormalize(&other, &mut images, 1e-13);
    if images.is_empty() {
        return Ok(KreinDiagnostics {
            gamma,
            kappa: 0.0,
            rank_ratio: 0.0,
            range_alignment: 1.0,
        });
    }
    // small symmetric matrix B = Q^T W D Q
    let dq: Vec<Vec<f64>> = images.iter().map(|q| apply_difference(q)).collect();
    let m = images.len();
    let mut small = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            small[i][j] = other.mass_inner(&images[i], &dq[j]);
        }
    }
    // symmetrize round-off
    for i in 0..m {
        for j in i + 1..m {
            let s = 0.5 * (small[i][j] + small[j][i]);
            small[i][j] = s;
            small[j][i] = s;
        }
    }
    let (eigs, vecs) = jacobi_eigen(small);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|p, q| eigs[*q].abs().partial_cmp(&eigs[*p].abs()).unwrap());
    let top = order[0];
    let second = order.get(1).copied();
    let kappa = eigs[top];
    let rank_ratio = second.map_or(0.0, |s| (eigs[s].abs() / kappa.abs().max(1e-300)).min(1.0));

    // top singular vector in DOF space
    let n = nb;
    let mut u_top = vec![0.0; n];
    for (j, q) in images.iter().enumerate() {
        let w = vecs[j][top];
        for i in 0..n {
            u_top[i] += w * q[i];
        }
    }
    let norm = other.mass_inner(&u_top, &u_top).sqrt();
    for v in u_top.iter_mut() {
        *v /= norm;
    }

    // deficiency direction from shooting, interpolated onto the mesh
    let inner = other
        .positions()
        .iter()
        .cloned()
        .filter(|x| *x > 0.0)
        .fold(f64::INFINITY, f64::min);
    let eta = shoot::eta(c, side, gamma, (inner * 0.5).max(1e-10))?;
    let mut eta_vec: Vec<f64> = other
        .positions()
        .iter()
        .map(|x| eta.interpolate(x.abs()))
        .collect();
    let norm = other.mass_inner(&eta_vec, &eta_vec).sqrt();
    if norm > 0.0 {
        for v in eta_vec.iter_mut() {
            *v /= norm;
        }
    }
    let range_alignment = other.mass_inner(&u_top, &eta_vec).abs().min(1.0);

    Ok(KreinDiagnostics {
        gamma,
        kappa,
        rank_ratio,
        range_alignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{DomainKind, Side};
    use crate::grid::build_mesh;

    fn setup(delta: f64, n: usize) -> (Coefficient, Mesh) {
        let c = Coefficient::symmetric_power_law(delta, DomainKind::HalfLine(Side::Right)).unwrap();
        let mesh = build_mesh(
            MeshGeometry::HalfLine {
                length: 30.0,
                side: Side::Right,
            },
            n,
            0.9,
        )
        .unwrap();
        (c, mesh)
    }

    #[test]
    fn resolvent_spectral_mapping() {
        // Dirichlet Laplacian eigenvector v maps to v / (gamma + lambda)
        let c = Coefficient::power_law(
            1.0,
            0.0,
            1.0,
            0.0,
            DomainKind::Interval(0.0, std::f64::consts::PI),
        )
        .unwrap();
        let mesh = build_mesh(
            MeshGeometry::Interval {
                a: 0.0,
                b: std::f64::consts::PI,
            },
            96,
            0.95,
        )
        .unwrap();
        let op = assemble(&c, &mesh, BoundaryCondition::Dirichlet).unwrap();
        let pairs = op.lowest_eigenpairs(1).unwrap();
        let (lam, v) = (pairs[0].0, &pairs[0].1);
        let r = resolvent(&op, 2.0).unwrap();
        let rv = r.apply(v);
        for (a, b) in rv.iter().zip(v) {
            assert!((a - b / (2.0 + lam)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_operator_resolvent_scales_by_inverse_gamma() {
        // plateau block: H = 0, so (gamma + H)^{-1} multiplies by 1/gamma
        use crate::coeff::{Piece, PieceModel};
        let c = Coefficient::piecewise(
            vec![Piece {
                lo: 0.0,
                hi: 1.0,
                model: PieceModel::Constant(0.0),
            }],
            DomainKind::Interval(0.0, 1.0),
        )
        .unwrap();
        let mesh = build_mesh(MeshGeometry::Interval { a: 0.0, b: 1.0 }, 16, 0.8).unwrap();
        let op = assemble(&c, &mesh, BoundaryCondition::NeumannFlux).unwrap();
        let r = resolvent(&op, 2.0).unwrap();
        let b: Vec<f64> = (0..op.n_dofs()).map(|i| (i as f64).cos()).collect();
        for (out, input) in r.apply(&b).iter().zip(&b) {
            assert!((out - input / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn resolvent_pole_detected() {
        let (c, mesh) = setup(0.5, 300);
        let op = assemble(
            &c,
            &mesh,
            BoundaryCondition::Robin {
                alpha: -1.0,
                beta: 1.0,
            },
        )
        .unwrap();
        let lam = op.lowest_eigenpairs(1).unwrap()[0].0;
        assert!(lam < -0.05);
        let below = -lam * 0.5;
        assert!(matches!(
            resolvent(&op, below),
            Err(Error::ResolventPole { .. })
        ));
        assert!(resolvent(&op, -lam * 2.0).is_ok());
    }

    #[test]
    fn identical_operators_give_zero_difference() {
        let (c, mesh) = setup(0.5, 200);
        // alpha = 0 Robin equals the Neumann operator: compare to itself via
        // the public check with the same bc twice is not expressible, so use
        // kappa of Neumann vs Neumann through the raw machinery
        let op = assemble(
            &c,
            &mesh,
            BoundaryCondition::Robin {
                alpha: 0.0,
                beta: 1.0,
            },
        )
        .unwrap();
        let r1 = resolvent(&op, 1.0).unwrap();
        let r2 = resolvent(&op, 1.0).unwrap();
        let b: Vec<f64> = (0..op.n_dofs()).map(|i| ((i * 37) % 11) as f64).collect();
        let d: f64 = r1
            .apply(&b)
            .iter()
            .zip(r2.apply(&b))
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-12);
    }

    #[test]
    fn rank_one_difference_for_case_iii() {
        let (c, mesh) = setup(0.5, 400);
        let d = krein_check(&c, 0.0, 1.0, 1.0, &mesh, 7).unwrap();
        assert!(d.kappa > 0.0, "kappa {}", d.kappa);
        assert!(d.rank_ratio < 1e-6, "rank ratio {}", d.rank_ratio);
        assert!(d.range_alignment > 0.999, "alignment {}", d.range_alignment);
    }

    #[test]
    fn kappa_nonnegative_across_robin_family() {
        let (c, mesh) = setup(0.25, 300);
        for (a, b) in [(0.5, 1.0), (2.0, 1.0), (0.0, 1.0)] {
            let d = krein_check(&c, a, b, 2.0, &mesh, 11).unwrap();
            assert!(d.kappa >= -1e-10, "alpha {a}: kappa {}", d.kappa);
            assert!(d.rank_ratio < 1e-6);
        }
    }

    #[test]
    fn case_i_refuses_comparison() {
        let (c, mesh) = setup(2.0, 100);
        assert!(matches!(
            krein_check(&c, 1.0, 1.0, 1.0, &mesh, 3),
            Err(Error::NothingToCompare)
        ));
    }

    #[test]
    fn positivity_transfer_for_nonnegative_penalties() {
        let (c, mesh) = setup(0.5, 200);
        let fr = assemble(&c, &mesh, BoundaryCondition::FriedrichsAuto).unwrap();
        let rb = assemble(
            &c,
            &mesh,
            BoundaryCondition::Robin {
                alpha: 1.0,
                beta: 2.0,
            },
        )
        .unwrap();
        let r1 = resolvent(&fr, 1.0).unwrap();
        let r2 = resolvent(&rb, 1.0).unwrap();
        let mut rng = Rng::new(9);
        for _ in 0..50 {
            let b1: Vec<f64> = (0..fr.n_dofs()).map(|_| rng.uniform()).collect();
            assert!(r1.apply(&b1).iter().all(|v| *v >= -1e-12));
            let b2: Vec<f64> = (0..rb.n_dofs()).map(|_| rng.uniform()).collect();
            assert!(r2.apply(&b2).iter().all(|v| *v >= -1e-12));
        }
    }
}
