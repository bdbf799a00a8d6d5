//! Harmonic integrals nu/mu, their integrability, and the trichotomy verdict.
//!
//! nu(x) integrates 1/c from x to the window edge; mu(x) integrates s/c(s)
//! from 1 outward. Membership of nu in L2/Linf near the degeneracy and of mu
//! in Linf at infinity is decided by exponent, never by raw divergence of a
//! numeric integral: a quadrature can suggest divergence but not prove it.

use crate::coeff::{Coefficient, Side};
use crate::error::{Error, Result};
use crate::quad;
use serde::Serialize;

/// Boundaries of the exponent rules: nu in Linf iff delta < 1, nu in L2 iff
/// delta < 3/2, mu in Linf iff delta > 2 at infinity.
pub const LINF_BOUNDARY: f64 = 1.0;
pub const L2_BOUNDARY: f64 = 1.5;
pub const MU_BOUNDARY: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct ClassifyConfig {
    /// Upper integration limit for nu; the paper's choice of 1 is arbitrary.
    pub nu_upper: f64,
    /// Lower edge of the nu sample grid.
    pub x_min: f64,
    pub points_per_decade: usize,
    /// Upper edge of the mu sample grid.
    pub mu_x_max: f64,
    /// Verdicts within this distance of an exponent boundary are flagged estimated.
    pub boundary_margin: f64,
    pub quad_rel_tol: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            nu_upper: 1.0,
            x_min: 1e-12,
            points_per_decade: 25,
            mu_x_max: 1e6,
            boundary_margin: 0.05,
            quad_rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrichotomyCase {
    I,
    II,
    III,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Membership {
    pub holds: bool,
    /// True when the deciding exponent was estimated near a rule boundary.
    pub estimated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicProfile {
    pub side: Side,
    /// nu sampled on a log grid, ascending x; values are non-increasing in x.
    pub nu_grid: Vec<(f64, f64)>,
    /// mu sampled on a log grid over [1, mu_x_max].
    pub mu_grid: Vec<(f64, f64)>,
    /// ||nu||^2 on (0, nu_upper): quadrature over (x_min, nu_upper) plus an
    /// exponent-based estimate of the remaining tail, reported separately.
    pub nu_l2_quadrature: f64,
    pub nu_l2_tail: f64,
    /// None when nu is unbounded at the degeneracy.
    pub nu_sup: Option<f64>,
    /// None when mu is unbounded at infinity.
    pub mu_sup: Option<f64>,
    pub exponent: f64,
    pub exponent_exact: bool,
    pub infinity_exponent: f64,
    pub nu_in_l2: Membership,
    pub nu_in_linf: Membership,
    pub mu_in_linf: Membership,
}

impl HarmonicProfile {
    pub fn nu_l2_norm_sq(&self) -> Option<f64> {
        if self.nu_in_l2.holds {
            Some(self.nu_l2_quadrature + self.nu_l2_tail)
        } else {
            None
        }
    }

    /// Power p such that nu(x) ~ x^p as x -> 0 (p = 1 - delta for delta > 1,
    /// 0 for bounded nu; the delta = 1 logarithm reports 0^- as 0).
    pub fn nu_tail_power(&self) -> f64 {
        if self.exponent > 1.0 {
            1.0 - self.exponent
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtensionFamily {
    pub name: String,
    pub boundary_condition: String,
    pub parameterized: bool,
    pub submarkovian_when: String,
    /// False for the case II alpha-family, which admits no classical boundary
    /// condition or form representation and is not realized by the matrix layer.
    pub realizable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub case: TrichotomyCase,
    pub essentially_self_adjoint: bool,
    pub deficiency_indices: (u32, u32),
    pub unique_submarkovian: bool,
    pub extension_menu: Vec<ExtensionFamily>,
    /// mu+ and mu- both unbounded at infinity (Feller-inaccessible infinity).
    pub growth_inaccessible_at_infinity: bool,
    pub estimated: bool,
    pub half_line: bool,
    pub profiles: Vec<HarmonicProfile>,
}

impl ClassificationReport {
    pub fn profile(&self, side: Side) -> Option<&HarmonicProfile> {
        self.profiles.iter().find(|p| p.side == side)
    }
}

#[derive(Default)]
pub struct Classifier {
    pub config: ClassifyConfig,
}

impl Classifier {
    pub fn new(config: ClassifyConfig) -> Self {
        Classifier { config }
    }

    fn guard_no_interior_zero(
        &self,
        c: &Coefficient,
        side: Side,
        from: f64,
        to: f64,
    ) -> Result<()> {
        // exact zeros only: a tabulated value that is merely tiny still
        // integrates, it is the true interior zero that breaks 1/c
        let zs = c.zero_set(0.0);
        let (a, b) = match side {
            Side::Right => (from, to),
            Side::Left => (-to, -from),
        };
        if zs.intersects_open(a, b) {
            return Err(Error::CoefficientVanishes { a, b });
        }
        Ok(())
    }

    /// nu(x) = integral of 1/c over (x, nu_upper), reflected for the left side.
    pub fn nu(&self, c: &Coefficient, side: Side, x: f64) -> Result<f64> {
        let upper = self.config.nu_upper;
        if !(x > 0.0 && x <= upper) {
            return Err(Error::Domain {
                x,
                detail: format!("nu needs x in (0, {upper}]"),
            });
        }
        if x == upper {
            return Ok(0.0);
        }
        if let Some((a, d)) = c.global_power(side) {
            return Ok(nu_power_law(a, d, x, upper));
        }
        self.guard_no_interior_zero(c, side, x, upper)?;
        let sgn = side.sign();
        let r = quad::integrate(
            |s| 1.0 / c.eval_unchecked(sgn * s),
            x,
            upper,
            self.config.quad_rel_tol,
            0.0,
        )?;
        Ok(r.value)
    }

    /// mu(x) = integral of s/c(s) over (1, x), reflected for the left side.
    pub fn mu(&self, c: &Coefficient, side: Side, x: f64) -> Result<f64> {
        if x < 1.0 {
            return Err(Error::Domain {
                x,
                detail: "mu needs x >= 1".into(),
            });
        }
        if x == 1.0 {
            return Ok(0.0);
        }
        if let Some((a, d)) = c.global_power(side) {
            return Ok(mu_power_law(a, d, x));
        }
        self.guard_no_interior_zero(c, side, 1.0, x)?;
        let sgn = side.sign();
        let r = quad::integrate(
            |s| s / c.eval_unchecked(sgn * s),
            1.0,
            x,
            self.config.quad_rel_tol,
            0.0,
        )?;
        Ok(r.value)
    }

    /// Estimate the local power exponent of c at the degeneracy from the median
    /// log-log slope over the three decades nearest the origin where c > 0.
    /// Tabulated models are sampled at their own nodes; anything below the
    /// table's resolution would only reflect the interpolant.
    fn estimate_origin_exponent(&self, c: &Coefficient, side: Side) -> Result<(f64, f64)> {
        let sgn = side.sign();
        let abscissae: Vec<f64> = match c.sample_hints(side) {
            Some(hints) => hints
                .into_iter()
                .filter(|x| *x > 0.0 && *x <= self.config.nu_upper * (1.0 + 1e-12))
                .collect(),
            None => {
                let per_decade = 10usize;
                let mut xs = Vec::new();
                let mut x = self.config.x_min;
                while x <= self.config.nu_upper * (1.0 + 1e-12) {
                    xs.push(x);
                    x *= 10f64.powf(1.0 / per_decade as f64);
                }
                xs
            }
        };
        let samples: Vec<(f64, f64)> = abscissae
            .into_iter()
            .filter_map(|x| {
                let v = c.eval_unchecked(sgn * x);
                if v > 0.0 && v.is_finite() {
                    Some((x.ln(), v.ln()))
                } else {
                    None
                }
            })
            .collect();
        if samples.len() < 4 {
            return Err(Error::Indeterminate(format!(
                "too few positive samples of c near the {} degeneracy",
                side.name()
            )));
        }
        // keep the three decades closest to the degeneracy
        let lo = samples[0].0;
        let window = 3.0 * std::f64::consts::LN_10;
        let kept: Vec<(f64, f64)> = samples
            .iter()
            .copied()
            .filter(|(lx, _)| *lx <= lo + window)
            .collect();
        let mut slopes: Vec<f64> = kept
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .filter(|s| s.is_finite())
            .collect();
        if slopes.len() < 3 {
            return Err(Error::Indeterminate(
                "log-log slope of c is non-convergent".into(),
            ));
        }
        slopes.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let median = slopes[slopes.len() / 2];
        let mad = {
            let mut dev: Vec<f64> = slopes.iter().map(|s| (s - median).abs()).collect();
            dev.sort_by(|p, q| p.partial_cmp(q).unwrap());
            dev[dev.len() / 2]
        };
        if mad > 0.25 || !median.is_finite() {
            return Err(Error::Indeterminate(format!(
                "log-log slope of c scatters too widely near the {} degeneracy (median {median:.3}, mad {mad:.3})",
                side.name()
            )));
        }
        // local amplitude from the innermost kept sample
        let (lx0, lc0) = kept[0];
        let amp = (lc0 - median * lx0).exp();
        Ok((amp, median))
    }

    fn estimate_infinity_exponent(&self, c: &Coefficient, side: Side) -> Result<f64> {
        let sgn = side.sign();
        let mut samples: Vec<(f64, f64)> = Vec::new();
        let mut x = self.config.mu_x_max / 1e3;
        while x <= self.config.mu_x_max * (1.0 + 1e-12) {
            let v = c.eval_unchecked(sgn * x);
            if v > 0.0 && v.is_finite() {
                samples.push((x.ln(), v.ln()));
            }
            x *= 10f64.powf(0.1);
        }
        if samples.len() < 4 {
            return Err(Error::Indeterminate(
                "too few samples of c in the far field".into(),
            ));
        }
        let mut slopes: Vec<f64> = samples
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        slopes.sort_by(|p, q| p.partial_cmp(q).unwrap());
        Ok(slopes[slopes.len() / 2])
    }

    /// Full integrability profile of one side.
    pub fn membership(&self, c: &Coefficient, side: Side) -> Result<HarmonicProfile> {
        let cfg = &self.config;
        self.guard_no_interior_zero(c, side, cfg.x_min, cfg.nu_upper)?;

        let exact = c.origin_power(side);
        let (amp, delta, exponent_exact) = match exact {
            Some((a, d)) => (a, d, true),
            None => {
                let (a, d) = self.estimate_origin_exponent(c, side)?;
                (a, d, false)
            }
        };
        let margin = cfg.boundary_margin;
        let near = |boundary: f64| !exponent_exact && (delta - boundary).abs() < margin;

        let nu_in_linf = Membership {
            holds: delta < LINF_BOUNDARY,
            estimated: near(LINF_BOUNDARY),
        };
        let nu_in_l2 = Membership {
            holds: delta < L2_BOUNDARY,
            estimated: near(L2_BOUNDARY),
        };

        // a bounded side has no infinity: mu is trivially bounded there
        let side_extent = match side {
            Side::Right => c.domain().bounds().1,
            Side::Left => -c.domain().bounds().0,
        };
        let (inf_delta, mu_in_linf) = if side_extent.is_finite() {
            (
                delta,
                Membership {
                    holds: true,
                    estimated: false,
                },
            )
        } else {
            let d = match c.infinity_power(side) {
                Some((_, d)) => d,
                None => self.estimate_infinity_exponent(c, side).unwrap_or(delta),
            };
            (
                d,
                Membership {
                    holds: d > MU_BOUNDARY,
                    estimated: !exponent_exact && (d - MU_BOUNDARY).abs() < margin,
                },
            )
        };

        // monotone accumulator grids
        let nu_grid = self.accumulate_nu_grid(c, side)?;
        let mu_grid = self.accumulate_mu_grid(c, side)?;
        let nu_at_xmin = nu_grid[0].1;

        // ||nu||^2 = quadrature over (x_min, nu_upper) + local-power tail below x_min
        let global = c.global_power(side);
        let nu_l2_quadrature = if nu_in_l2.holds {
            let eval = NuEvaluator {
                classifier: self,
                c,
                side,
                grid: &nu_grid,
            };
            quad::integrate(
                |x| {
                    let v = match global {
                        Some((a, d)) => nu_power_law(a, d, x, cfg.nu_upper),
                        None => eval.value(x),
                    };
                    v * v
                },
                cfg.x_min,
                cfg.nu_upper,
                1e-9,
                0.0,
            )?
            .value
        } else {
            f64::INFINITY
        };
        let nu_l2_tail = if nu_in_l2.holds {
            nu_l2_tail_below(nu_at_xmin, amp, delta, cfg.x_min)
        } else {
            f64::INFINITY
        };

        // nu(0+) = nu(x_min) + local-power remainder
        let nu_sup = if nu_in_linf.holds {
            Some(nu_at_xmin + nu_power_law(amp, delta, 0.0, cfg.x_min))
        } else {
            None
        };
        // mu(inf) = mu(x_max) + asymptotic-power remainder
        let mu_sup = if mu_in_linf.holds {
            let mu_at_xmax = mu_grid.last().unwrap().1;
            let tail = c
                .infinity_power(side)
                .map(|(a, d)| cfg.mu_x_max.powf(2.0 - d) / (a * (d - 2.0)))
                .unwrap_or(0.0);
            Some(mu_at_xmax + tail)
        } else {
            None
        };

        Ok(HarmonicProfile {
            side,
            nu_grid,
            mu_grid,
            nu_l2_quadrature,
            nu_l2_tail,
            nu_sup,
            mu_sup,
            exponent: delta,
            exponent_exact,
            infinity_exponent: inf_delta,
            nu_in_l2,
            nu_in_linf,
            mu_in_linf,
        })
    }

    fn accumulate_nu_grid(&self, c: &Coefficient, side: Side) -> Result<Vec<(f64, f64)>> {
        let cfg = &self.config;
        let decades = (cfg.nu_upper / cfg.x_min).log10();
        let n = (decades * cfg.points_per_decade as f64).round() as usize;
        let sgn = side.sign();
        let xs: Vec<f64> = (0..=n)
            .map(|j| cfg.x_min * (cfg.nu_upper / cfg.x_min).powf(j as f64 / n as f64))
            .collect();
        let mut grid = vec![(0.0, 0.0); n + 1];
        let mut acc = 0.0;
        grid[n] = (xs[n], 0.0);
        for j in (0..n).rev() {
            let panel = quad::integrate(
                |s| 1.0 / c.eval_unchecked(sgn * s),
                xs[j],
                xs[j + 1],
                cfg.quad_rel_tol,
                0.0,
            )?;
            acc += panel.value.max(0.0);
            grid[j] = (xs[j], acc);
        }
        Ok(grid)
    }

    fn accumulate_mu_grid(&self, c: &Coefficient, side: Side) -> Result<Vec<(f64, f64)>> {
        let cfg = &self.config;
        let side_extent = match side {
            Side::Right => c.domain().bounds().1,
            Side::Left => -c.domain().bounds().0,
        };
        let x_max = cfg.mu_x_max.min(side_extent);
        if x_max <= 1.0 {
            return Ok(vec![(1.0, 0.0)]);
        }
        let decades = x_max.log10();
        let n = ((decades * cfg.points_per_decade as f64).round() as usize).max(2);
        let sgn = side.sign();
        let xs: Vec<f64> = (0..=n).map(|j| x_max.powf(j as f64 / n as f64)).collect();
        let mut grid = vec![(0.0, 0.0); n + 1];
        let mut acc = 0.0;
        grid[0] = (xs[0], 0.0);
        for j in 1..=n {
            let panel = quad::integrate(
                |s| s / c.eval_unchecked(sgn * s),
                xs[j - 1],
                xs[j],
                cfg.quad_rel_tol,
                0.0,
            )?;
            acc += panel.value.max(0.0);
            grid[j] = (xs[j], acc);
        }
        Ok(grid)
    }

    /// Combine the per-side profiles into the trichotomy verdict.
    pub fn classify(&self, c: &Coefficient) -> Result<ClassificationReport> {
        let domain = c.domain();
        let sides: Vec<Side> = [Side::Left, Side::Right]
            .into_iter()
            .filter(|s| domain.has_side(*s))
            .collect();
        if sides.is_empty() {
            return Err(Error::Invalid(
                "domain has no side adjacent to the origin".into(),
            ));
        }
        let profiles: Vec<HarmonicProfile> = sides
            .iter()
            .map(|s| self.membership(c, *s))
            .collect::<Result<_>>()?;
        let half_line = profiles.len() == 1;

        // nu+ v nu- lies in L2 (resp. Linf) iff both one-sided nu do
        let in_l2 = profiles.iter().all(|p| p.nu_in_l2.holds);
        let in_linf = profiles.iter().all(|p| p.nu_in_linf.holds);
        let case = if !in_l2 {
            TrichotomyCase::I
        } else if !in_linf {
            TrichotomyCase::II
        } else {
            TrichotomyCase::III
        };
        let estimated = profiles
            .iter()
            .any(|p| p.nu_in_l2.estimated || p.nu_in_linf.estimated || p.mu_in_linf.estimated);

        let deficiency_indices = match case {
            TrichotomyCase::I => (0, 0),
            _ => (1, 1),
        };
        let growth_inaccessible_at_infinity = profiles.iter().all(|p| !p.mu_in_linf.holds);

        let extension_menu = menu(case, half_line);
        Ok(ClassificationReport {
            case,
            essentially_self_adjoint: case == TrichotomyCase::I,
            deficiency_indices,
            unique_submarkovian: case != TrichotomyCase::III,
            extension_menu,
            growth_inaccessible_at_infinity,
            estimated,
            half_line,
            profiles,
        })
    }

    /// Energy of the harmonic cutoff chi_n: 1 on [0, 1/n], nu(x)/nu(1/n) on
    /// (1/n, U), 0 beyond. Equals 1/nu(1/n) up to quadrature error.
    pub fn cutoff_energy(&self, c: &Coefficient, side: Side, n: f64) -> Result<f64> {
        if n < 2.0 {
            return Err(Error::Invalid("cutoff index n must be at least 2".into()));
        }
        let profile_linf = match c.origin_power(side) {
            Some((_, d)) => d < LINF_BOUNDARY,
            None => self.estimate_origin_exponent(c, side)?.1 < LINF_BOUNDARY,
        };
        if profile_linf {
            return Err(Error::BoundedNu { side: side.name() });
        }
        let x_n = 1.0 / n;
        let nu_n = self.nu(c, side, x_n)?;
        let sgn = side.sign();
        let energy = quad::integrate(
            |s| {
                let cv = c.eval_unchecked(sgn * s);
                let chi_prime = -1.0 / (cv * nu_n);
                cv * chi_prime * chi_prime
            },
            x_n,
            self.config.nu_upper,
            self.config.quad_rel_tol,
            0.0,
        )?;
        Ok(energy.value)
    }

    /// Twice-differentiable cutoff of the L1 construction and the L1 norm of
    /// its flux divergence: the leading term (which carries the 1/nu(1/n)
    /// identity) and the honest norm of the corrected ramp, separately.
    pub fn smooth_cutoff_l1(&self, c: &Coefficient, side: Side, n: f64) -> Result<SmoothCutoff> {
        if n < 2.0 {
            return Err(Error::Invalid("cutoff index n must be at least 2".into()));
        }
        let linf = match c.origin_power(side) {
            Some((_, d)) => d < LINF_BOUNDARY,
            None => self.estimate_origin_exponent(c, side)?.1 < LINF_BOUNDARY,
        };
        if linf {
            return Err(Error::BoundedNu { side: side.name() });
        }
        let cfg = &self.config;
        let upper = cfg.nu_upper;
        let x_n = 1.0 / n;
        let nu_n = self.nu(c, side, x_n)?;
        let sgn = side.sign();

        // leading flux-divergence term: quadrature of c^{-1} nu_n^{-2} over [1/n, U]
        let leading = quad::integrate(
            |s| 1.0 / (c.eval_unchecked(sgn * s) * nu_n * nu_n),
            x_n,
            upper,
            cfg.quad_rel_tol,
            0.0,
        )?
        .value;

        // ramp xi = (1 - chi_n)^2, flux-corrected and rescaled to reach 1
        let xi_prime_u = 2.0 / (c.eval_unchecked(sgn * upper) * nu_n);
        let span = upper - x_n;
        let zeta_u = 1.0 - xi_prime_u * span / 2.0;
        if zeta_u <= 0.0 {
            return Err(Error::Invalid(format!(
                "cutoff index n = {n} too small for the flux correction (zeta(U) = {zeta_u})"
            )));
        }
        let nu_at = |x: f64| -> Result<f64> { self.nu(c, side, x) };
        let phi_at = |x: f64| -> Result<f64> {
            if x <= x_n {
                return Ok(0.0);
            }
            if x >= upper {
                return Ok(1.0);
            }
            let ramp = 1.0 - nu_at(x)? / nu_n;
            let corr = xi_prime_u * (x - x_n) * (x - x_n) / (2.0 * span);
            Ok((ramp * ramp - corr) / zeta_u)
        };

        let n_samples = 200;
        let mut phi = Vec::with_capacity(n_samples + 2);
        phi.push((0.0, 0.0));
        for j in 0..=n_samples {
            let x = x_n * (upper / x_n).powf(j as f64 / n_samples as f64);
            phi.push((x, phi_at(x)?));
        }

        // honest L1 norm of (c phi')', kinks included
        let corrected = quad::integrate(
            |s| {
                let cv = c.eval_unchecked(sgn * s);
                let cp = c.eval_derivative(sgn * s).unwrap_or(0.0) * sgn;
                let main = 2.0 / (cv * nu_n * nu_n);
                let corr = xi_prime_u * (cp * (s - x_n) + cv) / span;
                ((main - corr) / zeta_u).abs()
            },
            x_n,
            upper,
            1e-7,
            0.0,
        )?
        .value;

        Ok(SmoothCutoff {
            phi,
            flux_divergence_l1: leading,
            corrected_l1: corrected,
            nu_n,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothCutoff {
    /// Sampled ramp: 0 below 1/n, 1 above the window edge.
    pub phi: Vec<(f64, f64)>,
    /// L1 norm of the leading flux-divergence term; tends to 0 like 1/nu(1/n).
    pub flux_divergence_l1: f64,
    /// L1 norm of the divergence of the corrected twice-differentiable ramp.
    pub corrected_l1: f64,
    pub nu_n: f64,
}

struct NuEvaluator<'a> {
    classifier: &'a Classifier,
    c: &'a Coefficient,
    side: Side,
    grid: &'a [(f64, f64)],
}

impl NuEvaluator<'_> {
    /// nu(x) from the accumulated grid plus a short quadrature correction.
    fn value(&self, x: f64) -> f64 {
        let cfg = &self.classifier.config;
        if x >= cfg.nu_upper {
            return 0.0;
        }
        let idx = self.grid.partition_point(|(gx, _)| *gx < x);
        if idx >= self.grid.len() {
            return 0.0;
        }
        let (gx, gv) = self.grid[idx];
        let sgn = self.side.sign();
        let patch = quad::integrate(|s| 1.0 / self.c.eval_unchecked(sgn * s), x, gx, 1e-10, 0.0)
            .map(|r| r.value)
            .unwrap_or(0.0);
        gv + patch
    }
}

/// Closed-form nu for c = a x^delta: integral of s^{-delta}/a over (x, upper).
pub fn nu_power_law(a: f64, delta: f64, x: f64, upper: f64) -> f64 {
    if delta == 1.0 {
        if x == 0.0 {
            f64::INFINITY
        } else {
            (upper / x).ln() / a
        }
    } else {
        let p = 1.0 - delta;
        if x == 0.0 && p < 0.0 {
            f64::INFINITY
        } else {
            let x_term = if x == 0.0 { 0.0 } else { x.powf(p) };
            (upper.powf(p) - x_term) / (a * p)
        }
    }
}

/// Closed-form mu for c = a x^delta: integral of s^{1-delta}/a over (1, x).
pub fn mu_power_law(a: f64, delta: f64, x: f64) -> f64 {
    if delta == 2.0 {
        x.ln() / a
    } else {
        let p = 2.0 - delta;
        (x.powf(p) - 1.0) / (a * p)
    }
}

/// Exact integral of nu^2 over (0, eps) given nu(eps) = n0 and the local power
/// law c = a x^delta valid on (0, eps], so nu(x) = n0 + (eps^p - x^p)/(a p)
/// with p = 1 - delta. Requires delta < 3/2.
fn nu_l2_tail_below(n0: f64, a: f64, delta: f64, eps: f64) -> f64 {
    if delta == 1.0 {
        // nu(x) = n0 + ln(eps/x)/a; moments of ln(1/u) on (0,1) are k!
        eps * (n0 * n0 + 2.0 * n0 / a + 2.0 / (a * a))
    } else {
        let p = 1.0 - delta;
        // nu(x) = K - x^p/(a p) with K = n0 + eps^p/(a p)
        let k = n0 + eps.powf(p) / (a * p);
        let t1 = k * k * eps;
        let t2 = -2.0 * k * eps.powf(p + 1.0) / ((p + 1.0) * a * p);
        let t3 = eps.powf(2.0 * p + 1.0) / ((2.0 * p + 1.0) * a * a * p * p);
        t1 + t2 + t3
    }
}

fn menu(case: TrichotomyCase, half_line: bool) -> Vec<ExtensionFamily> {
    match case {
        TrichotomyCase::I => vec![ExtensionFamily {
            name: "closure".into(),
            boundary_condition: "(c u')(0+-) = 0 holds for the whole adjoint domain".into(),
            parameterized: false,
            submarkovian_when: "always".into(),
            realizable: true,
        }],
        TrichotomyCase::II => vec![
            ExtensionFamily {
                name: "friedrichs".into(),
                boundary_condition: if half_line {
                    "(c u')(0+) = 0".into()
                } else {
                    "(c u')(0+) = 0 = (c u')(0-), half-lines decouple".into()
                },
                parameterized: false,
                submarkovian_when: "always".into(),
                realizable: true,
            },
            ExtensionFamily {
                name: "alpha-family".into(),
                boundary_condition: "no classical boundary condition or form representation".into(),
                parameterized: true,
                submarkovian_when: "never".into(),
                realizable: false,
            },
        ],
        TrichotomyCase::III => vec![if half_line {
            ExtensionFamily {
                name: "robin".into(),
                boundary_condition: "beta (c u')(0+) = alpha u(0+)".into(),
                parameterized: true,
                submarkovian_when: "alpha * beta >= 0".into(),
                realizable: true,
            }
        } else {
            ExtensionFamily {
                name: "line-jump".into(),
                boundary_condition: "beta ((c u')(0+) - (c u')(0-)) = alpha (u(0+) - u(0-))".into(),
                parameterized: true,
                submarkovian_when: "alpha * beta >= 0".into(),
                realizable: true,
            }
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::DomainKind;

    fn plaw(delta: f64) -> Coefficient {
        Coefficient::symmetric_power_law(delta, DomainKind::Line).unwrap()
    }

    fn half(delta: f64) -> Coefficient {
        Coefficient::symmetric_power_law(delta, DomainKind::HalfLine(Side::Right)).unwrap()
    }

    #[test]
    fn nu_closed_form_against_quadrature_oracle() {
        let cl = Classifier::default();
        // delta = 1.25 at x = 1e-4: 4 (x^{-1/4} - 1) = 36
        let v = cl.nu(&plaw(1.25), Side::Right, 1e-4).unwrap();
        assert!((v - 36.0).abs() < 1e-9, "nu = {v}");
        let oracle = quad::integrate(|s| s.powf(-1.25), 1e-4, 1.0, 1e-12, 0.0)
            .unwrap()
            .value;
        assert!((v - oracle).abs() / oracle < 1e-9);

        // delta = 1 at x = 1/e: -ln x = 1
        let v = cl.nu(&plaw(1.0), Side::Right, (-1f64).exp()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);

        // empty range
        assert_eq!(cl.nu(&plaw(0.5), Side::Right, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn nu_interior_zero_rejected() {
        // plateau [-1, 1] makes 1/c non-integrable inside (x, 1): model it
        // with a piecewise coefficient vanishing on [0.2, 0.4]
        use crate::coeff::{Piece, PieceModel};
        let c = Coefficient::piecewise(
            vec![
                Piece {
                    lo: 0.0,
                    hi: 0.2,
                    model: PieceModel::Power {
                        anchor: 0.2,
                        amplitude: 1.0,
                        exponent: 1.0,
                    },
                },
                Piece {
                    lo: 0.2,
                    hi: 0.4,
                    model: PieceModel::Constant(0.0),
                },
                Piece {
                    lo: 0.4,
                    hi: 2.0,
                    model: PieceModel::Power {
                        anchor: 0.4,
                        amplitude: 1.0,
                        exponent: 1.0,
                    },
                },
            ],
            DomainKind::Interval(0.0, 2.0),
        )
        .unwrap();
        let cl = Classifier::default();
        assert!(matches!(
            cl.nu(&c, Side::Right, 0.05),
            Err(Error::CoefficientVanishes { .. })
        ));
    }

    #[test]
    fn mu_closed_forms() {
        let cl = Classifier::default();
        // delta = 2, x = e: ln x = 1
        let v = cl.mu(&plaw(2.0), Side::Right, std::f64::consts::E).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // delta = 0 (c = 1), x = 3: (9 - 1)/2 = 4
        let v = cl.mu(&plaw(0.0), Side::Right, 3.0).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let oracle = quad::integrate(|s| s, 1.0, 3.0, 1e-12, 0.0).unwrap().value;
        assert!((v - oracle).abs() < 1e-10);
        // empty range
        assert_eq!(cl.mu(&plaw(1.0), Side::Right, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn membership_power_law_rules() {
        let cl = Classifier::default();
        let p = cl.membership(&half(0.5), Side::Right).unwrap();
        assert!(p.nu_in_linf.holds && p.nu_in_l2.holds);

        let p = cl.membership(&half(1.25), Side::Right).unwrap();
        assert!(p.nu_in_l2.holds && !p.nu_in_linf.holds);
        // ||nu||^2 = 16/3 on (0,1), frozen from the closed-form antiderivative
        let norm = p.nu_l2_norm_sq().unwrap();
        assert!(
            (norm - 16.0 / 3.0).abs() / (16.0 / 3.0) < 1e-7,
            "norm {norm}"
        );

        let p = cl.membership(&half(1.5), Side::Right).unwrap();
        assert!(!p.nu_in_l2.holds);
    }

    #[test]
    fn membership_estimated_from_table() {
        // tabulated x^{1.25} on [0, 2]: exponent must be estimated
        let xs: Vec<f64> = (0..=600)
            .map(|i| 2.0 * (i as f64 / 600.0).powi(4))
            .collect();
        let cs: Vec<f64> = xs.iter().map(|x| x.powf(1.25)).collect();
        let c = Coefficient::tabulated(xs, cs, DomainKind::Interval(0.0, 2.0)).unwrap();
        let cl = Classifier::default();
        let p = cl.membership(&c, Side::Right).unwrap();
        assert!(!p.exponent_exact);
        assert!(
            (p.exponent - 1.25).abs() < 0.1,
            "estimated exponent {}",
            p.exponent
        );
        assert!(p.nu_in_l2.holds && !p.nu_in_linf.holds);
    }

    #[test]
    fn scattered_slopes_are_indeterminate_not_guessed() {
        // a table whose log-log slope oscillates wildly near the degeneracy
        // must refuse a verdict rather than silently picking an exponent
        let xs: Vec<f64> = (0..=400)
            .map(|i| 2.0 * (i as f64 / 400.0).powi(4))
            .collect();
        let cs: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let wobble = if i % 2 == 0 { 3.0 } else { 0.3 };
                if *x == 0.0 {
                    0.0
                } else {
                    wobble * x.powf(1.2)
                }
            })
            .collect();
        let c = Coefficient::tabulated(xs, cs, DomainKind::Interval(0.0, 2.0)).unwrap();
        let cl = Classifier::default();
        assert!(matches!(
            cl.membership(&c, Side::Right),
            Err(Error::Indeterminate(_))
        ));
    }

    #[test]
    fn classify_trichotomy_cases() {
        let cl = Classifier::default();
        let r = cl.classify(&plaw(0.5)).unwrap();
        assert_eq!(r.case, TrichotomyCase::III);
        assert_eq!(r.deficiency_indices, (1, 1));
        assert!(!r.unique_submarkovian);
        assert!(r
            .extension_menu
            .iter()
            .any(|f| f.submarkovian_when.contains(">= 0")));

        let r = cl.classify(&plaw(1.0)).unwrap();
        assert_eq!(r.case, TrichotomyCase::II);
        assert!(r.unique_submarkovian);

        // strong degeneracy on one side dominates the max
        let c = Coefficient::power_law(1.0, 2.0, 1.0, 0.5, DomainKind::Line).unwrap();
        let r = cl.classify(&c).unwrap();
        assert_eq!(r.case, TrichotomyCase::I);
        assert!(r.essentially_self_adjoint);
        assert_eq!(r.deficiency_indices, (0, 0));
    }

    #[test]
    fn scaling_covariance() {
        // replacing c by lambda c divides nu and mu by lambda, case unchanged
        let cl = Classifier::default();
        for &delta in &[0.5, 1.0, 1.25] {
            let c1 = Coefficient::symmetric_power_law(delta, DomainKind::Line).unwrap();
            let c5 = Coefficient::power_law(5.0, delta, 5.0, delta, DomainKind::Line).unwrap();
            let n1 = cl.nu(&c1, Side::Right, 0.01).unwrap();
            let n5 = cl.nu(&c5, Side::Right, 0.01).unwrap();
            assert!((n1 / 5.0 - n5).abs() < 1e-10 * n1.abs());
            let m1 = cl.mu(&c1, Side::Left, 7.0).unwrap();
            let m5 = cl.mu(&c5, Side::Left, 7.0).unwrap();
            assert!((m1 / 5.0 - m5).abs() < 1e-10 * m1.abs());
            assert_eq!(
                cl.classify(&c1).unwrap().case,
                cl.classify(&c5).unwrap().case
            );
        }
    }

    #[test]
    fn grids_are_monotone() {
        let cl = Classifier::default();
        let p = cl.membership(&plaw(1.25), Side::Right).unwrap();
        for w in p.nu_grid.windows(2) {
            assert!(
                w[1].1 <= w[0].1 + 1e-15,
                "nu grid must be non-increasing in x"
            );
        }
        for w in p.mu_grid.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-15, "mu grid must be non-decreasing");
        }
        // Linf implies L2 in every emitted profile
        assert!(!p.nu_in_linf.holds || p.nu_in_l2.holds);
    }

    #[test]
    fn half_line_decay_of_sqrt_x_nu() {
        // x^{1/2} nu(x) -> 0 for every case II exponent; six-decade contraction
        let cl = Classifier::default();
        for &(delta, bound) in &[(1.0, 0.1), (1.25, 0.1), (1.4, 0.35)] {
            let c = half(delta);
            let s = |x: f64| x.sqrt() * cl.nu(&c, Side::Right, x).unwrap();
            let ratio = s(1e-8) / s(1e-2);
            assert!(ratio < bound, "delta {delta}: ratio {ratio} >= {bound}");
        }
    }

    #[test]
    fn cutoff_energy_identity() {
        let cl = Classifier::default();
        // delta = 1, n = e^3: nu(1/n) = 3, energy = 1/3
        let n = (3f64).exp();
        let e = cl.cutoff_energy(&half(1.0), Side::Right, n).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 1e-9, "energy {e}");
        // identity e * nu(1/n) = 1 across cases I/II
        for &delta in &[1.0, 1.25, 1.5, 2.0] {
            for &n in &[1e2, 1e4, 1e6] {
                let c = half(delta);
                let e = cl.cutoff_energy(&c, Side::Right, n).unwrap();
                let nu_n = cl.nu(&c, Side::Right, 1.0 / n).unwrap();
                assert!(
                    (e * nu_n - 1.0).abs() < 1e-8,
                    "delta {delta} n {n}: {}",
                    e * nu_n
                );
            }
        }
    }

    #[test]
    fn cutoff_energy_case_iii_refuses() {
        let cl = Classifier::default();
        assert!(matches!(
            cl.cutoff_energy(&half(0.5), Side::Right, 100.0),
            Err(Error::BoundedNu { .. })
        ));
    }

    #[test]
    fn smooth_cutoff_identity_and_shape() {
        let cl = Classifier::default();
        let n = (3f64).exp();
        let sc = cl.smooth_cutoff_l1(&half(1.0), Side::Right, n).unwrap();
        // leading term equals 1/nu(1/n) = 1/3
        assert!(
            (sc.flux_divergence_l1 - 1.0 / 3.0).abs() < 1e-9,
            "{}",
            sc.flux_divergence_l1
        );
        // ramp shape: 0 below 1/n, 1 at the window edge, monotone within
        assert_eq!(sc.phi[0].1, 0.0);
        let last = sc.phi.last().unwrap();
        assert!((last.1 - 1.0).abs() < 1e-12);
        for w in sc.phi.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-9);
        }
    }

    #[test]
    fn smooth_cutoff_leading_ratio_tends_to_one() {
        let cl = Classifier::default();
        let c = half(1.25);
        for &n in &[1e2, 1e4, 1e6] {
            let sc = cl.smooth_cutoff_l1(&c, Side::Right, n).unwrap();
            let ratio = sc.flux_divergence_l1 * sc.nu_n;
            assert!((ratio - 1.0).abs() < 1e-8, "n {n}: ratio {ratio}");
        }
    }

    #[test]
    fn smooth_cutoff_corrected_norm_vanishes() {
        let cl = Classifier::default();
        let c = half(1.25);
        let l1_small = cl
            .smooth_cutoff_l1(&c, Side::Right, 1e3)
            .unwrap()
            .corrected_l1;
        let l1_large = cl
            .smooth_cutoff_l1(&c, Side::Right, 1e6)
            .unwrap()
            .corrected_l1;
        assert!(
            l1_large < l1_small,
            "corrected norm must decrease: {l1_small} -> {l1_large}"
        );
        let sc = cl.smooth_cutoff_l1(&c, Side::Right, 1e6).unwrap();
        // honest corrected norm stays within a bounded multiple of the leading term
        assert!(sc.corrected_l1 < 4.5 * sc.flux_divergence_l1);
        assert!(sc.corrected_l1 > sc.flux_divergence_l1);
    }

    #[test]
    fn growth_flag_tracks_mu() {
        let cl = Classifier::default();
        // delta = 3 at infinity: mu bounded, infinity accessible
        let r = cl.classify(&plaw(3.0)).unwrap();
        assert!(!r.growth_inaccessible_at_infinity);
        let r = cl.classify(&plaw(1.0)).unwrap();
        assert!(r.growth_inaccessible_at_infinity);
    }
}
