//! Coefficient models for the operator -(c u')'.
//!
//! A coefficient is non-negative, strictly positive away from its declared
//! zeros, and evaluable together with its derivative and local power-law
//! behaviour at each degeneracy.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DomainKind {
    Line,
    HalfLine(Side),
    Interval(f64, f64),
}

impl DomainKind {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            DomainKind::Line => (f64::NEG_INFINITY, f64::INFINITY),
            DomainKind::HalfLine(Side::Right) => (0.0, f64::INFINITY),
            DomainKind::HalfLine(Side::Left) => (f64::NEG_INFINITY, 0.0),
            DomainKind::Interval(a, b) => (a, b),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = self.bounds();
        x >= a && x <= b
    }

    pub fn has_side(&self, side: Side) -> bool {
        match *self {
            DomainKind::Line => true,
            DomainKind::HalfLine(s) => s == side,
            DomainKind::Interval(a, b) => match side {
                Side::Right => b > 0.0,
                Side::Left => a < 0.0,
            },
        }
    }
}

/// Sub-model of a piecewise coefficient, expressed on its own interval.
#[derive(Debug, Clone)]
pub enum PieceModel {
    /// c = value on the whole piece.
    Constant(f64),
    /// c(x) = amplitude * |x - anchor|^exponent.
    Power {
        anchor: f64,
        amplitude: f64,
        exponent: f64,
    },
    /// c(x) = amplitude * (x - lo)^exp_left * (hi - x)^exp_right on a finite piece.
    EdgePowers {
        amplitude: f64,
        exp_left: f64,
        exp_right: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub model: PieceModel,
}

impl Piece {
    fn eval(&self, x: f64) -> f64 {
        match self.model {
            PieceModel::Constant(v) => v,
            PieceModel::Power {
                anchor,
                amplitude,
                exponent,
            } => {
                let d = (x - anchor).abs();
                if d == 0.0 && exponent == 0.0 {
                    amplitude
                } else {
                    amplitude * d.powf(exponent)
                }
            }
            PieceModel::EdgePowers {
                amplitude,
                exp_left,
                exp_right,
            } => {
                let l = (x - self.lo).max(0.0);
                let r = (self.hi - x).max(0.0);
                amplitude * l.powf(exp_left) * r.powf(exp_right)
            }
        }
    }

    fn eval_derivative(&self, x: f64) -> f64 {
        match self.model {
            PieceModel::Constant(_) => 0.0,
            PieceModel::Power {
                anchor,
                amplitude,
                exponent,
            } => power_derivative(x - anchor, amplitude, exponent),
            PieceModel::EdgePowers {
                amplitude,
                exp_left,
                exp_right,
            } => {
                let l = x - self.lo;
                let r = self.hi - x;
                // product rule on A (x-lo)^p (hi-x)^q
                let left_part = if exp_left == 0.0 {
                    0.0
                } else if l == 0.0 {
                    if exp_left > 1.0 {
                        0.0
                    } else {
                        f64::NAN
                    }
                } else {
                    exp_left * l.powf(exp_left - 1.0) * r.powf(exp_right)
                };
                let right_part = if exp_right == 0.0 {
                    0.0
                } else if r == 0.0 {
                    if exp_right > 1.0 {
                        0.0
                    } else {
                        f64::NAN
                    }
                } else {
                    -exp_right * l.powf(exp_left) * r.powf(exp_right - 1.0)
                };
                amplitude * (left_part + right_part)
            }
        }
    }
}

/// d/dx of a * |u|^p at signed offset u (u = x - anchor).
fn power_derivative(u: f64, a: f64, p: f64) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    if u == 0.0 {
        return if p > 1.0 { 0.0 } else { f64::NAN };
    }
    a * p * u.abs().powf(p - 1.0) * u.signum()
}

/// Monotone (Fritsch-Butland) cubic interpolant over strictly increasing samples.
#[derive(Debug, Clone)]
pub struct Table {
    pub xs: Vec<f64>,
    pub cs: Vec<f64>,
    tangents: Vec<f64>,
}

impl Table {
    fn new(xs: Vec<f64>, cs: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != cs.len() {
            return Err(Error::InvalidCoefficient(
                "tabulated model needs at least two matching samples".into(),
            ));
        }
        for w in xs.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidCoefficient(format!(
                    "table abscissae not strictly increasing at x = {}",
                    w[1]
                )));
            }
        }
        if let Some(v) = cs.iter().find(|v| **v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidCoefficient(format!(
                "table value {v} is negative or non-finite"
            )));
        }
        let tangents = fritsch_butland_tangents(&xs, &cs);
        Ok(Table { xs, cs, tangents })
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (y0, y1) = (self.cs[k], self.cs[k + 1]);
        let (m0, m1) = (self.tangents[k] * h, self.tangents[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    fn eval_derivative(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (y0, y1) = (self.cs[k], self.cs[k + 1]);
        let (m0, m1) = (self.tangents[k], self.tangents[k + 1]);
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) * (y0 - y1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (3.0 * t2 - 2.0 * t) * m1
    }
}

fn fritsch_butland_tangents(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = 3.0 * (h[i - 1] + h[i]) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m[0] = endpoint_tangent(
        h[0],
        h.get(1).copied().unwrap_or(h[0]),
        d[0],
        d.get(1).copied().unwrap_or(d[0]),
    );
    m[n - 1] = endpoint_tangent(
        h[n - 2],
        if n >= 3 { h[n - 3] } else { h[n - 2] },
        d[n - 2],
        if n >= 3 { d[n - 3] } else { d[n - 2] },
    );
    m
}

fn endpoint_tangent(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        m = 0.0;
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        m = 3.0 * d0;
    }
    m
}

/// A derivative jump recorded at a piecewise joint (W^{1,inf} joints allowed).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JointJump {
    pub x: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone)]
enum Model {
    PowerLaw {
        amp_left: f64,
        exp_left: f64,
        amp_right: f64,
        exp_right: f64,
    },
    Piecewise(Vec<Piece>),
    Tabulated(Table),
}

/// Evaluable coefficient with degeneracy metadata; immutable after construction.
#[derive(Debug, Clone)]
pub struct Coefficient {
    model: Model,
    domain: DomainKind,
    joints: Vec<JointJump>,
}

/// Zeros of the coefficient: isolated points and closed plateaus.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ZeroSet {
    pub points: Vec<f64>,
    pub plateaus: Vec<(f64, f64)>,
}

impl ZeroSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.plateaus.is_empty()
    }

    /// True when some zero (point or plateau) intersects the open interval.
    pub fn intersects_open(&self, a: f64, b: f64) -> bool {
        self.points.iter().any(|&p| p > a && p < b)
            || self.plateaus.iter().any(|&(lo, hi)| hi > a && lo < b)
    }
}

impl Coefficient {
    pub fn power_law(
        amp_left: f64,
        exp_left: f64,
        amp_right: f64,
        exp_right: f64,
        domain: DomainKind,
    ) -> Result<Self> {
        if amp_left <= 0.0 || amp_right <= 0.0 {
            return Err(Error::InvalidCoefficient(
                "power-law amplitudes must be positive".into(),
            ));
        }
        if exp_left < 0.0 || exp_right < 0.0 {
            return Err(Error::InvalidCoefficient(
                "power-law exponents must be non-negative".into(),
            ));
        }
        Ok(Coefficient {
            model: Model::PowerLaw {
                amp_left,
                exp_left,
                amp_right,
                exp_right,
            },
            domain,
            joints: Vec::new(),
        })
    }

    /// Symmetric power law |x|^delta with unit amplitude.
    pub fn symmetric_power_law(delta: f64, domain: DomainKind) -> Result<Self> {
        Self::power_law(1.0, delta, 1.0, delta, domain)
    }

    pub fn piecewise(pieces: Vec<Piece>, domain: DomainKind) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidCoefficient(
                "piecewise model needs at least one piece".into(),
            ));
        }
        let (a, b) = domain.bounds();
        if pieces[0].lo > a || pieces[pieces.len() - 1].hi < b {
            return Err(Error::InvalidCoefficient(
                "pieces do not cover the domain".into(),
            ));
        }
        let mut joints = Vec::new();
        for w in pieces.windows(2) {
            let (p, q) = (&w[0], &w[1]);
            if (p.hi - q.lo).abs() > 1e-12 * (1.0 + p.hi.abs()) {
                return Err(Error::InvalidCoefficient(format!(
                    "pieces not contiguous at x = {} / {}",
                    p.hi, q.lo
                )));
            }
            let x = p.hi;
            let vl = p.eval(x);
            let vr = q.eval(x);
            let scale = vl.abs().max(vr.abs()).max(1e-300);
            if (vl - vr).abs() > 1e-12 * scale && (vl - vr).abs() > 1e-14 {
                return Err(Error::InvalidCoefficient(format!(
                    "piecewise joint discontinuous at x = {x}: {vl} vs {vr}"
                )));
            }
            // one-sided difference quotients; W^{1,inf} joints may disagree
            let h = 1e-7 * (1.0 + x.abs());
            let dl = (p.eval(x) - p.eval(x - h)) / h;
            let dr = (q.eval(x + h) - q.eval(x)) / h;
            if (dl - dr).abs() > 1e-5 * (1.0 + dl.abs().max(dr.abs())) {
                joints.push(JointJump {
                    x,
                    left: dl,
                    right: dr,
                });
            }
        }
        for p in &pieces {
            if let PieceModel::EdgePowers { .. } = p.model {
                if !p.lo.is_finite() || !p.hi.is_finite() {
                    return Err(Error::InvalidCoefficient(
                        "edge-power piece requires a finite interval".into(),
                    ));
                }
            }
            if let PieceModel::Constant(v) = p.model {
                if v < 0.0 {
                    return Err(Error::InvalidCoefficient("negative constant piece".into()));
                }
            }
        }
        Ok(Coefficient {
            model: Model::Piecewise(pieces),
            domain,
            joints,
        })
    }

    pub fn tabulated(xs: Vec<f64>, cs: Vec<f64>, domain: DomainKind) -> Result<Self> {
        let table = Table::new(xs, cs)?;
        let (a, b) = domain.bounds();
        if table.xs[0] > a || *table.xs.last().unwrap() < b {
            return Err(Error::InvalidCoefficient(
                "table does not cover the domain".into(),
            ));
        }
        Ok(Coefficient {
            model: Model::Tabulated(table),
            domain,
            joints: Vec::new(),
        })
    }

    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    pub fn joints(&self) -> &[JointJump] {
        &self.joints
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                x,
                detail: format!("domain is {:?}", self.domain),
            })
        }
    }

    /// c(x); exact closed form for power laws.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        match &self.model {
            Model::PowerLaw {
                amp_left,
                exp_left,
                amp_right,
                exp_right,
            } => {
                if x > 0.0 {
                    amp_right * x.powf(*exp_right)
                } else if x < 0.0 {
                    amp_left * (-x).powf(*exp_left)
                } else if *exp_left == 0.0 && *exp_right == 0.0 {
                    amp_left.min(*amp_right)
                } else {
                    0.0
                }
            }
            Model::Piecewise(pieces) => {
                let p = pieces
                    .iter()
                    .find(|p| x >= p.lo && x <= p.hi)
                    .unwrap_or_else(|| pieces.last().unwrap());
                p.eval(x)
            }
            Model::Tabulated(t) => t.eval(x).max(0.0),
        }
    }

    /// c'(x); errors at a piecewise joint where the one-sided values differ.
    pub fn eval_derivative(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        match &self.model {
            Model::PowerLaw {
                amp_left,
                exp_left,
                amp_right,
                exp_right,
            } => {
                if x > 0.0 {
                    Ok(power_derivative(x, *amp_right, *exp_right))
                } else if x < 0.0 {
                    Ok(power_derivative(x, *amp_left, *exp_left))
                } else {
                    // one-sided derivatives at the origin
                    let dr = if *exp_right > 1.0 {
                        0.0
                    } else if *exp_right == 1.0 {
                        *amp_right
                    } else if *exp_right == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    let dl = if *exp_left > 1.0 {
                        0.0
                    } else if *exp_left == 1.0 {
                        -*amp_left
                    } else if *exp_left == 0.0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    };
                    match self.domain {
                        DomainKind::HalfLine(Side::Right) => Ok(dr),
                        DomainKind::HalfLine(Side::Left) => Ok(dl),
                        _ => {
                            if dl == dr {
                                Ok(dr)
                            } else {
                                Err(Error::DerivativeJump {
                                    x,
                                    left: dl,
                                    right: dr,
                                })
                            }
                        }
                    }
                }
            }
            Model::Piecewise(pieces) => {
                for jump in &self.joints {
                    if x == jump.x {
                        return Err(Error::DerivativeJump {
                            x,
                            left: jump.left,
                            right: jump.right,
                        });
                    }
                }
                let p = pieces
                    .iter()
                    .find(|p| x >= p.lo && x <= p.hi)
                    .unwrap_or_else(|| pieces.last().unwrap());
                let d = p.eval_derivative(x);
                if d.is_nan() {
                    Err(Error::DerivativeJump {
                        x,
                        left: f64::NEG_INFINITY,
                        right: f64::INFINITY,
                    })
                } else {
                    Ok(d)
                }
            }
            Model::Tabulated(t) => Ok(t.eval_derivative(x)),
        }
    }

    /// All points/plateaus where c falls below `tol` times the local scale.
    pub fn zero_set(&self, tol: f64) -> ZeroSet {
        let (a, b) = self.domain.bounds();
        match &self.model {
            Model::PowerLaw {
                exp_left,
                exp_right,
                ..
            } => {
                let mut zs = ZeroSet::default();
                let degenerate = match self.domain {
                    DomainKind::HalfLine(Side::Right) => *exp_right > 0.0,
                    DomainKind::HalfLine(Side::Left) => *exp_left > 0.0,
                    _ => *exp_right > 0.0 || *exp_left > 0.0,
                };
                if degenerate && self.domain.contains(0.0) {
                    zs.points.push(0.0);
                }
                zs
            }
            Model::Piecewise(pieces) => {
                let mut points = Vec::new();
                let mut plateaus = Vec::new();
                for p in pieces {
                    match p.model {
                        PieceModel::Constant(0.0) => {
                            plateaus.push((p.lo.max(a), p.hi.min(b)));
                        }
                        PieceModel::Constant(_) => {}
                        PieceModel::Power {
                            anchor, exponent, ..
                        } => {
                            if exponent > 0.0 && anchor >= p.lo && anchor <= p.hi {
                                points.push(anchor);
                            }
                        }
                        PieceModel::EdgePowers {
                            exp_left,
                            exp_right,
                            ..
                        } => {
                            if exp_left > 0.0 {
                                points.push(p.lo);
                            }
                            if exp_right > 0.0 {
                                points.push(p.hi);
                            }
                        }
                    }
                }
                normalize_zero_set(points, plateaus, a, b)
            }
            Model::Tabulated(t) => {
                let mut sorted = t.cs.clone();
                sorted.sort_by(|p, q| p.partial_cmp(q).unwrap());
                let median = sorted[sorted.len() / 2];
                let thr = tol * median.max(f64::MIN_POSITIVE);
                let mut points = Vec::new();
                let mut plateaus = Vec::new();
                let mut run_start: Option<usize> = None;
                for i in 0..=t.xs.len() {
                    let below = i < t.xs.len() && t.cs[i] <= thr;
                    match (below, run_start) {
                        (true, None) => run_start = Some(i),
                        (false, Some(s)) => {
                            if i - s >= 2 {
                                plateaus.push((t.xs[s], t.xs[i - 1]));
                            } else {
                                points.push(t.xs[s]);
                            }
                            run_start = None;
                        }
                        _ => {}
                    }
                }
                normalize_zero_set(points, plateaus, a, b)
            }
        }
    }

    /// Exact local power behaviour at the origin on the given side:
    /// c(x) ~ amplitude |x|^exponent. `None` when the model only supports estimation.
    pub fn origin_power(&self, side: Side) -> Option<(f64, f64)> {
        self.local_power_at(0.0, side)
    }

    /// Power behaviour valid on the whole side, not just near the origin.
    /// Only a global power law admits closed-form nu/mu on arbitrary ranges.
    pub fn global_power(&self, side: Side) -> Option<(f64, f64)> {
        match &self.model {
            Model::PowerLaw {
                amp_left,
                exp_left,
                amp_right,
                exp_right,
            } => Some(match side {
                Side::Right => (*amp_right, *exp_right),
                Side::Left => (*amp_left, *exp_left),
            }),
            _ => None,
        }
    }

    /// Exact local power behaviour c(x) ~ amplitude |x - z|^exponent approaching
    /// the zero `z` from the given side, when the model exposes it.
    pub fn local_power_at(&self, z: f64, side: Side) -> Option<(f64, f64)> {
        match &self.model {
            Model::PowerLaw {
                amp_left,
                exp_left,
                amp_right,
                exp_right,
            } => {
                if z != 0.0 {
                    return None;
                }
                Some(match side {
                    Side::Right => (*amp_right, *exp_right),
                    Side::Left => (*amp_left, *exp_left),
                })
            }
            Model::Piecewise(pieces) => {
                let eps = 1e-13 * (1.0 + z.abs());
                let p = pieces.iter().find(|p| match side {
                    Side::Right => (p.lo - z).abs() <= eps || (z > p.lo && z < p.hi),
                    Side::Left => (p.hi - z).abs() <= eps || (z > p.lo && z < p.hi),
                })?;
                match p.model {
                    PieceModel::Constant(v) => Some((v, 0.0)),
                    PieceModel::Power {
                        anchor,
                        amplitude,
                        exponent,
                    } => {
                        if (anchor - z).abs() <= eps {
                            Some((amplitude, exponent))
                        } else {
                            Some((p.eval(z), 0.0))
                        }
                    }
                    PieceModel::EdgePowers {
                        amplitude,
                        exp_left,
                        exp_right,
                    } => {
                        if (p.lo - z).abs() <= eps {
                            Some((amplitude * (p.hi - p.lo).powf(exp_right), exp_left))
                        } else if (p.hi - z).abs() <= eps {
                            Some((amplitude * (p.hi - p.lo).powf(exp_left), exp_right))
                        } else {
                            Some((p.eval(z), 0.0))
                        }
                    }
                }
            }
            Model::Tabulated(_) => None,
        }
    }

    /// Abscissae (as positive offsets from the origin toward `side`) where the
    /// model carries real samples. Exponent estimation anchors on these for
    /// tabulated data instead of probing below the table's resolution.
    pub fn sample_hints(&self, side: Side) -> Option<Vec<f64>> {
        match &self.model {
            Model::Tabulated(t) => {
                let mut hints: Vec<f64> =
                    t.xs.iter()
                        .map(|x| side.sign() * x)
                        .filter(|x| *x > 0.0)
                        .collect();
                hints.sort_by(|p, q| p.partial_cmp(q).unwrap());
                Some(hints)
            }
            _ => None,
        }
    }

    /// Exact power behaviour c(x) ~ amplitude |x|^exponent as |x| -> infinity.
    pub fn infinity_power(&self, side: Side) -> Option<(f64, f64)> {
        match &self.model {
            Model::PowerLaw {
                amp_left,
                exp_left,
                amp_right,
                exp_right,
            } => Some(match side {
                Side::Right => (*amp_right, *exp_right),
                Side::Left => (*amp_left, *exp_left),
            }),
            Model::Piecewise(pieces) => {
                let p = match side {
                    Side::Right => pieces.last().unwrap(),
                    Side::Left => pieces.first().unwrap(),
                };
                match p.model {
                    PieceModel::Constant(v) => Some((v, 0.0)),
                    PieceModel::Power {
                        amplitude,
                        exponent,
                        ..
                    } => Some((amplitude, exponent)),
                    PieceModel::EdgePowers { .. } => None,
                }
            }
            Model::Tabulated(_) => None,
        }
    }
}

fn normalize_zero_set(
    mut points: Vec<f64>,
    mut plateaus: Vec<(f64, f64)>,
    a: f64,
    b: f64,
) -> ZeroSet {
    points.retain(|&p| p >= a && p <= b);
    points.sort_by(|p, q| p.partial_cmp(q).unwrap());
    points.dedup_by(|p, q| (*p - *q).abs() <= 1e-13 * (1.0 + q.abs()));
    plateaus.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    // merge touching plateaus, then drop points swallowed by a plateau
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in plateaus {
        if let Some(last) = merged.last_mut() {
            if lo <= last.1 + 1e-13 * (1.0 + last.1.abs()) {
                last.1 = last.1.max(hi);
                continue;
            }
        }
        merged.push((lo, hi));
    }
    points.retain(|&p| {
        !merged.iter().any(|&(lo, hi)| {
            p >= lo - 1e-13 * (1.0 + lo.abs()) && p <= hi + 1e-13 * (1.0 + hi.abs())
        })
    });
    ZeroSet {
        points,
        plateaus: merged,
    }
}
