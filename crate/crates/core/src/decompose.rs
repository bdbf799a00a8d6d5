//! Zero-set decomposition: split the domain along the zeros of c, classify
//! each component, and realize the unique submarkovian extension as a direct
//! sum. Plateau interiors carry the zero operator rather than being dropped.

use crate::classify::{L2_BOUNDARY, LINF_BOUNDARY};
use crate::coeff::{Coefficient, Side};
use crate::error::{Error, Result};
use crate::grid::{self, BoundaryCondition, DiscreteOperator, FluxMode, MeshGeometry};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EndpointKind {
    /// Finite endpoint adjacent to a zero of c.
    Degenerate,
    /// Finite endpoint with c > 0 (an ordinary boundary).
    Regular,
    Unbounded,
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointVerdict {
    pub position: f64,
    pub kind: EndpointKind,
    /// Local power exponent of c approaching the endpoint, when determinable.
    pub exponent: Option<f64>,
    /// Exponent >= 1, i.e. c = O(dist): the W^{1,inf} hypothesis holds here.
    pub lipschitz: bool,
    /// nu unbounded at this endpoint (inaccessible boundary).
    pub nu_unbounded: bool,
    /// nu in L2 toward this endpoint (deficiency contribution 1).
    pub nu_in_l2: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Component {
    pub interval: (f64, f64),
    pub left: EndpointVerdict,
    pub right: EndpointVerdict,
    /// Sum of endpoint deficiency contributions.
    pub deficiency_index: u32,
    /// Every finite endpoint is inaccessible, so the Friedrichs extension is
    /// the unique submarkovian one on this component.
    pub unique_submarkovian: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub components: Vec<Component>,
    pub plateau_blocks: Vec<(f64, f64)>,
    pub zero_points: Vec<f64>,
    /// All zeros satisfy the Lipschitz hypothesis; when false the uniqueness
    /// conclusion fails and the decomposition is flagged, not rejected.
    pub lipschitz: bool,
    pub unique_submarkovian: bool,
}

fn local_exponent(c: &Coefficient, z: f64, inward: Side) -> Option<f64> {
    if let Some((_, d)) = c.local_power_at(z, inward) {
        return Some(d);
    }
    // sample-based log-log slope approaching the zero
    let mut pts = Vec::new();
    let mut t = 1e-7;
    while t <= 1e-2 {
        let x = z + inward.sign() * t;
        if c.domain().contains(x) {
            let v = c.eval_unchecked(x);
            if v > 0.0 {
                pts.push((t.ln(), v.ln()));
            }
        }
        t *= 10.0f64.powf(0.25);
    }
    if pts.len() < 4 {
        return None;
    }
    let mut slopes: Vec<f64> = pts
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    slopes.sort_by(|p, q| p.partial_cmp(q).unwrap());
    Some(slopes[slopes.len() / 2])
}

fn endpoint_verdict(
    c: &Coefficient,
    position: f64,
    kind: EndpointKind,
    inward: Side,
) -> EndpointVerdict {
    match kind {
        EndpointKind::Unbounded => EndpointVerdict {
            position,
            kind,
            exponent: None,
            lipschitz: true,
            nu_unbounded: true,
            nu_in_l2: false,
        },
        EndpointKind::Regular => EndpointVerdict {
            position,
            kind,
            exponent: Some(0.0),
            lipschitz: true,
            nu_unbounded: false,
            nu_in_l2: true,
        },
        EndpointKind::Degenerate => {
            let exponent = local_exponent(c, position, inward);
            let d = exponent.unwrap_or(1.0);
            EndpointVerdict {
                position,
                kind,
                exponent,
                lipschitz: d >= 1.0 - 1e-9,
                nu_unbounded: d >= LINF_BOUNDARY,
                nu_in_l2: d < L2_BOUNDARY,
            }
        }
    }
}

/// Split the domain of c along its zero set into components and plateaus.
pub fn decompose(c: &Coefficient) -> Result<Decomposition> {
    let zs = c.zero_set(1e-9);
    let (lo, hi) = c.domain().bounds();

    // cuts: isolated zeros and plateau blocks, in order
    #[derive(Clone, Copy)]
    enum Cut {
        Point(f64),
        Plateau(f64, f64),
    }
    let mut cuts: Vec<Cut> = zs.points.iter().map(|p| Cut::Point(*p)).collect();
    cuts.extend(zs.plateaus.iter().map(|&(a, b)| Cut::Plateau(a, b)));
    cuts.sort_by(|p, q| {
        let kp = match p {
            Cut::Point(x) => *x,
            Cut::Plateau(a, _) => *a,
        };
        let kq = match q {
            Cut::Point(x) => *x,
            Cut::Plateau(a, _) => *a,
        };
        kp.partial_cmp(&kq).unwrap()
    });

    let mut components = Vec::new();
    let mut plateau_blocks = Vec::new();
    let mut zero_points = Vec::new();
    let mut cursor = lo;
    let mut cursor_kind = if lo.is_finite() {
        if c.eval_unchecked(lo) == 0.0 {
            EndpointKind::Degenerate
        } else {
            EndpointKind::Regular
        }
    } else {
        EndpointKind::Unbounded
    };
    let push_component =
        |a: f64, ka: EndpointKind, b: f64, kb: EndpointKind, comps: &mut Vec<Component>| {
            if b <= a {
                return;
            }
            let left = endpoint_verdict(c, a, ka, Side::Right);
            let right = endpoint_verdict(c, b, kb, Side::Left);
            let deficiency = left.nu_in_l2 as u32 + right.nu_in_l2 as u32;
            let unique = left.nu_unbounded_or_infinite() && right.nu_unbounded_or_infinite();
            comps.push(Component {
                interval: (a, b),
                left,
                right,
                deficiency_index: deficiency,
                unique_submarkovian: unique,
            });
        };

    for cut in &cuts {
        match *cut {
            Cut::Point(p) => {
                if p > cursor {
                    push_component(
                        cursor,
                        cursor_kind,
                        p,
                        EndpointKind::Degenerate,
                        &mut components,
                    );
                }
                zero_points.push(p);
                cursor = p;
                cursor_kind = EndpointKind::Degenerate;
            }
            Cut::Plateau(a, b) => {
                if a > cursor {
                    push_component(
                        cursor,
                        cursor_kind,
                        a,
                        EndpointKind::Degenerate,
                        &mut components,
                    );
                }
                plateau_blocks.push((a.max(lo), b.min(hi)));
                cursor = b;
                cursor_kind = EndpointKind::Degenerate;
            }
        }
    }
    let end_kind = if hi.is_finite() {
        if c.eval_unchecked(hi) == 0.0 {
            EndpointKind::Degenerate
        } else {
            EndpointKind::Regular
        }
    } else {
        EndpointKind::Unbounded
    };
    if hi > cursor {
        push_component(cursor, cursor_kind, hi, end_kind, &mut components);
    }

    let lipschitz = components
        .iter()
        .all(|cp| cp.left.lipschitz && cp.right.lipschitz);
    let unique_submarkovian = lipschitz && components.iter().all(|cp| cp.unique_submarkovian);
    Ok(Decomposition {
        components,
        plateau_blocks,
        zero_points,
        lipschitz,
        unique_submarkovian,
    })
}

impl EndpointVerdict {
    fn nu_unbounded_or_infinite(&self) -> bool {
        match self.kind {
            EndpointKind::Unbounded => true,
            _ => self.nu_unbounded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    Component,
    Plateau,
}

pub struct BlockOperator {
    pub kind: BlockKind,
    pub interval: (f64, f64),
    pub op: DiscreteOperator,
}

/// Assemble one Friedrichs block per component plus a zero operator per
/// plateau. Semi-infinite components are truncated at `truncation` from their
/// finite end (Dirichlet far field).
pub fn assemble_direct_sum(
    c: &Coefficient,
    dec: &Decomposition,
    n_cells: usize,
    grading_ratio: f64,
    truncation: f64,
) -> Result<Vec<BlockOperator>> {
    let mut blocks = Vec::new();
    for comp in &dec.components {
        let (a, b) = comp.interval;
        let (lo, hi) = match (a.is_finite(), b.is_finite()) {
            (true, true) => (a, b),
            (true, false) => (a, a + truncation),
            (false, true) => (b - truncation, b),
            (false, false) => (-truncation, truncation),
        };
        let mesh = grid::build_mesh(
            MeshGeometry::Interval { a: lo, b: hi },
            n_cells,
            grading_ratio,
        )?;
        let op = grid::assemble_with_mode(
            c,
            &mesh,
            BoundaryCondition::FriedrichsAuto,
            FluxMode::Midpoint,
        )?;
        blocks.push(BlockOperator {
            kind: BlockKind::Component,
            interval: comp.interval,
            op,
        });
    }
    for &(a, b) in &dec.plateau_blocks {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Invalid("unbounded plateau block".into()));
        }
        let mesh = grid::build_mesh(
            MeshGeometry::Interval { a, b },
            n_cells.max(8),
            grading_ratio,
        )?;
        let op =
            grid::assemble_with_mode(c, &mesh, BoundaryCondition::NeumannFlux, FluxMode::Midpoint)?;
        blocks.push(BlockOperator {
            kind: BlockKind::Plateau,
            interval: (a, b),
            op,
        });
    }
    Ok(blocks)
}
