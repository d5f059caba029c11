//! Cylinder cross-sections and their relation to the Cartesian node lattice.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub type Point2 = [f64; 2];

/// Vertical elongation of the D-shape.
pub const DSHAPE_ELONGATION: f64 = 1.66;

/// Triangularity offset `arcsin(0.416)` of the D-shape.
pub fn dshape_triangularity() -> f64 {
    0.416f64.asin()
}

/// Points closer than this (relative to the domain scale) to ∂D count as on it.
const ON_BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk {
        center: Point2,
        radius: f64,
    },
    /// Miller-type cross-section, image of `ξ₁ ≤ r0` under [`map_dshape`].
    DShape {
        center: Point2,
        r0: f64,
    },
}

/// Cross-section `D` of the cylinder `D × [0, lz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub shape: Shape,
    pub lz: f64,
}

/// Foot of the normal from an exterior point onto ∂D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTrace {
    pub x_p: Point2,
    /// Inward unit normal at `x_p`.
    pub normal: Point2,
    /// Signed distance of the traced point along the normal, negative outside.
    pub s_g: f64,
}

impl DomainSpec {
    pub fn disk(center: Point2, radius: f64, lz: f64) -> Self {
        assert!(
            radius > 0.0 && lz > 0.0,
            "disk radius and lz must be positive"
        );
        DomainSpec {
            shape: Shape::Disk { center, radius },
            lz,
        }
    }

    pub fn dshape(center: Point2, r0: f64, lz: f64) -> Self {
        assert!(
            r0 > 0.0 && lz > 0.0,
            "D-shape scale and lz must be positive"
        );
        DomainSpec {
            shape: Shape::DShape { center, r0 },
            lz,
        }
    }

    pub fn center(&self) -> Point2 {
        match self.shape {
            Shape::Disk { center, .. } | Shape::DShape { center, .. } => center,
        }
    }

    /// Characteristic length (radius or `R₀`).
    pub fn scale(&self) -> f64 {
        match self.shape {
            Shape::Disk { radius, .. } => radius,
            Shape::DShape { r0, .. } => r0,
        }
    }

    /// Strict interior test.
    pub fn contains(&self, p: Point2) -> bool {
        match self.shape {
            Shape::Disk { center, radius } => dist(p, center) < radius,
            Shape::DShape { center, r0 } => dshape_coords(center, p).0 < r0,
        }
    }

    /// True when `p` lies on ∂D up to a relative tolerance of 1e-12.
    pub fn on_boundary(&self, p: Point2) -> bool {
        let tol = ON_BOUNDARY_TOL * self.scale();
        match self.shape {
            Shape::Disk { center, radius } => (dist(p, center) - radius).abs() < tol,
            Shape::DShape { center, r0 } => {
                let (xi1, xi2) = dshape_coords(center, p);
                // ξ₁ is a distance along the ray scaled by |d(ξ₂)| ∈ [~0.6, 1.66]
                (xi1 - r0).abs() * dshape_direction(xi2).0.hypot(dshape_direction(xi2).1) < tol
            }
        }
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        match self.shape {
            Shape::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Shape::DShape { center, r0 } => {
                // x = xc + r0 cos(·) reaches ±r0 at ξ₂ = 0 and at the ξ₂ solving ξ₂ + δ sin ξ₂ = π
                (
                    [center[0] - r0, center[1] - DSHAPE_ELONGATION * r0],
                    [center[0] + r0, center[1] + DSHAPE_ELONGATION * r0],
                )
            }
        }
    }

    /// Nearest boundary point, inward normal and signed distance for an
    /// exterior point close to ∂D.
    pub fn boundary_trace(&self, x_g: Point2) -> Result<BoundaryTrace> {
        match self.shape {
            Shape::Disk { center, radius } => {
                let d = [x_g[0] - center[0], x_g[1] - center[1]];
                let r = d[0].hypot(d[1]);
                if r == 0.0 {
                    return Err(Error::NoIntersection {
                        x: x_g[0],
                        y: x_g[1],
                    });
                }
                let u = [d[0] / r, d[1] / r];
                Ok(BoundaryTrace {
                    x_p: [center[0] + radius * u[0], center[1] + radius * u[1]],
                    normal: [-u[0], -u[1]],
                    s_g: -(r - radius).abs(),
                })
            }
            Shape::DShape { center, r0 } => dshape_trace(center, r0, x_g),
        }
    }
}

/// Miller mapping from curvilinear `(ξ₁, ξ₂)` to physical coordinates.
pub fn map_dshape(center: Point2, xi1: f64, xi2: f64) -> Point2 {
    let (dx, dy) = dshape_direction(xi2);
    [center[0] + xi1 * dx, center[1] + xi1 * dy]
}

/// Image of `(1, ξ₂)` relative to the center. The mapping is linear in ξ₁
/// along this fixed direction.
fn dshape_direction(xi2: f64) -> (f64, f64) {
    let delta = dshape_triangularity();
    (
        (xi2 + delta * xi2.sin()).cos(),
        DSHAPE_ELONGATION * xi2.sin(),
    )
}

fn dshape_direction_d1(xi2: f64) -> (f64, f64) {
    let delta = dshape_triangularity();
    let a = xi2 + delta * xi2.sin();
    (
        -a.sin() * (1.0 + delta * xi2.cos()),
        DSHAPE_ELONGATION * xi2.cos(),
    )
}

fn dshape_direction_d2(xi2: f64) -> (f64, f64) {
    let delta = dshape_triangularity();
    let a = xi2 + delta * xi2.sin();
    let da = 1.0 + delta * xi2.cos();
    (
        -a.cos() * da * da + a.sin() * delta * xi2.sin(),
        -DSHAPE_ELONGATION * xi2.sin(),
    )
}

/// Inverse Miller mapping. The polar angle of the ray direction increases
/// monotonically with ξ₂, so ξ₂ is found by bisection on the angle and ξ₁
/// follows from the radial distance.
pub fn dshape_coords(center: Point2, p: Point2) -> (f64, f64) {
    let rel = [p[0] - center[0], p[1] - center[1]];
    let r = rel[0].hypot(rel[1]);
    if r == 0.0 {
        return (0.0, 0.0);
    }
    // the curve is symmetric under y → −y, ξ₂ → 2π − ξ₂
    let psi = rel[1].abs().atan2(rel[0]);
    let (mut lo, mut hi) = (0.0, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (dx, dy) = dshape_direction(mid);
        if dy.atan2(dx) < psi {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * PI {
            break;
        }
    }
    let mut xi2 = 0.5 * (lo + hi);
    let (dx, dy) = dshape_direction(xi2);
    let xi1 = r / dx.hypot(dy);
    if rel[1] < 0.0 {
        xi2 = TAU - xi2;
    }
    (xi1, xi2)
}

fn dshape_trace(center: Point2, r0: f64, x_g: Point2) -> Result<BoundaryTrace> {
    let boundary = |xi: f64| map_dshape(center, r0, xi);
    // g(ξ) = ⟨B(ξ) − x_g, B'(ξ)⟩ vanishes at the foot of the normal
    let g = |xi: f64| {
        let b = boundary(xi);
        let (t0, t1) = dshape_direction_d1(xi);
        r0 * ((b[0] - x_g[0]) * t0 + (b[1] - x_g[1]) * t1)
    };
    let dg = |xi: f64| {
        let b = boundary(xi);
        let (t0, t1) = dshape_direction_d1(xi);
        let (s0, s1) = dshape_direction_d2(xi);
        r0 * r0 * (t0 * t0 + t1 * t1) + r0 * ((b[0] - x_g[0]) * s0 + (b[1] - x_g[1]) * s1)
    };

    const SAMPLES: usize = 512;
    let step = TAU / SAMPLES as f64;
    let start = (0..SAMPLES)
        .map(|i| i as f64 * step)
        .min_by(|&a, &b| dist(boundary(a), x_g).total_cmp(&dist(boundary(b), x_g)))
        .unwrap_or(0.0);
    let (lo, hi) = (start - step, start + step);

    let tol = 1e-12 * r0;
    let mut xi = start;
    let mut converged = false;
    for _ in 0..50 {
        let d = dg(xi);
        if d <= 0.0 {
            break;
        }
        let next = xi - g(xi) / d;
        if !(lo..=hi).contains(&next) {
            break;
        }
        let moved = r0 * (next - xi).abs() * 2.0;
        xi = next;
        if moved < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        let (mut a, mut b) = (lo, hi);
        let (ga, gb) = (g(a), g(b));
        if ga.signum() == gb.signum() {
            return Err(Error::NoIntersection {
                x: x_g[0],
                y: x_g[1],
            });
        }
        let neg_at_a = ga < 0.0;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (g(m) < 0.0) == neg_at_a {
                a = m;
            } else {
                b = m;
            }
            if r0 * (b - a) < tol {
                break;
            }
        }
        xi = 0.5 * (a + b);
    }

    let x_p = boundary(xi);
    let (t0, t1) = dshape_direction_d1(xi);
    let tn = t0.hypot(t1);
    Ok(BoundaryTrace {
        x_p,
        normal: [-t1 / tn, t0 / tn],
        s_g: -dist(x_g, x_p),
    })
}

fn dist(a: Point2, b: Point2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLabel {
    Interior,
    Ghost,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostNode {
    /// Plane index `j·nx + i`.
    pub node: usize,
    pub trace: BoundaryTrace,
}

/// Labels of one (x, y) node plane relative to D.
#[derive(Debug, Clone)]
pub struct GridClassification {
    pub grid: Grid,
    labels: Vec<NodeLabel>,
    on_boundary: Vec<bool>,
    regular: Vec<bool>,
    ghosts: Vec<GhostNode>,
    ghost_slot: Vec<usize>,
    unknown: Vec<usize>,
    n_interior: usize,
}

const NONE: usize = usize::MAX;

impl GridClassification {
    pub fn label(&self, i: usize, j: usize) -> NodeLabel {
        self.labels[self.grid.idx2(i, j)]
    }

    pub fn label_at(&self, p: usize) -> NodeLabel {
        self.labels[p]
    }

    /// Label with out-of-array indices reported as Exterior.
    pub fn label_signed(&self, i: isize, j: isize) -> NodeLabel {
        if i < 0 || j < 0 || i as usize >= self.grid.nx || j as usize >= self.grid.ny {
            NodeLabel::Exterior
        } else {
            self.label(i as usize, j as usize)
        }
    }

    pub fn is_interior(&self, p: usize) -> bool {
        self.labels[p] == NodeLabel::Interior
    }

    /// Interior node lying on ∂D (Dirichlet value imposed directly).
    pub fn is_on_boundary(&self, p: usize) -> bool {
        self.on_boundary[p]
    }

    /// Interior node whose four neighbours are all Interior.
    pub fn is_regular(&self, p: usize) -> bool {
        self.regular[p]
    }

    pub fn ghosts(&self) -> &[GhostNode] {
        &self.ghosts
    }

    pub fn ghost(&self, p: usize) -> Option<&GhostNode> {
        match self.ghost_slot[p] {
            NONE => None,
            s => Some(&self.ghosts[s]),
        }
    }

    pub fn ghost_position(&self, p: usize) -> Option<usize> {
        match self.ghost_slot[p] {
            NONE => None,
            s => Some(s),
        }
    }

    /// Unknown number of an Interior node, row-major.
    pub fn unknown(&self, p: usize) -> Option<usize> {
        match self.unknown[p] {
            NONE => None,
            u => Some(u),
        }
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn count(&self, label: NodeLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Plane indices of interior nodes in unknown order.
    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.labels.len()).filter(|&p| self.is_interior(p))
    }

    /// Classification from an explicit interior mask, without ghost data.
    /// Useful for synthetic stencil geometries.
    pub fn from_interior_mask(grid: Grid, interior: &[bool]) -> Self {
        assert_eq!(interior.len(), grid.plane_len());
        let labels = interior
            .iter()
            .map(|&i| {
                if i {
                    NodeLabel::Interior
                } else {
                    NodeLabel::Exterior
                }
            })
            .collect();
        Self::finish(grid, labels, vec![false; grid.plane_len()], Vec::new())
    }

    fn finish(
        grid: Grid,
        labels: Vec<NodeLabel>,
        on_boundary: Vec<bool>,
        ghosts: Vec<GhostNode>,
    ) -> Self {
        let n = grid.plane_len();
        let mut ghost_slot = vec![NONE; n];
        for (s, g) in ghosts.iter().enumerate() {
            ghost_slot[g.node] = s;
        }
        let mut unknown = vec![NONE; n];
        let mut n_interior = 0;
        for p in 0..n {
            if labels[p] == NodeLabel::Interior {
                unknown[p] = n_interior;
                n_interior += 1;
            }
        }
        let mut c = GridClassification {
            grid,
            labels,
            on_boundary,
            regular: vec![false; n],
            ghosts,
            ghost_slot,
            unknown,
            n_interior,
        };
        c.regular = (0..n)
            .map(|p| {
                let (i, j) = grid.ij(p);
                let (i, j) = (i as isize, j as isize);
                c.labels[p] == NodeLabel::Interior
                    && [(1, 0), (-1, 0), (0, 1), (0, -1)]
                        .iter()
                        .all(|(di, dj)| c.label_signed(i + di, j + dj) == NodeLabel::Interior)
            })
            .collect();
        c
    }
}

/// Labels every node of the (x, y) plane of `grid` relative to `domain`.
pub fn classify(grid: &Grid, domain: &DomainSpec) -> Result<GridClassification> {
    let n = grid.plane_len();
    let flags: Vec<(bool, bool)> = (0..n)
        .into_par_iter()
        .map(|p| {
            let (i, j) = grid.ij(p);
            let x = grid.node(i, j);
            let on = domain.on_boundary(x);
            (on || domain.contains(x), on)
        })
        .collect();
    let interior = |i: isize, j: isize| {
        i >= 0
            && j >= 0
            && (i as usize) < grid.nx
            && (j as usize) < grid.ny
            && flags[grid.idx2(i as usize, j as usize)].0
    };
    let ghost_nodes: Vec<usize> = (0..n)
        .filter(|&p| {
            let (i, j) = grid.ij(p);
            let (i, j) = (i as isize, j as isize);
            !flags[p].0
                && [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .any(|(di, dj)| interior(i + di, j + dj))
        })
        .collect();
    let ghosts = ghost_nodes
        .par_iter()
        .map(|&p| {
            let (i, j) = grid.ij(p);
            domain
                .boundary_trace(grid.node(i, j))
                .map(|trace| GhostNode { node: p, trace })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut labels: Vec<NodeLabel> = flags
        .iter()
        .map(|&(inside, _)| {
            if inside {
                NodeLabel::Interior
            } else {
                NodeLabel::Exterior
            }
        })
        .collect();
    for g in &ghosts {
        labels[g.node] = NodeLabel::Ghost;
    }
    let on_boundary = flags.iter().map(|&(_, on)| on).collect();
    Ok(GridClassification::finish(
        *grid,
        labels,
        on_boundary,
        ghosts,
    ))
}
