//! Ghost-node closure: quadratic extrapolation along the inward normal from
//! two interior probe points, each interpolated from nearby interior nodes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{GridClassification, Point2};

/// Quadratic Lagrange weights on `s ∈ {0, h, 2h}` evaluated at `s_g`,
/// ordered `(w_p, w_h, w_2h)`.
pub fn ghost_weights(s_g: f64, h: f64) -> [f64; 3] {
    let h2 = h * h;
    [
        (s_g - h) * (s_g - 2.0 * h) / (2.0 * h2),
        -s_g * (s_g - 2.0 * h) / h2,
        s_g * (s_g - h) / (2.0 * h2),
    ]
}

/// Interpolation of a nodal field at one point from interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    /// Plane indices `j·nx + i`.
    pub nodes: Vec<usize>,
    pub weights: Vec<f64>,
    /// Polynomial degree reproduced: 2 (Q2), 1 (Q1) or 0.
    pub degree: u8,
}

impl Stencil {
    pub fn apply(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Lagrange weights on integer nodes `start, start+1, …` at `u`.
fn lagrange(start: isize, count: usize, u: f64) -> Vec<f64> {
    (0..count)
        .map(|a| {
            let xa = (start + a as isize) as f64;
            (0..count)
                .filter(|&b| b != a)
                .map(|b| {
                    let xb = (start + b as isize) as f64;
                    (u - xb) / (xa - xb)
                })
                .product()
        })
        .collect()
}

/// Lattice view with the dominant normal axis relabelled as "a" (the axis
/// indexing transverse lines) and the other as "b" (position along a line).
struct Lines<'c> {
    class: &'c GridClassification,
    a_is_y: bool,
}

impl Lines<'_> {
    fn interior(&self, line: isize, pos: isize) -> bool {
        let (i, j) = if self.a_is_y {
            (pos, line)
        } else {
            (line, pos)
        };
        self.class.label_signed(i, j) == crate::geometry::NodeLabel::Interior
    }

    fn node(&self, line: isize, pos: isize) -> usize {
        let (i, j) = if self.a_is_y {
            (pos, line)
        } else {
            (line, pos)
        };
        self.class.grid.idx2(i as usize, j as usize)
    }

    /// Start of the window of `width` consecutive interior nodes on `line`
    /// closest to `pb`.
    fn window(&self, line: isize, pb: f64, width: usize) -> Option<isize> {
        let half = (width as f64 - 1.0) / 2.0;
        let first = (pb - half).round() as isize;
        let mut starts: Vec<isize> = (first - 2..=first + 2).collect();
        starts.sort_by(|a, b| {
            let da = (pb - (*a as f64 + half)).abs();
            let db = (pb - (*b as f64 + half)).abs();
            da.total_cmp(&db).then(a.cmp(b))
        });
        starts
            .into_iter()
            .filter(|s| (pb - (*s as f64 + half)).abs() <= half + 1.0)
            .find(|&s| (0..width as isize).all(|o| self.interior(line, s + o)))
    }
}

/// Tensor Lagrange stencil at `target` built on grid lines transverse to
/// the dominant component of `normal`, falling back from Q2 to Q1 to the
/// nearest interior node.
pub fn interp_stencil(
    target: Point2,
    normal: Point2,
    class: &GridClassification,
) -> Result<Stencil> {
    let g = &class.grid;
    let u = (target[0] - g.x0) / g.dx;
    let w = (target[1] - g.y0) / g.dy;
    let a_is_y = normal[1].abs() >= normal[0].abs();
    let (ta, tb, na, nb, da, db) = if a_is_y {
        (w, u, normal[1], normal[0], g.dy, g.dx)
    } else {
        (u, w, normal[0], normal[1], g.dx, g.dy)
    };
    // shift of the normal line along b per unit step in a, in index units
    let slope = if na != 0.0 {
        (nb / na) * (da / db)
    } else {
        0.0
    };
    let inward: isize = if na >= 0.0 { 1 } else { -1 };
    let lines = Lines { class, a_is_y };

    let tensor = |first: isize, count: usize| -> Option<Stencil> {
        let mut nodes = Vec::with_capacity(count * count);
        let mut weights = Vec::with_capacity(count * count);
        let wa = lagrange(first, count, ta);
        for (q, &wq) in wa.iter().enumerate() {
            let l = first + q as isize;
            let pb = tb + (l as f64 - ta) * slope;
            let s = lines.window(l, pb, count)?;
            for (o, wb) in lagrange(s, count, tb).into_iter().enumerate() {
                nodes.push(lines.node(l, s + o as isize));
                weights.push(wq * wb);
            }
        }
        Some(Stencil {
            nodes,
            weights,
            degree: (count - 1) as u8,
        })
    };

    let m = ta.round() as isize;
    for shift in [0, inward, 2 * inward, -inward] {
        if let Some(s) = tensor(m - 1 + shift, 3) {
            return Ok(s);
        }
    }
    let f = ta.floor() as isize;
    for shift in [0, inward, -inward] {
        if let Some(s) = tensor(f + shift, 2) {
            return Ok(s);
        }
    }

    let (ci, cj) = (u.round() as isize, w.round() as isize);
    let mut best: Option<(f64, usize)> = None;
    for j in cj - 3..=cj + 3 {
        for i in ci - 3..=ci + 3 {
            if class.label_signed(i, j) != crate::geometry::NodeLabel::Interior {
                continue;
            }
            let p = g.idx2(i as usize, j as usize);
            let x = g.node(i as usize, j as usize);
            let d = (x[0] - target[0]).hypot(x[1] - target[1]);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, p));
            }
        }
    }
    match best {
        Some((_, p)) => Ok(Stencil {
            nodes: vec![p],
            weights: vec![1.0],
            degree: 0,
        }),
        None => Err(Error::NoInteriorNode {
            x: target[0],
            y: target[1],
        }),
    }
}

/// Closure of one ghost node: `φ_g = w_p·φ(x_p) + w_h·φ(x_h) + w_2h·φ(x_2h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostClosure {
    pub node: usize,
    pub weights: [f64; 3],
    pub probe_h: Stencil,
    pub probe_2h: Stencil,
}

impl GhostClosure {
    /// Interior-node combination `Σ c_ℓ φ_ℓ` (plane indices), duplicates merged.
    pub fn combination(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(18);
        let terms = self
            .probe_h
            .nodes
            .iter()
            .zip(&self.probe_h.weights)
            .map(|(&p, &w)| (p, self.weights[1] * w))
            .chain(
                self.probe_2h
                    .nodes
                    .iter()
                    .zip(&self.probe_2h.weights)
                    .map(|(&p, &w)| (p, self.weights[2] * w)),
            );
        for (p, c) in terms {
            match out.iter_mut().find(|(q, _)| *q == p) {
                Some(e) => e.1 += c,
                None => out.push((p, c)),
            }
        }
        out
    }

    /// Ghost value for nodal field `f` with boundary value `g`.
    pub fn value(&self, g: f64, f: impl Fn(usize) -> f64) -> f64 {
        self.weights[0] * g
            + self.weights[1] * self.probe_h.apply(&f)
            + self.weights[2] * self.probe_2h.apply(&f)
    }
}

/// Closures for every ghost node, in the classification's ghost order.
pub fn build_closures(class: &GridClassification) -> Result<Vec<GhostClosure>> {
    let h = class.grid.h();
    class
        .ghosts()
        .par_iter()
        .map(|gh| {
            let t = gh.trace;
            let probe = |s: f64| [t.x_p[0] + s * t.normal[0], t.x_p[1] + s * t.normal[1]];
            Ok(GhostClosure {
                node: gh.node,
                weights: ghost_weights(t.s_g, h),
                probe_h: interp_stencil(probe(h), t.normal, class)?,
                probe_2h: interp_stencil(probe(2.0 * h), t.normal, class)?,
            })
        })
        .collect()
}
