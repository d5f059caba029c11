//! Per-mode five-point Helmholtz operators with ghost elimination.

use std::f64::consts::TAU;

use super::closure::GhostClosure;
use super::krylov::Csr;
use crate::geometry::{GridClassification, NodeLabel};

/// Operator of one z-mode on the interior unknowns. The boundary column
/// holds each row's coefficient of the Dirichlet value `g`, so the
/// right-hand side is `ρ̂ − boundary·g`.
#[derive(Debug, Clone)]
pub struct ModeOperator {
    pub k: usize,
    pub matrix: Csr,
    pub boundary: Vec<f64>,
}

/// Squared wavenumber `(2πk/L_z)²` added to the diagonal for mode `k`.
pub fn mode_shift(k: usize, lz: f64) -> f64 {
    let kappa = TAU * k as f64 / lz;
    kappa * kappa
}

pub fn assemble_mode(
    class: &GridClassification,
    closures: &[GhostClosure],
    k: usize,
) -> ModeOperator {
    let g = &class.grid;
    let (cx, cy) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let shift = mode_shift(k, g.lz);
    let mut rows = Vec::with_capacity(class.n_interior());
    let mut boundary = Vec::with_capacity(class.n_interior());
    for p in class.interior_nodes() {
        let u = class.unknown(p).expect("interior node has an unknown");
        if class.is_on_boundary(p) {
            rows.push(vec![(u, 1.0)]);
            boundary.push(-1.0);
            continue;
        }
        let (i, j) = g.ij(p);
        let mut row = vec![(u, 2.0 * cx + 2.0 * cy + shift)];
        let mut bcoef = 0.0;
        let neighbours = [
            (i + 1, j, cx),
            (i.wrapping_sub(1), j, cx),
            (i, j + 1, cy),
            (i, j.wrapping_sub(1), cy),
        ];
        for (ni, nj, c) in neighbours {
            let q = g.idx2(ni, nj);
            match class.label_at(q) {
                NodeLabel::Interior => row.push((class.unknown(q).unwrap(), -c)),
                NodeLabel::Ghost => {
                    let cl = &closures[class.ghost_position(q).unwrap()];
                    bcoef -= c * cl.weights[0];
                    for (l, w) in cl.combination() {
                        row.push((class.unknown(l).unwrap(), -c * w));
                    }
                }
                NodeLabel::Exterior => {
                    unreachable!("interior node next to a non-ghost exterior node")
                }
            }
        }
        rows.push(row);
        boundary.push(bcoef);
    }
    ModeOperator {
        k,
        matrix: Csr::from_rows(rows),
        boundary,
    }
}
