//! Particle ↔ grid transfer with tensor-product B-spline shapes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::GridClassification;
use crate::grid::Grid;
use crate::vec3::Vec3;

/// One macro-particle of the augmented system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub x: Vec3,
    pub v: Vec3,
    /// Auxiliary perpendicular kinetic energy.
    pub e_perp: f64,
    /// Statistical weight in charge units.
    pub w: f64,
}

impl ParticleState {
    /// Fresh particle with `e⊥ = ‖v⊥‖²/2`.
    pub fn new(x: Vec3, v: Vec3, w: f64) -> Self {
        ParticleState {
            x,
            v,
            e_perp: 0.5 * v.dot_perp(v),
            w,
        }
    }
}

/// Centered B-spline of the given order at normalized offset `s`.
pub fn shape(order: u8, s: f64) -> f64 {
    let a = s.abs();
    match order {
        1 => (1.0 - a).max(0.0),
        2 => {
            if a <= 0.5 {
                0.75 - a * a
            } else if a < 1.5 {
                0.5 * (1.5 - a) * (1.5 - a)
            } else {
                0.0
            }
        }
        3 => {
            if a <= 1.0 {
                2.0 / 3.0 - a * a + 0.5 * a * a * a
            } else if a < 2.0 {
                (2.0 - a).powi(3) / 6.0
            } else {
                0.0
            }
        }
        _ => panic!("unsupported B-spline order {order}"),
    }
}

/// B-spline order with a support of `(order + 1)/2` cells on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeSpec(u8);

impl ShapeSpec {
    pub const LINEAR: ShapeSpec = ShapeSpec(1);

    pub fn new(order: u8) -> Result<Self> {
        match order {
            1..=3 => Ok(ShapeSpec(order)),
            _ => Err(Error::config(
                "grid.shape_order",
                format!("must be 1, 2 or 3, got {order}"),
            )),
        }
    }

    pub fn order(self) -> u8 {
        self.0
    }

    /// Half-width of the support in cells.
    pub fn support(self) -> f64 {
        (self.0 as f64 + 1.0) / 2.0
    }

    /// First node index and weights of the `order + 1` nodes touched by a
    /// particle at index coordinate `u`.
    fn axis(self, u: f64) -> (isize, [f64; 4]) {
        let first = (u - self.support()).floor() as isize + 1;
        let mut w = [0.0; 4];
        for (o, wo) in w.iter_mut().take(self.0 as usize + 1).enumerate() {
            *wo = shape(self.0, u - (first + o as isize) as f64);
        }
        (first, w)
    }
}

impl Default for ShapeSpec {
    fn default() -> Self {
        ShapeSpec::LINEAR
    }
}

/// Charge that reached active nodes versus charge dropped off the interior.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DepositReport {
    pub deposited: f64,
    pub dropped: f64,
}

/// Shape-weighted transfer between particles and the nodes of the interior
/// set; all other nodes are treated as zero (dropped on deposit, ignored on
/// interpolation), which keeps the two operations adjoint.
#[derive(Debug, Clone)]
pub struct Transfer {
    grid: Grid,
    active: Vec<bool>,
    shape: ShapeSpec,
}

impl Transfer {
    pub fn new(class: &GridClassification, shape: ShapeSpec) -> Self {
        let active = (0..class.grid.plane_len())
            .map(|p| class.is_interior(p))
            .collect();
        Transfer {
            grid: class.grid,
            active,
            shape,
        }
    }

    /// Every in-array node active.
    pub fn unbounded(grid: Grid, shape: ShapeSpec) -> Self {
        Transfer {
            grid,
            active: vec![true; grid.plane_len()],
            shape,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> ShapeSpec {
        self.shape
    }

    /// Calls `f(node, weight)` for each active node in the support of `x`;
    /// returns the total weight that fell on inactive nodes.
    fn visit(&self, x: Vec3, mut f: impl FnMut(usize, f64)) -> f64 {
        let g = &self.grid;
        let n = self.shape.order() as usize + 1;
        let (fi, wx) = self.shape.axis((x.x - g.x0) / g.dx);
        let (fj, wy) = self.shape.axis((x.y - g.y0) / g.dy);
        let (fk, wz) = self.shape.axis(x.z / g.dz());
        let nz = g.nz as isize;
        let mut lost = 0.0;
        for (b, &wb) in wy.iter().take(n).enumerate() {
            let j = fj + b as isize;
            for (a, &wa) in wx.iter().take(n).enumerate() {
                let i = fi + a as isize;
                let wab = wa * wb;
                let inside = i >= 0 && j >= 0 && (i as usize) < g.nx && (j as usize) < g.ny;
                let p = if inside {
                    g.idx2(i as usize, j as usize)
                } else {
                    0
                };
                if !inside || !self.active[p] {
                    lost += wab;
                    continue;
                }
                for (c, &wc) in wz.iter().take(n).enumerate() {
                    let k = (fk + c as isize).rem_euclid(nz) as usize;
                    f(k * g.plane_len() + p, wab * wc);
                }
            }
        }
        lost
    }

    fn deposit_serial(&self, particles: &[ParticleState], rho: &mut [f64]) -> DepositReport {
        let inv_vol = 1.0 / self.grid.cell_volume();
        let mut rep = DepositReport::default();
        for p in particles {
            let lost = self.visit(p.x, |q, s| rho[q] += p.w * s * inv_vol);
            rep.dropped += p.w * lost;
            rep.deposited += p.w * (1.0 - lost);
        }
        rep
    }

    /// Adds the charge density of `particles` into `rho`. Work is split into
    /// one chunk per worker thread and merged in chunk order, so the result
    /// is reproducible for a fixed worker count.
    pub fn deposit(&self, particles: &[ParticleState], rho: &mut [f64]) -> DepositReport {
        assert_eq!(rho.len(), self.grid.len());
        let workers = rayon::current_num_threads().max(1);
        if workers == 1 || particles.len() < 4096 {
            return self.deposit_serial(particles, rho);
        }
        let chunk = particles.len().div_ceil(workers);
        let partial: Vec<(Vec<f64>, DepositReport)> = particles
            .par_chunks(chunk)
            .map(|ps| {
                let mut local = vec![0.0; rho.len()];
                let rep = self.deposit_serial(ps, &mut local);
                (local, rep)
            })
            .collect();
        let mut rep = DepositReport::default();
        for (local, r) in partial {
            rho.iter_mut().zip(&local).for_each(|(a, b)| *a += b);
            rep.deposited += r.deposited;
            rep.dropped += r.dropped;
        }
        rep
    }

    pub fn interpolate(&self, field: &[Vec3], x: Vec3) -> Vec3 {
        let mut acc = Vec3::ZERO;
        self.visit(x, |q, s| acc += s * field[q]);
        acc
    }

    pub fn interpolate_scalar(&self, field: &[f64], x: Vec3) -> f64 {
        let mut acc = 0.0;
        self.visit(x, |q, s| acc += s * field[q]);
        acc
    }
}

/// Kinetic velocity `√(2e⊥)·v⊥/‖v⊥‖ + v∥ e_z`. The flag is set when `e⊥ > 0`
/// but `v⊥` carries no direction, in which case `e_x` is used.
pub fn reconstruct_velocity(v_perp: Vec3, e_perp: f64, v_par: f64) -> (Vec3, bool) {
    let n = v_perp.norm_perp();
    let speed = (2.0 * e_perp.max(0.0)).sqrt();
    if e_perp <= 0.0 {
        return (Vec3::new(0.0, 0.0, v_par), false);
    }
    if n < 1e-14 {
        return (Vec3::new(speed, 0.0, v_par), true);
    }
    (
        Vec3::new(speed * v_perp.x / n, speed * v_perp.y / n, v_par),
        false,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn box_grid() -> Grid {
        Grid::new(12, 10, 6, -1.0, -2.0, 0.5, 0.4, 3.0)
    }

    fn random_particles(n: usize, seed: u64) -> Vec<ParticleState> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x = Vec3::new(
                    rng.gen_range(0.6..3.4),
                    rng.gen_range(-0.8..1.2),
                    rng.gen_range(0.0..3.0),
                );
                ParticleState::new(x, Vec3::ZERO, rng.gen_range(0.5..1.5))
            })
            .collect()
    }

    #[test]
    fn shape_values() {
        assert_eq!(shape(1, 0.0), 1.0);
        assert_eq!(shape(1, 1.0), 0.0);
        assert_eq!(shape(1, -1.0), 0.0);
        assert_eq!(shape(2, 1.5), 0.0);
        assert!((shape(3, 0.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn partition_of_unity(s in -10.0..10.0f64, order in 1u8..=3) {
            let sum: f64 = (-15..=15).map(|j| shape(order, s - j as f64)).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn particle_on_node_and_cell_center() {
        let g = box_grid();
        let t = Transfer::unbounded(g, ShapeSpec::LINEAR);
        let vol = g.cell_volume();
        let mut rho = vec![0.0; g.len()];
        let x = Vec3::new(g.x(4), g.y(3), g.z(2));
        t.deposit(&[ParticleState::new(x, Vec3::ZERO, 2.0)], &mut rho);
        assert!((rho[g.idx3(4, 3, 2)] * vol - 2.0).abs() < 1e-14);
        assert_eq!(rho.iter().filter(|&&r| r * vol > 1e-14).count(), 1);

        let mut rho = vec![0.0; g.len()];
        let x = Vec3::new(g.x(4) + 0.5 * g.dx, g.y(3) + 0.5 * g.dy, g.z(2));
        t.deposit(&[ParticleState::new(x, Vec3::ZERO, 1.0)], &mut rho);
        for (i, j) in [(4, 3), (5, 3), (4, 4), (5, 4)] {
            assert!((rho[g.idx3(i, j, 2)] * vol - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn deposit_conserves_charge() {
        let g = box_grid();
        for order in 1..=3 {
            let t = Transfer::unbounded(g, ShapeSpec::new(order).unwrap());
            let ps = random_particles(10_000, 7);
            let mut rho = vec![0.0; g.len()];
            let rep = t.deposit(&ps, &mut rho);
            let total: f64 = ps.iter().map(|p| p.w).sum();
            let grid_total: f64 = rho.iter().sum::<f64>() * g.cell_volume();
            assert!((grid_total - total).abs() < 1e-12 * total);
            assert_eq!(rep.dropped, 0.0);
        }
    }

    #[test]
    fn deposit_independent_of_worker_count() {
        let g = box_grid();
        let t = Transfer::unbounded(g, ShapeSpec::new(2).unwrap());
        let ps = random_particles(20_000, 11);
        let run = |n| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap();
            pool.install(|| {
                let mut rho = vec![0.0; g.len()];
                t.deposit(&ps, &mut rho);
                rho
            })
        };
        let a = run(1);
        let b = run(4);
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
        assert_eq!(run(4), b);
    }

    #[test]
    fn adjointness() {
        let g = box_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gfield: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for order in 1..=3 {
            let t = Transfer::unbounded(g, ShapeSpec::new(order).unwrap());
            let ps = random_particles(1000, order as u64);
            let mut rho = vec![0.0; g.len()];
            t.deposit(&ps, &mut rho);
            let lhs: f64 = ps
                .iter()
                .map(|p| p.w * t.interpolate_scalar(&gfield, p.x))
                .sum();
            let rhs: f64 =
                gfield.iter().zip(&rho).map(|(a, b)| a * b).sum::<f64>() * g.cell_volume();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn interpolation_reproduces_uniform_linear_and_nodal_values() {
        let g = box_grid();
        let mut lin = vec![Vec3::ZERO; g.len()];
        for k in 0..g.nz {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    lin[g.idx3(i, j, k)] =
                        Vec3::new(1.0, -2.0, 0.5) + Vec3::new(3.0 * g.x(i), 0.0, 0.0);
                }
            }
        }
        for order in 1..=3 {
            let t = Transfer::unbounded(g, ShapeSpec::new(order).unwrap());
            let uni = vec![Vec3::new(1.0, -2.0, 0.5); g.len()];
            for p in random_particles(100, 5) {
                let e = t.interpolate(&uni, p.x);
                assert!((e - Vec3::new(1.0, -2.0, 0.5)).norm() < 1e-12);
                let l = t.interpolate(&lin, p.x);
                assert!((l.x - 1.0 - 3.0 * p.x.x).abs() < 1e-12);
            }
        }
        let t = Transfer::unbounded(g, ShapeSpec::LINEAR);
        let x = Vec3::new(g.x(5), g.y(4), g.z(1));
        assert_eq!(t.interpolate(&lin, x), lin[g.idx3(5, 4, 1)]);
    }

    #[test]
    fn z_translation_shifts_density() {
        let g = box_grid();
        let t = Transfer::unbounded(g, ShapeSpec::new(3).unwrap());
        let ps = random_particles(500, 9);
        let shifted: Vec<ParticleState> = ps
            .iter()
            .map(|p| {
                let mut q = *p;
                q.x.z = (q.x.z + g.dz()).rem_euclid(g.lz);
                q
            })
            .collect();
        let (mut a, mut b) = (vec![0.0; g.len()], vec![0.0; g.len()]);
        t.deposit(&ps, &mut a);
        t.deposit(&shifted, &mut b);
        let plane = g.plane_len();
        for k in 0..g.nz {
            for p in 0..plane {
                let kk = (k + 1) % g.nz;
                assert!((a[k * plane + p] - b[kk * plane + p]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn velocity_reconstruction() {
        let v = Vec3::new(0.3, -1.2, 0.7);
        let (w, flag) = reconstruct_velocity(v.perp(), 0.5 * v.dot_perp(v), v.z);
        assert!(!flag && (w - v).norm() < 1e-15);
        let (w, _) = reconstruct_velocity(Vec3::new(1.0, 0.0, 0.0), 2.0, 5.0);
        assert_eq!(w, Vec3::new(2.0, 0.0, 5.0));
        assert_eq!(
            reconstruct_velocity(Vec3::new(1.0, 1.0, 0.0), 0.0, 3.0).0,
            Vec3::new(0.0, 0.0, 3.0)
        );
        let (w, flag) = reconstruct_velocity(Vec3::ZERO, 2.0, 1.0);
        assert!(flag && w == Vec3::new(2.0, 0.0, 1.0));
    }
}
