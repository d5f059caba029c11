//! `−Δφ = ρ` on `D × [0, L_z)` with `φ = 0` on ∂D, periodic in z: a DFT along
//! z followed by one five-point Helmholtz solve per mode.

pub mod assemble;
pub mod closure;
pub mod krylov;
pub mod snapshot;

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::{classify, DomainSpec, GridClassification, NodeLabel};
use crate::grid::Grid;
use crate::vec3::Vec3;

pub use assemble::{assemble_mode, mode_shift, ModeOperator};
pub use closure::{build_closures, ghost_weights, interp_stencil, GhostClosure, Stencil};
pub use krylov::{bicgstab, Csr, KrylovReport};
pub use snapshot::Snapshot;

pub const SOLVER_TOL: f64 = 1e-10;

/// Nodal ρ, φ and E on the full 3D lattice (`Grid::idx3` layout).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    pub e: Vec<Vec3>,
}

impl FieldState {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        FieldState {
            grid,
            rho: vec![0.0; n],
            phi: vec![0.0; n],
            e: vec![Vec3::ZERO; n],
        }
    }
}

/// Per-mode convergence data of one solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    /// Largest relative residual over the real and imaginary solves of mode k.
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
}

impl SolveReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Spectral coefficients of one mode with its residual and iteration count.
type ModeSolution = (Vec<Complex<f64>>, f64, usize);

/// Geometry-dependent data prepared once and reused for every solve.
pub struct PoissonSolver {
    class: GridClassification,
    closures: Vec<GhostClosure>,
    /// Ghost value as a combination of interior unknowns, per ghost.
    ghost_combos: Vec<Vec<(usize, f64)>>,
    modes: Vec<ModeOperator>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver")
            .field("grid", &self.class.grid)
            .field("unknowns", &self.class.n_interior())
            .field("ghosts", &self.closures.len())
            .finish()
    }
}

impl PoissonSolver {
    pub fn new(grid: Grid, domain: &DomainSpec) -> Result<Self> {
        let class = classify(&grid, domain)?;
        Self::from_classification(class)
    }

    pub fn from_classification(class: GridClassification) -> Result<Self> {
        let closures = build_closures(&class)?;
        let ghost_combos = closures
            .iter()
            .map(|c| {
                c.combination()
                    .into_iter()
                    .map(|(p, w)| (class.unknown(p).unwrap(), w))
                    .collect()
            })
            .collect();
        let nz = class.grid.nz;
        let modes = (0..=nz / 2)
            .into_par_iter()
            .map(|k| assemble_mode(&class, &closures, k))
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(nz);
        let ifft = planner.plan_fft_inverse(nz);
        Ok(PoissonSolver {
            class,
            closures,
            ghost_combos,
            modes,
            fft,
            ifft,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.class.grid
    }

    pub fn classification(&self) -> &GridClassification {
        &self.class
    }

    pub fn closures(&self) -> &[GhostClosure] {
        &self.closures
    }

    pub fn mode(&self, k: usize) -> &ModeOperator {
        &self.modes[k]
    }

    /// Solves one real system of mode `k` on the interior unknowns.
    pub fn solve_mode(&self, k: usize, rhs: &[f64]) -> Result<(Vec<f64>, KrylovReport)> {
        let op = &self.modes[k];
        let mut x = vec![0.0; rhs.len()];
        let rep = bicgstab(&op.matrix, rhs, &mut x, SOLVER_TOL, 10 * rhs.len().max(1));
        if !rep.converged {
            return Err(Error::SolverDiverged {
                mode: k,
                residual: rep.residual,
                iterations: rep.iterations,
            });
        }
        Ok((x, rep))
    }

    /// Computes `field.phi` and `field.e` from `field.rho`. Only interior
    /// nodes of ρ are read; φ and E are zero off the interior.
    pub fn solve(&self, field: &mut FieldState) -> Result<SolveReport> {
        let g = self.class.grid;
        assert_eq!(field.grid, g, "field and solver grids differ");
        let nz = g.nz;
        let nk = nz / 2 + 1;
        let plane = g.plane_len();
        let interior: Vec<usize> = self.class.interior_nodes().collect();
        let nu = interior.len();

        // forward DFT along z of every interior column
        let spectra: Vec<Vec<Complex<f64>>> = interior
            .par_iter()
            .map(|&p| {
                let mut col: Vec<Complex<f64>> = (0..nz)
                    .map(|k| Complex::new(field.rho[k * plane + p], 0.0))
                    .collect();
                if self.class.is_on_boundary(p) {
                    col.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
                } else {
                    self.fft.process(&mut col);
                }
                col.truncate(nk);
                col
            })
            .collect();

        let solved: Vec<Result<ModeSolution>> = (0..nk)
            .into_par_iter()
            .map(|k| {
                let re: Vec<f64> = spectra.iter().map(|c| c[k].re).collect();
                let im: Vec<f64> = spectra.iter().map(|c| c[k].im).collect();
                let (xr, rr) = self.solve_mode(k, &re)?;
                let (xi, ri) = self.solve_mode(k, &im)?;
                let x = xr
                    .iter()
                    .zip(&xi)
                    .map(|(&a, &b)| Complex::new(a, b))
                    .collect();
                Ok((
                    x,
                    rr.residual.max(ri.residual),
                    rr.iterations + ri.iterations,
                ))
            })
            .collect();
        let mut report = SolveReport::default();
        let mut phat = Vec::with_capacity(nk);
        for s in solved {
            let (x, res, it) = s?;
            phat.push(x);
            report.residuals.push(res);
            report.iterations.push(it);
        }

        // inverse DFT with Hermitian completion
        let columns: Vec<Vec<f64>> = (0..nu)
            .into_par_iter()
            .map(|u| {
                let mut col = vec![Complex::new(0.0, 0.0); nz];
                for k in 0..nk {
                    col[k] = phat[k][u];
                    if k > 0 && nz - k != k {
                        col[nz - k] = phat[k][u].conj();
                    }
                }
                self.ifft.process(&mut col);
                col.iter().map(|c| c.re / nz as f64).collect()
            })
            .collect();

        field.phi.iter_mut().for_each(|v| *v = 0.0);
        for (u, &p) in interior.iter().enumerate() {
            for (k, &v) in columns[u].iter().enumerate() {
                field.phi[k * plane + p] = v;
            }
        }
        self.gradient(field, &columns);
        Ok(report)
    }

    /// Centered-difference `E = −∇φ` on interior nodes; neighbours outside D
    /// take their ghost-closure values.
    fn gradient(&self, field: &mut FieldState, columns: &[Vec<f64>]) {
        let g = self.class.grid;
        let nz = g.nz;
        let plane = g.plane_len();
        let dz = g.dz();
        // ghost values per ghost and z-plane (boundary value 0)
        let ghost_vals: Vec<Vec<f64>> = self
            .ghost_combos
            .iter()
            .map(|combo| {
                (0..nz)
                    .map(|k| combo.iter().map(|&(u, w)| w * columns[u][k]).sum())
                    .collect()
            })
            .collect();
        let phi = &field.phi;
        let value = |q: usize, k: usize| -> f64 {
            match self.class.label_at(q) {
                NodeLabel::Interior => phi[k * plane + q],
                NodeLabel::Ghost => ghost_vals[self.class.ghost_position(q).unwrap()][k],
                NodeLabel::Exterior => 0.0,
            }
        };
        let mut e = vec![Vec3::ZERO; g.len()];
        e.par_chunks_mut(plane).enumerate().for_each(|(k, slab)| {
            let (kp, km) = ((k + 1) % nz, (k + nz - 1) % nz);
            for p in self.class.interior_nodes() {
                let (i, j) = g.ij(p);
                let ex = -(value(g.idx2(i + 1, j), k) - value(g.idx2(i - 1, j), k)) / (2.0 * g.dx);
                let ey = -(value(g.idx2(i, j + 1), k) - value(g.idx2(i, j - 1), k)) / (2.0 * g.dy);
                let ez = if nz > 1 {
                    -(phi[kp * plane + p] - phi[km * plane + p]) / (2.0 * dz)
                } else {
                    0.0
                };
                slab[p] = Vec3::new(ex, ey, ez);
            }
        });
        field.e = e;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn disk_solver(n: usize, nz: usize, lz: f64) -> PoissonSolver {
        let d = DomainSpec::disk([0.0, 0.0], 1.0, lz);
        PoissonSolver::new(Grid::covering(&d, n, n, nz), &d).unwrap()
    }

    fn fill(field: &mut FieldState, f: impl Fn(f64, f64, f64) -> f64) {
        let g = field.grid;
        for k in 0..g.nz {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    field.rho[g.idx3(i, j, k)] = f(g.x(i), g.y(j), g.z(k));
                }
            }
        }
    }

    fn max_error(s: &PoissonSolver, field: &FieldState, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let g = field.grid;
        let mut err: f64 = 0.0;
        for p in s.classification().interior_nodes() {
            let (i, j) = g.ij(p);
            for k in 0..g.nz {
                err = err.max((field.phi[g.idx3(i, j, k)] - f(g.x(i), g.y(j), g.z(k))).abs());
            }
        }
        err
    }

    #[test]
    fn zero_density_gives_zero_field() {
        let s = disk_solver(21, 4, 1.0);
        let mut f = FieldState::zeros(*s.grid());
        s.solve(&mut f).unwrap();
        assert!(f.phi.iter().all(|&v| v == 0.0));
        assert!(f.e.iter().all(|&v| v == Vec3::ZERO));
    }

    #[test]
    fn uniform_density_on_unit_disk() {
        let exact = |x: f64, y: f64, _z: f64| 1.0 - x * x - y * y;
        let s = disk_solver(33, 2, 1.0);
        let mut f = FieldState::zeros(*s.grid());
        fill(&mut f, |_, _, _| 4.0);
        let rep = s.solve(&mut f).unwrap();
        assert!(rep.max_residual() <= SOLVER_TOL);
        // the Q2 closure reproduces quadratics, so only solver error remains
        assert!(max_error(&s, &f, exact) < 1e-8);
        // E = 2 x⊥ exactly for a quadratic potential
        let g = f.grid;
        let p = g.idx2(16, 20);
        let e = f.e[g.idx3(16, 20, 1)];
        let x = g.node(16, 20);
        assert!(s.classification().is_interior(p));
        assert!(
            (e.x - 2.0 * x[0]).abs() < 1e-7 && (e.y - 2.0 * x[1]).abs() < 1e-7 && e.z.abs() < 1e-9
        );
    }

    #[test]
    fn single_mode_density_gives_single_mode_potential() {
        let lz = 1.0;
        let s = disk_solver(25, 8, lz);
        let mut f = FieldState::zeros(*s.grid());
        fill(&mut f, |x, y, z| {
            (1.0 - x * x - y * y).max(0.0) * (TAU * 2.0 * z / lz).cos()
        });
        s.solve(&mut f).unwrap();
        let g = f.grid;
        let plane = g.plane_len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(g.nz);
        let (mut on, mut off) = (0.0, 0.0);
        for p in s.classification().interior_nodes() {
            let mut col: Vec<Complex<f64>> = (0..g.nz)
                .map(|k| Complex::new(f.phi[k * plane + p], 0.0))
                .collect();
            fft.process(&mut col);
            for (k, c) in col.iter().enumerate() {
                if k == 2 || k == g.nz - 2 {
                    on += c.norm_sqr();
                } else {
                    off += c.norm_sqr();
                }
            }
        }
        assert!(on > 0.0);
        assert!(off / on < 1e-12);
    }

    #[test]
    fn max_principle_smoke() {
        let s = disk_solver(29, 1, 1.0);
        let mut f = FieldState::zeros(*s.grid());
        fill(&mut f, |x, y, _| {
            (-10.0 * ((x - 0.3).powi(2) + y * y)).exp()
        });
        s.solve(&mut f).unwrap();
        let m = f.phi.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        for p in s.classification().interior_nodes() {
            assert!(f.phi[p] >= -1e-10 * m);
        }
    }

    #[test]
    fn dshape_modes_converge() {
        let d = DomainSpec::dshape([0.0, 0.0], 10.0, 1.0);
        let s = PoissonSolver::new(Grid::covering(&d, 40, 64, 4), &d).unwrap();
        let mut f = FieldState::zeros(*s.grid());
        fill(&mut f, |x, y, z| {
            (-(x * x + y * y) / 9.0).exp() * (1.0 + 0.3 * (TAU * z).cos())
        });
        let rep = s.solve(&mut f).unwrap();
        assert_eq!(rep.residuals.len(), 3);
        assert!(rep.residuals.iter().all(|&r| r <= SOLVER_TOL));
    }
}
