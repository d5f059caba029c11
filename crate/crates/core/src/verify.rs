//! Convergence and consistency studies on the single-particle problem, and
//! manufactured-solution sweeps for the field solver.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::DomainSpec;
use crate::grid::Grid;
use crate::pic::ParticleState;
use crate::poisson::{FieldState, PoissonSolver, SolveReport};
use crate::pusher::{
    self, Analytic, FieldSampler, MagneticProfile, PushOptions, SchemeKind, StageTimes,
};
use crate::sim::{single_particle_field, steps_for, BProfileKind, CaseConfig, CaseKind};
use crate::vec3::Vec3;

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub param: f64,
    pub error: f64,
    /// Slope against the previous row.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub title: String,
    pub rows: Vec<StudyRow>,
    /// Least-squares slope over all rows.
    pub slope: f64,
}

impl StudyTable {
    pub fn new(title: impl Into<String>, data: &[(f64, f64)]) -> Self {
        let rows = data
            .iter()
            .enumerate()
            .map(|(i, &(param, error))| StudyRow {
                param,
                error,
                slope: (i > 0).then(|| {
                    let (p0, e0) = data[i - 1];
                    (error / e0).ln() / (param / p0).ln()
                }),
            })
            .collect();
        let (x, y): (Vec<f64>, Vec<f64>) = data.iter().copied().unzip();
        StudyTable {
            title: title.into(),
            rows,
            slope: log_log_slope(&x, &y),
        }
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("param,error,slope\n");
        for r in &self.rows {
            let slope = r.slope.map(|v| format!("{v:.4}")).unwrap_or_default();
            let _ = writeln!(s, "{:e},{:e},{}", r.param, r.error, slope);
        }
        s
    }

    /// `|slope − target| ≤ tol`.
    pub fn check(&self, target: f64, tol: f64) -> Verdict {
        let pass = (self.slope - target).abs() <= tol && self.slope.is_finite();
        Verdict::new(
            pass,
            format!(
                "{}: slope {:.3} (target {target} ± {tol})",
                self.title, self.slope
            ),
        )
    }

    pub fn check_at_least(&self, min: f64) -> Verdict {
        let pass = self.slope >= min;
        Verdict::new(
            pass,
            format!(
                "{}: slope {:.3} (required >= {min})",
                self.title, self.slope
            ),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub pass: bool,
    pub message: String,
}

impl Verdict {
    pub fn new(pass: bool, message: String) -> Self {
        Verdict { pass, message }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.message
        )
    }
}

/// Single-particle problem with the analytic electric field of the
/// single-particle case.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub x0: Vec3,
    pub v0: Vec3,
    pub e_perp0: f64,
    pub t_final: f64,
    pub b_profile: BProfileKind,
    pub b_scale: f64,
    pub stage_times: StageTimes,
}

impl Problem {
    pub fn from_config(cfg: &CaseConfig) -> Self {
        Problem {
            x0: cfg.x0,
            v0: cfg.v0,
            e_perp0: 0.5 * cfg.v0.dot_perp(cfg.v0),
            t_final: cfg.t_final,
            b_profile: cfg.b_profile,
            b_scale: cfg.b_scale,
            stage_times: cfg.stage_times,
        }
    }

    /// Default single-particle data.
    pub fn standard() -> Self {
        Problem::from_config(&CaseConfig::defaults(CaseKind::SingleParticle))
    }

    pub fn with_t_final(mut self, t_final: f64) -> Self {
        self.t_final = t_final;
        self
    }

    pub fn initial(&self) -> ParticleState {
        ParticleState {
            x: self.x0,
            v: self.v0,
            e_perp: self.e_perp0,
            w: 1.0,
        }
    }

    fn magnetic(&self) -> Box<dyn MagneticProfile> {
        let mut cfg = CaseConfig::defaults(CaseKind::SingleParticle);
        cfg.b_profile = self.b_profile;
        cfg.b_scale = self.b_scale;
        cfg.magnetic()
    }

    /// States at `t = 0, every·dt, 2·every·dt, …, t_final`.
    pub fn trajectory(
        &self,
        scheme: SchemeKind,
        eps: f64,
        dt: f64,
        every: usize,
    ) -> Result<Vec<ParticleState>> {
        let magnetic = self.magnetic();
        let electric = Analytic(single_particle_field);
        let s = FieldSampler::new(&electric, magnetic.as_ref(), eps);
        let opts = PushOptions {
            stage_times: self.stage_times,
            ..PushOptions::default()
        };
        let n = steps_for(self.t_final, dt);
        let mut p = self.initial();
        let mut out = vec![p];
        for i in 0..n {
            p = pusher::step(scheme, &p, i as f64 * dt, dt, &s, opts)?;
            if (i + 1) % every == 0 {
                out.push(p);
            }
        }
        Ok(out)
    }

    pub fn final_state(&self, scheme: SchemeKind, eps: f64, dt: f64) -> Result<ParticleState> {
        let n = steps_for(self.t_final, dt);
        Ok(*self
            .trajectory(scheme, eps, dt, n.max(1))?
            .last()
            .expect("initial state is always present"))
    }

    /// Scales of `(x, e⊥, v∥)`: initial magnitudes, or 1 where zero.
    fn scales(&self) -> [f64; 3] {
        let nz = |v: f64| if v == 0.0 { 1.0 } else { v.abs() };
        [nz(self.x0.norm()), nz(self.e_perp0), nz(self.v0.z)]
    }

    /// Euclidean distance over `(x, e⊥, v∥)` in units of the initial magnitudes.
    pub fn distance(&self, a: &ParticleState, b: &ParticleState) -> f64 {
        let [sx, se, sv] = self.scales();
        let d = a.x - b.x;
        let sq = d.dot(d) / (sx * sx)
            + ((a.e_perp - b.e_perp) / se).powi(2)
            + ((a.v.z - b.v.z) / sv).powi(2);
        sq.sqrt()
    }
}

/// Largest `‖x_a − x_b‖` over two trajectories sampled at the same times.
pub fn max_position_deviation(a: &[ParticleState], b: &[ParticleState]) -> f64 {
    assert_eq!(a.len(), b.len(), "trajectories sampled at different times");
    a.iter()
        .zip(b)
        .map(|(p, q)| (p.x - q.x).norm())
        .fold(0.0, f64::max)
}

/// Global error at `t_final` for each step size. Semi-implicit and RK4 runs
/// are compared with RK4 at `min(dt)/100`; limit schemes with LIMIT3 at
/// `min(dt)/100`.
pub fn convergence_study(
    scheme: SchemeKind,
    eps: f64,
    dts: &[f64],
    problem: &Problem,
) -> Result<StudyTable> {
    let dt_min = dts.iter().copied().fold(f64::INFINITY, f64::min);
    let ref_scheme = if scheme.is_limit() {
        SchemeKind::Limit3
    } else {
        SchemeKind::Rk4Ref
    };
    let reference = problem.final_state(ref_scheme, eps, dt_min / 100.0)?;
    let data: Vec<(f64, f64)> = dts
        .par_iter()
        .map(|&dt| {
            Ok((
                dt,
                problem.distance(&problem.final_state(scheme, eps, dt)?, &reference),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(StudyTable::new(
        format!("convergence {scheme} eps={eps:e}"),
        &data,
    ))
}

/// Largest deviation over `t ≤ t_final` between the semi-implicit scheme and
/// the limit scheme of the same order, with `v⊥⁰` scaled by ε and `e⊥⁰` kept.
pub fn epsilon_consistency_study(
    order: u8,
    dt: f64,
    eps_list: &[f64],
    problem: &Problem,
) -> Result<StudyTable> {
    let data: Vec<(f64, f64)> = eps_list
        .par_iter()
        .map(|&eps| {
            let mut p = problem.clone();
            p.v0 = Vec3::new(eps * problem.v0.x, eps * problem.v0.y, problem.v0.z);
            let si = p.trajectory(SchemeKind::si(order), eps, dt, 1)?;
            let lim = p.trajectory(SchemeKind::limit(order), eps, dt, 1)?;
            let dev = si
                .iter()
                .zip(&lim)
                .map(|(a, b)| p.distance(a, b))
                .fold(0.0, f64::max);
            Ok((eps, dev))
        })
        .collect::<Result<_>>()?;
    Ok(StudyTable::new(
        format!("eps-consistency order {order} dt={dt}"),
        &data,
    ))
}

/// `max_{n ≥ skip} ‖v⊥ⁿ‖` against ε.
pub fn vperp_scaling_study(
    scheme: SchemeKind,
    dt: f64,
    eps_list: &[f64],
    skip: usize,
    problem: &Problem,
) -> Result<StudyTable> {
    let data: Vec<(f64, f64)> = eps_list
        .par_iter()
        .map(|&eps| {
            let traj = problem.trajectory(scheme, eps, dt, 1)?;
            let m = traj
                .iter()
                .skip(skip)
                .map(|p| p.v.norm_perp())
                .fold(0.0, f64::max);
            Ok((eps, m))
        })
        .collect::<Result<_>>()?;
    Ok(StudyTable::new(
        format!("vperp scaling {scheme} dt={dt}"),
        &data,
    ))
}

/// Manufactured solutions on a disk of radius `R`, homogeneous on `r = R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manufactured {
    /// `φ = R² − r²`, `ρ = 4`.
    Quadratic,
    /// `φ = cos(πr²/(2R²)) cos(2πz/L)`.
    AxialMode,
}

impl Manufactured {
    fn phi(self, r_max: f64, lz: f64, x: Vec3) -> f64 {
        let r2 = x.dot_perp(x);
        match self {
            Manufactured::Quadratic => r_max * r_max - r2,
            Manufactured::AxialMode => {
                (PI * r2 / (2.0 * r_max * r_max)).cos() * (TAU * x.z / lz).cos()
            }
        }
    }

    /// `ρ = −Δφ`.
    fn rho(self, r_max: f64, lz: f64, x: Vec3) -> f64 {
        match self {
            Manufactured::Quadratic => 4.0,
            Manufactured::AxialMode => {
                let a = PI / (2.0 * r_max * r_max);
                let r2 = x.dot_perp(x);
                let kappa = TAU / lz;
                let (s, c) = (a * r2).sin_cos();
                (4.0 * a * s + 4.0 * a * a * r2 * c + kappa * kappa * c) * (kappa * x.z).cos()
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Manufactured::Quadratic => "quadratic",
            Manufactured::AxialMode => "axial-mode",
        }
    }
}

/// Max nodal error of φ on a disk, per resolution `n` (nodes per axis). The
/// table parameter is the mesh size, so the slope is the order in `h`.
pub fn poisson_study(
    solution: Manufactured,
    radius: f64,
    ns: &[usize],
    nz: usize,
) -> Result<StudyTable> {
    let lz = 1.0;
    let domain = DomainSpec::disk([0.0, 0.0], radius, lz);
    let mut data = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = Grid::covering(&domain, n, n, nz);
        let solver = PoissonSolver::new(grid, &domain)?;
        let mut field = FieldState::zeros(grid);
        let node = |q: usize| {
            let k = q / grid.plane_len();
            let (i, j) = grid.ij(q % grid.plane_len());
            Vec3::new(grid.x(i), grid.y(j), grid.z(k))
        };
        for (q, r) in field.rho.iter_mut().enumerate() {
            *r = solution.rho(radius, lz, node(q));
        }
        solver.solve(&mut field)?;
        let interior: Vec<usize> = solver.classification().interior_nodes().collect();
        let err = (0..nz)
            .flat_map(|k| interior.iter().map(move |&p| k * grid.plane_len() + p))
            .map(|q| (field.phi[q] - solution.phi(radius, lz, node(q))).abs())
            .fold(0.0, f64::max);
        data.push((grid.h(), err));
    }
    Ok(StudyTable::new(
        format!("poisson {} R={radius}", solution.name()),
        &data,
    ))
}

/// One solve on the default D-shaped cross-section with the two-Gaussian
/// density; returns the per-mode residuals.
pub fn dshape_solve(n: usize, nz: usize) -> Result<SolveReport> {
    let cfg = CaseConfig::defaults(CaseKind::DShape);
    let domain = cfg.domain();
    let grid = Grid::covering(&domain, n, n, nz);
    let solver = PoissonSolver::new(grid, &domain)?;
    let mut field = FieldState::zeros(grid);
    let [cx, cy] = cfg.gauss_center;
    let w2 = 2.0 * cfg.gauss_width * cfg.gauss_width;
    for k in 0..nz {
        let axial = 1.0 + 0.1 * (TAU * grid.z(k) / grid.lz).cos();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = (grid.x(i), grid.y(j));
                let g = (-((x - cx).powi(2) + (y - cy).powi(2)) / w2).exp()
                    + (-((x + cx).powi(2) + (y + cy).powi(2)) / w2).exp();
                field.rho[grid.idx3(i, j, k)] = axial * g;
            }
        }
    }
    solver.solve(&mut field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 0.5, 0.25, 0.125];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((log_log_slope(&x, &y) - 2.0).abs() < 1e-12);
        let t = StudyTable::new("t", &x.iter().copied().zip(y).collect::<Vec<_>>());
        assert!(t.rows[0].slope.is_none());
        assert!((t.rows[2].slope.unwrap() - 2.0).abs() < 1e-12);
        assert!(t.check(2.0, 0.1).pass);
        assert!(!t.check(3.0, 0.1).pass);
        let csv = t.to_csv();
        assert!(csv.starts_with("param,error,slope\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn distance_is_scaled() {
        let p = Problem::standard();
        let a = p.initial();
        let mut b = a;
        b.x.x += 5.0;
        assert!((p.distance(&a, &b) - 1.0).abs() < 1e-15);
        b = a;
        b.e_perp *= 2.0;
        assert!((p.distance(&a, &b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trajectory_sampling() {
        let p = Problem::standard().with_t_final(1.0);
        let t = p.trajectory(SchemeKind::Si1, 0.1, 0.01, 10).unwrap();
        assert_eq!(t.len(), 11);
        assert_eq!(t[0], p.initial());
    }

    #[test]
    fn first_order_convergence_at_unit_eps() {
        let p = Problem::standard().with_t_final(1.0);
        let t =
            convergence_study(SchemeKind::Si1, 1.0, &[0.004, 0.002, 0.001, 0.0005], &p).unwrap();
        assert!(t.check(1.0, 0.15).pass, "{}", t.to_csv());
    }

    #[test]
    fn quadratic_disk_solution_is_exact() {
        let t = poisson_study(Manufactured::Quadratic, 1.0, &[16, 24], 2).unwrap();
        assert!(t.errors().iter().all(|&e| e < 1e-8), "{}", t.to_csv());
    }

    #[test]
    fn manufactured_density_matches_laplacian() {
        let (r, lz, h) = (1.3, 0.7, 1e-4);
        let x = Vec3::new(0.4, -0.5, 0.2);
        let f = |x: Vec3| Manufactured::AxialMode.phi(r, lz, x);
        let mut lap = 0.0;
        for a in 0..3 {
            let mut d = [0.0; 3];
            d[a] = h;
            let d = Vec3::from(d);
            lap += (f(x + d) - 2.0 * f(x) + f(x - d)) / (h * h);
        }
        assert!((Manufactured::AxialMode.rho(r, lz, x) + lap).abs() < 1e-5);
    }
}
