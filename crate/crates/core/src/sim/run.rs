use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    sample_initial, single_particle_field, single_particle_potential, write_outputs, CaseConfig,
    CaseKind,
};
use crate::diagnostics::{adiabatic, energy, DiagnosticsRecord, Energy};
use crate::error::{Error, Result};
use crate::pic::{ParticleState, ShapeSpec, Transfer};
use crate::poisson::{FieldState, PoissonSolver};
use crate::pusher::{self, Analytic, ElectricField, FieldSampler, MagneticProfile, PushOptions};
use crate::vec3::Vec3;

/// Grid field interpolated at particle positions; frozen for a whole step.
pub struct GridElectric<'a> {
    pub transfer: &'a Transfer,
    pub e: &'a [Vec3],
}

impl ElectricField for GridElectric<'_> {
    fn eval(&self, _t: f64, x: Vec3) -> Result<Vec3> {
        Ok(self.transfer.interpolate(self.e, x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
    pub e_perp: f64,
}

/// Charge density after deposit and background subtraction.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoSnapshot {
    pub step: usize,
    pub t: f64,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<RhoSnapshot>,
    pub trajectory: Vec<TrajectoryRow>,
    pub steps: usize,
    pub n_initial: usize,
    pub n_final: usize,
    /// Particles removed after leaving the cross-section, cumulative.
    pub removed: usize,
    /// Largest relative Krylov residual over all solves.
    pub max_residual: f64,
}

fn push_options(cfg: &CaseConfig) -> PushOptions {
    PushOptions {
        stage_times: cfg.stage_times,
        ..PushOptions::default()
    }
}

/// Runs a case to `t_final` without writing files.
pub fn run(cfg: &CaseConfig) -> Result<RunSummary> {
    match cfg.case {
        CaseKind::SingleParticle => run_single(cfg),
        CaseKind::Diocotron | CaseKind::DShape => run_pic(cfg),
    }
}

pub fn run_and_write(cfg: &CaseConfig) -> Result<RunSummary> {
    let summary = run(cfg)?;
    write_outputs(&summary, cfg)?;
    Ok(summary)
}

fn stamp(step: usize, t: f64) -> impl FnOnce(Error) -> Error {
    move |e| Error::Step {
        step,
        t,
        source: Box::new(e),
    }
}

fn run_single(cfg: &CaseConfig) -> Result<RunSummary> {
    let magnetic = cfg.magnetic();
    let electric = Analytic(single_particle_field);
    let sampler = FieldSampler::new(&electric, magnetic.as_ref(), cfg.eps);
    let opts = push_options(cfg);
    let n = cfg.n_steps();
    let mut p = ParticleState::new(cfg.x0, cfg.v0, 1.0);
    let mut out = RunSummary {
        steps: n,
        n_initial: 1,
        ..RunSummary::default()
    };
    for step in 0..=n {
        let t = step as f64 * cfg.dt;
        out.trajectory.push(TrajectoryRow {
            t,
            x: p.x,
            v: p.v,
            e_perp: p.e_perp,
        });
        if step % cfg.diag_interval == 0 || step == n {
            out.records.push(single_record(&p, magnetic.as_ref(), t));
        }
        if step == n {
            break;
        }
        p = pusher::step(cfg.scheme, &p, t, cfg.dt, &sampler, opts).map_err(stamp(step, t))?;
        p.x.z = p.x.z.rem_euclid(cfg.lz);
    }
    out.n_final = 1;
    Ok(out)
}

fn single_record(p: &ParticleState, magnetic: &dyn MagneticProfile, t: f64) -> DiagnosticsRecord {
    let kinetic_aug = p.w * (p.e_perp + 0.5 * p.v.z * p.v.z);
    let potential = p.w * single_particle_potential(p.x);
    DiagnosticsRecord {
        t,
        energy: Energy {
            kinetic_aug,
            kinetic_raw: p.w * 0.5 * p.v.dot(p.v),
            potential,
            total: kinetic_aug + potential,
        },
        mu: adiabatic(std::slice::from_ref(p), magnetic, t),
        charge_lost: 0.0,
    }
}

fn run_pic(cfg: &CaseConfig) -> Result<RunSummary> {
    let domain = cfg.domain();
    let grid = crate::grid::Grid::covering(&domain, cfg.nx, cfg.ny, cfg.nz);
    let solver = PoissonSolver::new(grid, &domain)?;
    let transfer = Transfer::new(solver.classification(), ShapeSpec::new(cfg.shape_order)?);
    let magnetic = cfg.magnetic();
    let opts = push_options(cfg);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut particles = sample_initial(cfg, &mut rng)?;
    let q0: f64 = particles.iter().map(|p| p.w).sum();
    let n = cfg.n_steps();
    let mut out = RunSummary {
        steps: n,
        n_initial: particles.len(),
        ..RunSummary::default()
    };
    let mut removed_weight = 0.0;
    let mut field = FieldState::zeros(grid);
    let interior: Vec<usize> = solver.classification().interior_nodes().collect();

    for step in 0..=n {
        let t = step as f64 * cfg.dt;
        field.rho.iter_mut().for_each(|r| *r = 0.0);
        let dep = transfer.deposit(&particles, &mut field.rho);
        if cfg.rho0 != 0.0 {
            for k in 0..grid.nz {
                for &p in &interior {
                    field.rho[k * grid.plane_len() + p] -= cfg.rho0;
                }
            }
        }
        let rep = solver.solve(&mut field).map_err(stamp(step, t))?;
        out.max_residual = out.max_residual.max(rep.max_residual());

        if step % cfg.diag_interval == 0 || step == n {
            out.records.push(DiagnosticsRecord {
                t,
                energy: energy(&particles, &field),
                mu: adiabatic(&particles, magnetic.as_ref(), t),
                charge_lost: (removed_weight + dep.dropped) / q0,
            });
        }
        let snap_due = cfg.snapshot_interval > 0 && step % cfg.snapshot_interval == 0;
        if step == 0 || step == n || snap_due {
            out.snapshots.push(RhoSnapshot {
                step,
                t,
                rho: field.rho.clone(),
            });
        }
        if step == n {
            break;
        }

        let electric = GridElectric {
            transfer: &transfer,
            e: &field.e,
        };
        let sampler = FieldSampler::new(&electric, magnetic.as_ref(), cfg.eps);
        let pushed: Vec<Result<ParticleState>> = particles
            .par_iter()
            .map(|p| pusher::step(cfg.scheme, p, t, cfg.dt, &sampler, opts))
            .collect();
        let mut next = Vec::with_capacity(particles.len());
        for r in pushed {
            let mut p = r.map_err(stamp(step, t))?;
            if !domain.contains([p.x.x, p.x.y]) {
                out.removed += 1;
                removed_weight += p.w;
                continue;
            }
            p.x.z = p.x.z.rem_euclid(cfg.lz);
            next.push(p);
        }
        particles = next;
    }
    out.n_final = particles.len();
    Ok(out)
}
