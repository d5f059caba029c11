//! Initial particle loading by rejection sampling.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;

use super::{CaseConfig, CaseKind};
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Point2};
use crate::pic::ParticleState;
use crate::vec3::Vec3;

const MIN_ACCEPTANCE: f64 = 1e-4;

/// Initial density of a case with its sampling box and upper bound.
#[derive(Debug, Clone)]
pub struct CaseDensity {
    cfg: CaseConfig,
    domain: DomainSpec,
    pub lo: Point2,
    pub hi: Point2,
    pub n_max: f64,
}

impl CaseDensity {
    pub fn new(cfg: &CaseConfig) -> Result<Self> {
        let domain = cfg.domain();
        let (lo, hi, n_max) = match cfg.case {
            CaseKind::SingleParticle => {
                return Err(Error::config(
                    "run.case",
                    "the single-particle case has no density",
                ))
            }
            CaseKind::Diocotron => {
                let (bl, bh) = domain.bounding_box();
                let lo = [bl[0].max(-cfg.r2), bl[1].max(-cfg.r2)];
                let hi = [bh[0].min(cfg.r2), bh[1].min(cfg.r2)];
                (lo, hi, cfg.n0 * (1.0 + 6.0 * cfg.alpha))
            }
            CaseKind::DShape => {
                let (lo, hi) = domain.bounding_box();
                (
                    lo,
                    hi,
                    cfg.n0 * (1.0 + cfg.alpha) * 2.0 * gauss_norm(cfg.gauss_width),
                )
            }
        };
        Ok(CaseDensity {
            cfg: cfg.clone(),
            domain,
            lo,
            hi,
            n_max,
        })
    }

    /// Density at `x`, zero outside the cross-section.
    pub fn eval(&self, x: Vec3) -> f64 {
        let c = &self.cfg;
        if !self.domain.contains([x.x, x.y]) {
            return 0.0;
        }
        let axial = (TAU * c.kz * x.z / c.lz).cos();
        match c.case {
            CaseKind::SingleParticle => 0.0,
            CaseKind::Diocotron => {
                let r = x.norm_perp();
                if r < c.r1 || r > c.r2 {
                    return 0.0;
                }
                c.n0 * (1.0 + c.alpha * (x.y.atan2(x.x).cos() + 5.0 * axial))
            }
            CaseKind::DShape => {
                let [cx, cy] = c.gauss_center;
                let w2 = 2.0 * c.gauss_width * c.gauss_width;
                let g = |dx: f64, dy: f64| (-(dx * dx + dy * dy) / w2).exp();
                let pair = g(x.x - cx, x.y - cy) + g(x.x + cx, x.y + cy);
                c.n0 * (1.0 + c.alpha * axial) * gauss_norm(c.gauss_width) * pair
            }
        }
    }

    fn box_volume(&self) -> f64 {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1]) * self.cfg.lz
    }
}

/// Amplitude `(2π)^{3/2} / (8π² r0²)` of each Gaussian.
fn gauss_norm(r0: f64) -> f64 {
    (TAU).powf(1.5) / (8.0 * PI * PI * r0 * r0)
}

/// Loads the initial particles of a case. Positions follow the case density
/// inside the cross-section, velocities are standard normal, weights are
/// equal with `Σw` the Monte Carlo estimate of the total charge.
pub fn sample_initial<R: Rng>(cfg: &CaseConfig, rng: &mut R) -> Result<Vec<ParticleState>> {
    if cfg.case == CaseKind::SingleParticle {
        return Ok(vec![ParticleState::new(cfg.x0, cfg.v0, 1.0)]);
    }
    let density = CaseDensity::new(cfg)?;
    let n = cfg.n_particles;
    let mut positions = Vec::with_capacity(n);
    let mut trials: u64 = 0;
    while positions.len() < n {
        trials += 1;
        let x = Vec3::new(
            rng.gen_range(density.lo[0]..density.hi[0]),
            rng.gen_range(density.lo[1]..density.hi[1]),
            rng.gen_range(0.0..cfg.lz),
        );
        if rng.gen::<f64>() * density.n_max < density.eval(x) {
            positions.push(x);
        }
        if trials >= 10_000 && (positions.len() as f64) < MIN_ACCEPTANCE * trials as f64 {
            return Err(Error::RejectionStall {
                rate: positions.len() as f64 / trials as f64,
            });
        }
    }
    let w = density.n_max * density.box_volume() / trials as f64;
    Ok(positions
        .into_iter()
        .map(|x| {
            let v = Vec3::new(
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            );
            ParticleState::new(x, v, w)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(case: CaseKind, n: usize, seed: u64) -> (CaseConfig, Vec<ParticleState>) {
        let mut cfg = CaseConfig::defaults(case);
        cfg.n_particles = n;
        let ps = sample_initial(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        (cfg, ps)
    }

    #[test]
    fn support_and_energy_contract() {
        for case in [CaseKind::Diocotron, CaseKind::DShape] {
            let (cfg, ps) = sample(case, 20_000, 3);
            let dom = cfg.domain();
            assert_eq!(ps.len(), 20_000);
            for p in &ps {
                assert!(dom.contains([p.x.x, p.x.y]));
                assert!((0.0..cfg.lz).contains(&p.x.z));
                assert_eq!(p.e_perp, 0.5 * p.v.dot_perp(p.v));
                if case == CaseKind::Diocotron {
                    let r = p.x.norm_perp();
                    assert!(r >= cfg.r1 && r <= cfg.r2);
                }
            }
        }
    }

    #[test]
    fn maxwellian_moments() {
        let n = 100_000;
        let (_, ps) = sample(CaseKind::Diocotron, n, 11);
        let tol_m = 4.0 / (n as f64).sqrt();
        let tol_v = 8.0 / (n as f64).sqrt();
        for a in 0..3 {
            let m = ps.iter().map(|p| p.v[a]).sum::<f64>() / n as f64;
            let var = ps.iter().map(|p| (p.v[a] - m).powi(2)).sum::<f64>() / n as f64;
            assert!(m.abs() < tol_m, "axis {a}: mean {m}");
            assert!((var - 1.0).abs() < tol_v, "axis {a}: variance {var}");
        }
    }

    #[test]
    fn total_charge_matches_density_integral() {
        // ∫ over the annulus of n0(1 + α(cos θ + 5cos(2π kz z))) = n0 π (r2² − r1²) lz
        let (cfg, ps) = sample(CaseKind::Diocotron, 100_000, 5);
        let exact = cfg.n0 * PI * (cfg.r2 * cfg.r2 - cfg.r1 * cfg.r1) * cfg.lz;
        let q: f64 = ps.iter().map(|p| p.w).sum();
        assert!((q / exact - 1.0).abs() < 0.02, "{q} vs {exact}");
    }

    #[test]
    fn dshape_charge_is_two_gaussians() {
        // Both Gaussians lie well inside D, so the total is ≈ 2·(2π)^{3/2}/(8π²)·2π·n0·lz
        let (cfg, ps) = sample(CaseKind::DShape, 50_000, 9);
        let exact =
            2.0 * gauss_norm(cfg.gauss_width) * TAU * cfg.gauss_width.powi(2) * cfg.n0 * cfg.lz;
        let q: f64 = ps.iter().map(|p| p.w).sum();
        assert!((q / exact - 1.0).abs() < 0.03, "{q} vs {exact}");
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let (_, a) = sample(CaseKind::DShape, 2000, 42);
        let (_, b) = sample(CaseKind::DShape, 2000, 42);
        let (_, c) = sample(CaseKind::DShape, 2000, 43);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn empty_support_stalls() {
        let mut cfg = CaseConfig::defaults(CaseKind::Diocotron);
        cfg.r1 = 10.0;
        cfg.r2 = 11.0;
        let err = sample_initial(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::RejectionStall { .. }));
    }
}
