//! Full runs: configuration, initial sampling, the deposit → solve → push
//! loop and output files.

mod config;
mod output;
mod run;
mod sampling;

pub use config::{
    find_key, key_table, parse_text, steps_for, BProfileKind, CaseConfig, CaseKind, ConfigBuilder,
    KeySpec, KEYS, SECTIONS,
};
pub use output::{meta_text, trajectory_csv, write_outputs, TRAJECTORY_HEADER};
pub use run::{run, run_and_write, GridElectric, RhoSnapshot, RunSummary, TrajectoryRow};
pub use sampling::{sample_initial, CaseDensity};

use std::f64::consts::{PI, TAU};

use crate::geometry::DomainSpec;
use crate::pusher::{InverseParabolic, MagneticProfile, SqrtRadial, Uniform};
use crate::vec3::Vec3;

impl CaseConfig {
    /// Cross-section of the run. The single-particle case uses a disk of
    /// `case.disk_radius` only for bookkeeping.
    pub fn domain(&self) -> DomainSpec {
        match self.case {
            CaseKind::SingleParticle | CaseKind::Diocotron => {
                DomainSpec::disk([0.0, 0.0], self.disk_radius, self.lz)
            }
            CaseKind::DShape => DomainSpec::dshape(self.dshape_center, self.dshape_r0, self.lz),
        }
    }

    pub fn magnetic(&self) -> Box<dyn MagneticProfile> {
        match self.b_profile {
            BProfileKind::Uniform => Box::new(Uniform(self.b_scale)),
            BProfileKind::InverseParabolic => Box::new(InverseParabolic {
                r_max: self.b_scale,
            }),
            BProfileKind::SqrtRadial => Box::new(SqrtRadial {
                r_max: self.b_scale,
            }),
        }
    }
}

/// External potential of the single-particle case, `20 r⊥ + cos(2πz)/2`.
pub fn single_particle_potential(x: Vec3) -> f64 {
    20.0 * x.norm_perp() + 0.5 * (TAU * x.z).cos()
}

/// `E = −∇φ` for [`single_particle_potential`].
pub fn single_particle_field(_t: f64, x: Vec3) -> Vec3 {
    let r = x.norm_perp();
    let radial = if r > 0.0 { -20.0 / r } else { 0.0 };
    Vec3::new(radial * x.x, radial * x.y, PI * (TAU * x.z).sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_particle_field_is_minus_gradient() {
        let x = Vec3::new(3.0, -1.5, 0.3);
        let h = 1e-6;
        let e = single_particle_field(0.0, x);
        for a in 0..3 {
            let mut d = [0.0; 3];
            d[a] = h;
            let d = Vec3::from(d);
            let g =
                (single_particle_potential(x + d) - single_particle_potential(x - d)) / (2.0 * h);
            assert!((e[a] + g).abs() < 1e-6, "axis {a}");
        }
    }

    #[test]
    fn profiles_follow_config() {
        let cfg = CaseConfig::defaults(CaseKind::SingleParticle);
        let b = cfg.magnetic();
        assert!((b.b(0.0, Vec3::new(5.0, 0.0, 0.0)) - 1.0 / 75.0).abs() < 1e-15);
        let cfg = CaseConfig::defaults(CaseKind::DShape);
        assert_eq!(cfg.magnetic().b0(), 1.0);
        assert!(cfg.domain().contains([1.5, -1.5]));
    }
}
