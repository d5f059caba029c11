//! Energies, the adiabatic variable and their relative variations.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pic::ParticleState;
use crate::poisson::FieldState;
use crate::pusher::MagneticProfile;

pub const CSV_HEADER: &str = "t,Ek_aug,Ek_raw,Ep,Et,mu,charge_lost";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    /// `Σ w (e⊥ + v∥²/2)`.
    pub kinetic_aug: f64,
    /// `Σ w ‖v‖²/2`.
    pub kinetic_raw: f64,
    /// `½ Σ ‖E‖² ΔV` over interior nodes.
    pub potential: f64,
    /// `kinetic_aug + potential`.
    pub total: f64,
}

/// Kinetic and field energy. `field.e` vanishes off the interior, so the
/// node sum runs over interior nodes only.
pub fn energy(particles: &[ParticleState], field: &FieldState) -> Energy {
    let kinetic_aug = particles
        .iter()
        .map(|p| p.w * (p.e_perp + 0.5 * p.v.z * p.v.z))
        .sum();
    let kinetic_raw = particles.iter().map(|p| p.w * 0.5 * p.v.dot(p.v)).sum();
    let potential = field_energy(field);
    Energy {
        kinetic_aug,
        kinetic_raw,
        potential,
        total: kinetic_aug + potential,
    }
}

pub fn field_energy(field: &FieldState) -> f64 {
    0.5 * field.grid.cell_volume() * field.e.iter().map(|e| e.dot(*e)).sum::<f64>()
}

/// `μ = Σ w e⊥ / b(x⊥)`.
pub fn adiabatic(particles: &[ParticleState], magnetic: &dyn MagneticProfile, t: f64) -> f64 {
    particles
        .iter()
        .map(|p| p.w * p.e_perp / magnetic.b(t, p.x))
        .sum()
}

/// `(q(tᵢ) − q(t₀)) / q(t₀)`.
pub fn relative_variation(series: &[f64]) -> Result<Vec<f64>> {
    let q0 = *series.first().ok_or(Error::ZeroBaseline)?;
    if q0 == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    Ok(series.iter().map(|q| (q - q0) / q0).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: Energy,
    pub mu: f64,
    /// Fraction of the initial charge not on the grid: removed particles
    /// plus deposition weight dropped off the interior.
    pub charge_lost: f64,
}

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        let e = &self.energy;
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t, e.kinetic_aug, e.kinetic_raw, e.potential, e.total, self.mu, self.charge_lost
        )
    }
}

pub fn to_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

pub fn write_csv(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    fs::write(path, to_csv(records)).map_err(|e| Error::io(path, e))
}
