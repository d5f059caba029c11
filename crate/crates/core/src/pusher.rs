//! Time integrators for the characteristics of the augmented system
//!
//! ```text
//! dx/dt = v,   dv/dt = H − b v^⊥/ε,   de⊥/dt = ⟨E⊥, v⊥⟩,
//! H = E − χ(e⊥, v⊥) ∇⊥ ln b
//! ```
//!
//! and of its drift-kinetic limit `dx/dt = U_gc`, `dv∥/dt = E∥`,
//! `de⊥/dt = ε e⊥ div(F⊥^⊥)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pic::ParticleState;
use crate::vec3::Vec3;

/// Electric field sampled at `(t, x)`.
pub trait ElectricField: Sync {
    fn eval(&self, t: f64, x: Vec3) -> Result<Vec3>;
}

/// Closure-backed analytic field.
pub struct Analytic<F>(pub F);

impl<F: Fn(f64, Vec3) -> Vec3 + Sync> ElectricField for Analytic<F> {
    fn eval(&self, t: f64, x: Vec3) -> Result<Vec3> {
        Ok((self.0)(t, x))
    }
}

/// Intensity `b(x⊥) ≥ b₀ > 0` of the external field `B = b e_z / ε`.
/// The time argument is carried for interface completeness; every profile
/// here is static.
pub trait MagneticProfile: Sync + fmt::Debug {
    fn b(&self, t: f64, x: Vec3) -> f64;
    /// Perpendicular gradient, zero z-component.
    fn grad_b(&self, t: f64, x: Vec3) -> Vec3;
    fn b0(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform(pub f64);

impl MagneticProfile for Uniform {
    fn b(&self, _t: f64, _x: Vec3) -> f64 {
        self.0
    }
    fn grad_b(&self, _t: f64, _x: Vec3) -> Vec3 {
        Vec3::ZERO
    }
    fn b0(&self) -> f64 {
        self.0
    }
}

/// `b = 1/(R² − r²)`, singular at `r = R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseParabolic {
    pub r_max: f64,
}

impl MagneticProfile for InverseParabolic {
    fn b(&self, _t: f64, x: Vec3) -> f64 {
        1.0 / (self.r_max * self.r_max - x.dot_perp(x))
    }
    fn grad_b(&self, t: f64, x: Vec3) -> Vec3 {
        let b = self.b(t, x);
        2.0 * b * b * x.perp()
    }
    fn b0(&self) -> f64 {
        1.0 / (self.r_max * self.r_max)
    }
}

/// `b = R/√(R² − r²)`, equal to 1 on the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtRadial {
    pub r_max: f64,
}

impl MagneticProfile for SqrtRadial {
    fn b(&self, _t: f64, x: Vec3) -> f64 {
        self.r_max / (self.r_max * self.r_max - x.dot_perp(x)).sqrt()
    }
    fn grad_b(&self, _t: f64, x: Vec3) -> Vec3 {
        let d = self.r_max * self.r_max - x.dot_perp(x);
        (self.r_max / (d * d.sqrt())) * x.perp()
    }
    fn b0(&self) -> f64 {
        1.0
    }
}

/// Field access for the pushers.
#[derive(Clone, Copy)]
pub struct FieldSampler<'a> {
    pub electric: &'a dyn ElectricField,
    pub magnetic: &'a dyn MagneticProfile,
    pub eps: f64,
}

impl<'a> FieldSampler<'a> {
    pub fn new(
        electric: &'a dyn ElectricField,
        magnetic: &'a dyn MagneticProfile,
        eps: f64,
    ) -> Self {
        assert!(eps > 0.0, "eps must be positive");
        FieldSampler {
            electric,
            magnetic,
            eps,
        }
    }

    pub fn e(&self, t: f64, x: Vec3) -> Result<Vec3> {
        self.electric.eval(t, x)
    }

    /// `(b, ∇⊥b)` with the lower bound checked.
    pub fn b(&self, t: f64, x: Vec3) -> Result<(f64, Vec3)> {
        let b = self.magnetic.b(t, x);
        let b0 = self.magnetic.b0();
        if !(b.is_finite() && b >= b0) {
            return Err(Error::FieldBound {
                x: x.x,
                y: x.y,
                b,
                b0,
            });
        }
        Ok((b, self.magnetic.grad_b(t, x)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Si1,
    Si2,
    Si3,
    Limit1,
    Limit2,
    Limit3,
    Rk4Ref,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 7] = [
        SchemeKind::Si1,
        SchemeKind::Si2,
        SchemeKind::Si3,
        SchemeKind::Limit1,
        SchemeKind::Limit2,
        SchemeKind::Limit3,
        SchemeKind::Rk4Ref,
    ];

    pub fn order(self) -> u8 {
        match self {
            SchemeKind::Si1 | SchemeKind::Limit1 => 1,
            SchemeKind::Si2 | SchemeKind::Limit2 => 2,
            SchemeKind::Si3 | SchemeKind::Limit3 => 3,
            SchemeKind::Rk4Ref => 4,
        }
    }

    pub fn is_limit(self) -> bool {
        matches!(
            self,
            SchemeKind::Limit1 | SchemeKind::Limit2 | SchemeKind::Limit3
        )
    }

    pub fn si(order: u8) -> Self {
        match order {
            1 => SchemeKind::Si1,
            2 => SchemeKind::Si2,
            3 => SchemeKind::Si3,
            _ => panic!("no semi-implicit scheme of order {order}"),
        }
    }

    pub fn limit(order: u8) -> Self {
        match order {
            1 => SchemeKind::Limit1,
            2 => SchemeKind::Limit2,
            3 => SchemeKind::Limit3,
            _ => panic!("no limit scheme of order {order}"),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Si1 => "SI1",
            SchemeKind::Si2 => "SI2",
            SchemeKind::Si3 => "SI3",
            SchemeKind::Limit1 => "LIMIT1",
            SchemeKind::Limit2 => "LIMIT2",
            SchemeKind::Limit3 => "LIMIT3",
            SchemeKind::Rk4Ref => "RK4REF",
        })
    }
}

impl FromStr for SchemeKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown scheme `{s}` (expected SI1..3, LIMIT1..3 or RK4REF)"))
    }
}

/// Diagonal coefficient of the two-stage SDIRK scheme: the smaller root of
/// `γ² − 2γ + 1/2`.
pub const SI2_GAMMA: f64 = 1.0 - FRAC_1_SQRT_2;
pub const SI3_ALPHA: f64 = 0.24169426078821;
pub const SI3_BETA: f64 = SI3_ALPHA / 4.0;
pub const SI3_ETA: f64 = 0.12915286960590;
pub const SI3_GAMMA: f64 = 0.5 - SI3_ALPHA - SI3_BETA - SI3_ETA;

/// Time argument of `b` in the last stage of the third-order schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StageTimes {
    /// `b` at `t + Δt` while `H` is sampled at `t + Δt/2`.
    #[default]
    Printed,
    /// `b` and `H` both at `t + Δt/2`.
    Uniform,
}

impl FromStr for StageTimes {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "printed" => Ok(StageTimes::Printed),
            "uniform" => Ok(StageTimes::Uniform),
            _ => Err(format!("expected `printed` or `uniform`, got `{s}`")),
        }
    }
}

impl fmt::Display for StageTimes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageTimes::Printed => "printed",
            StageTimes::Uniform => "uniform",
        })
    }
}

/// Whether H carries the χ correction. `Off` exists for diagnostics only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChiMode {
    #[default]
    Limiter,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PushOptions {
    pub stage_times: StageTimes,
    pub chi: ChiMode,
}

/// Drift-kinetic state `(x, e⊥, v∥)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcState {
    pub x: Vec3,
    pub e_perp: f64,
    pub v_par: f64,
}

impl From<&ParticleState> for GcState {
    fn from(p: &ParticleState) -> Self {
        GcState {
            x: p.x,
            e_perp: p.e_perp,
            v_par: p.v.z,
        }
    }
}

/// `χ(e⊥, v⊥) = e⊥/(e⊥ + q)·max(0, e⊥ − q)` with `q = ‖v⊥‖²/2`.
pub fn chi(e_perp: f64, v: Vec3) -> f64 {
    let q = 0.5 * v.dot_perp(v);
    let denom = e_perp + q;
    if denom == 0.0 {
        return 0.0;
    }
    e_perp / denom * (e_perp - q).max(0.0)
}

/// Solves `v + λ v^⊥ = rhs`; the z-component passes through.
pub fn rotation_solve(lambda: f64, rhs: Vec3) -> Vec3 {
    let d = 1.0 + lambda * lambda;
    Vec3::new(
        (rhs.x + lambda * rhs.y) / d,
        (rhs.y - lambda * rhs.x) / d,
        rhs.z,
    )
}

/// Field values at one stage point.
#[derive(Debug, Clone, Copy)]
struct Sample {
    e: Vec3,
    b: f64,
    grad_b: Vec3,
}

impl Sample {
    fn at(s: &FieldSampler, t_e: f64, t_b: f64, x: Vec3) -> Result<Sample> {
        let e = s.e(t_e, x)?;
        let (b, grad_b) = s.b(t_b, x)?;
        Ok(Sample { e, b, grad_b })
    }

    fn h(&self, v: Vec3, e_perp: f64, mode: ChiMode) -> Vec3 {
        match mode {
            ChiMode::Limiter => self.e - (chi(e_perp, v) / self.b) * self.grad_b.perp(),
            ChiMode::Off => self.e,
        }
    }

    /// Full stage force `H − b v^⊥/ε` for a stage velocity.
    fn force(&self, h: Vec3, v: Vec3, eps: f64) -> Vec3 {
        h - (self.b / eps) * v.rot()
    }

    fn u_gc(&self, e_perp: f64, v_par: f64, eps: f64) -> Vec3 {
        let w = (1.0 / self.b) * self.e.perp() - (e_perp / (self.b * self.b)) * self.grad_b.perp();
        Vec3::new(0.0, 0.0, v_par) - eps * w.rot()
    }

    fn div_f(&self) -> f64 {
        -(-self.e.y * self.grad_b.x + self.e.x * self.grad_b.y) / (self.b * self.b)
    }
}

/// `H = E − χ(e⊥, v⊥) ∇⊥ ln b`.
pub fn force_h(t: f64, x: Vec3, v: Vec3, e_perp: f64, s: &FieldSampler) -> Result<Vec3> {
    Ok(Sample::at(s, t, t, x)?.h(v, e_perp, ChiMode::Limiter))
}

/// Guiding-center velocity `v∥ e_z − ε(F⊥ − (e⊥/b²)∇⊥b)^⊥`, `F = E/b`.
pub fn u_gc(t: f64, x: Vec3, e_perp: f64, v_par: f64, s: &FieldSampler) -> Result<Vec3> {
    Ok(Sample::at(s, t, t, x)?.u_gc(e_perp, v_par, s.eps))
}

/// `div⊥(F⊥^⊥) = −b⁻²(−E_y ∂_x b + E_x ∂_y b)`.
pub fn div_f_perp_perp(t: f64, x: Vec3, s: &FieldSampler) -> Result<f64> {
    Ok(Sample::at(s, t, t, x)?.div_f())
}

fn finite(stage: usize, v: Vec3, e: f64) -> Result<()> {
    if v.is_finite() && e.is_finite() {
        Ok(())
    } else {
        Err(Error::StatePoisoned { stage })
    }
}

/// One stage of a semi-implicit step as it enters the final update:
/// `x += Δt·weight·v`, `e⊥ += Δt·weight·⟨E⊥, v⊥⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageRecord {
    pub weight: f64,
    pub e: Vec3,
    pub v: Vec3,
}

/// Semi-implicit step of order 1, 2 or 3.
pub fn step_si(
    order: u8,
    p: &ParticleState,
    t: f64,
    dt: f64,
    s: &FieldSampler,
    opts: PushOptions,
) -> Result<ParticleState> {
    step_si_traced(order, p, t, dt, s, opts).map(|r| r.0)
}

/// [`step_si`] together with the stage quadrature data.
pub fn step_si_traced(
    order: u8,
    p: &ParticleState,
    t: f64,
    dt: f64,
    s: &FieldSampler,
    opts: PushOptions,
) -> Result<(ParticleState, Vec<StageRecord>)> {
    let eps = s.eps;
    let (x, v, e) = (p.x, p.v, p.e_perp);
    let s1 = Sample::at(s, t, t, x)?;
    let h1 = s1.h(v, e, opts.chi);
    let (x_new, v_new, e_new, stages) = match order {
        1 => {
            let v1 = rotation_solve(dt * s1.b / eps, v + dt * h1);
            finite(1, v1, 0.0)?;
            (
                x + dt * v1,
                v1,
                e + dt * s1.e.dot_perp(v1),
                vec![StageRecord {
                    weight: 1.0,
                    e: s1.e,
                    v: v1,
                }],
            )
        }
        2 => {
            let g = SI2_GAMMA;
            let v1 = rotation_solve(g * dt * s1.b / eps, v + g * dt * h1);
            let f1 = s1.force(h1, v1, eps);
            finite(1, v1, 0.0)?;
            let c = dt / (2.0 * g);
            let (x1, e1, vh1) = (x + c * v1, e + c * s1.e.dot_perp(v1), v + c * f1);
            let th = t + c;
            let s2 = Sample::at(s, th, th, x1)?;
            let h2 = s2.h(vh1, e1, opts.chi);
            let v2 = rotation_solve(g * dt * s2.b / eps, v + dt * (1.0 - g) * f1 + g * dt * h2);
            finite(2, v2, e1)?;
            let stages = vec![
                StageRecord {
                    weight: 1.0 - g,
                    e: s1.e,
                    v: v1,
                },
                StageRecord {
                    weight: g,
                    e: s2.e,
                    v: v2,
                },
            ];
            (
                x + dt * ((1.0 - g) * v1 + g * v2),
                v2,
                e + dt * ((1.0 - g) * s1.e.dot_perp(v1) + g * s2.e.dot_perp(v2)),
                stages,
            )
        }
        3 => {
            let (a, be, et, ga) = (SI3_ALPHA, SI3_BETA, SI3_ETA, SI3_GAMMA);
            let lam1 = a * dt * s1.b / eps;
            let v1 = rotation_solve(lam1, v + a * dt * h1);
            let f1 = s1.force(h1, v1, eps);
            let v2 = rotation_solve(lam1, v - a * dt * f1 + a * dt * h1);
            let f2 = s1.force(h1, v2, eps);
            finite(2, v2, 0.0)?;

            let (x2, e2, vh2) = (x + dt * v2, e + dt * s1.e.dot_perp(v2), v + dt * f2);
            let s3 = Sample::at(s, t + dt, t + dt, x2)?;
            let h3 = s3.h(vh2, e2, opts.chi);
            let v3 = rotation_solve(a * dt * s3.b / eps, v + dt * (1.0 - a) * f2 + a * dt * h3);
            let f3 = s3.force(h3, v3, eps);
            finite(3, v3, e2)?;

            let q = dt / 4.0;
            let x3 = x + q * (v2 + v3);
            let e3 = e + q * (s1.e.dot_perp(v2) + s3.e.dot_perp(v3));
            let vh3 = v + q * (f2 + f3);
            let tb4 = match opts.stage_times {
                StageTimes::Printed => t + dt,
                StageTimes::Uniform => t + 0.5 * dt,
            };
            let s4 = Sample::at(s, t + 0.5 * dt, tb4, x3)?;
            let h4 = s4.h(vh3, e3, opts.chi);
            let v4 = rotation_solve(
                a * dt * s4.b / eps,
                v + dt * (be * f1 + et * f2 + ga * f3) + a * dt * h4,
            );
            finite(4, v4, e3)?;

            let w = 1.0 / 6.0;
            let stages = vec![
                StageRecord {
                    weight: w,
                    e: s1.e,
                    v: v2,
                },
                StageRecord {
                    weight: w,
                    e: s3.e,
                    v: v3,
                },
                StageRecord {
                    weight: 4.0 * w,
                    e: s4.e,
                    v: v4,
                },
            ];
            let f4 = s4.force(h4, v4, eps);
            (
                x + (dt * w) * (v2 + v3 + 4.0 * v4),
                v + (dt * w) * (f2 + f3 + 4.0 * f4),
                e + dt * w * (s1.e.dot_perp(v2) + s3.e.dot_perp(v3) + 4.0 * s4.e.dot_perp(v4)),
                stages,
            )
        }
        _ => panic!("semi-implicit order must be 1, 2 or 3, got {order}"),
    };
    finite(order as usize + 1, x_new + v_new, e_new)?;
    Ok((
        ParticleState {
            x: x_new,
            v: v_new,
            e_perp: e_new,
            w: p.w,
        },
        stages,
    ))
}

/// Drift-kinetic limit step of order 1, 2 or 3.
pub fn step_limit(
    order: u8,
    st: &GcState,
    t: f64,
    dt: f64,
    s: &FieldSampler,
    opts: PushOptions,
) -> Result<GcState> {
    let eps = s.eps;
    let GcState {
        x,
        e_perp: e,
        v_par: vp,
    } = *st;
    let s1 = Sample::at(s, t, t, x)?;
    let out = match order {
        1 => {
            let v1 = vp + dt * s1.e.z;
            GcState {
                x: x + dt * s1.u_gc(e, v1, eps),
                e_perp: e + dt * eps * e * s1.div_f(),
                v_par: v1,
            }
        }
        2 => {
            let g = SI2_GAMMA;
            let c = dt / (2.0 * g);
            let v1 = vp + g * dt * s1.e.z;
            let u1 = s1.u_gc(e, v1, eps);
            let d1 = s1.div_f();
            let (x1, e1) = (x + c * u1, e + c * eps * e * d1);
            finite(1, x1, e1)?;
            let s2 = Sample::at(s, t + c, t + c, x1)?;
            let v2 = vp + dt * ((1.0 - g) * s1.e.z + g * s2.e.z);
            GcState {
                x: x + dt * ((1.0 - g) * u1 + g * s2.u_gc(e1, v2, eps)),
                e_perp: e + dt * eps * ((1.0 - g) * e * d1 + g * e1 * s2.div_f()),
                v_par: v2,
            }
        }
        3 => {
            let (a, be, et, ga) = (SI3_ALPHA, SI3_BETA, SI3_ETA, SI3_GAMMA);
            let u2 = s1.u_gc(e, vp, eps);
            let d2 = s1.div_f();
            let (x2, e2) = (x + dt * u2, e + dt * eps * e * d2);
            finite(2, x2, e2)?;

            let s3 = Sample::at(s, t + dt, t + dt, x2)?;
            let v3 = vp + dt * ((1.0 - a) * s1.e.z + a * s3.e.z);
            let u3 = s3.u_gc(e2, v3, eps);
            let d3 = s3.div_f();
            let q = dt / 4.0;
            let (x3, e3) = (x + q * (u2 + u3), e + q * eps * (e * d2 + e2 * d3));
            finite(3, x3, e3)?;

            let tb4 = match opts.stage_times {
                StageTimes::Printed => t + dt,
                StageTimes::Uniform => t + 0.5 * dt,
            };
            let s4 = Sample::at(s, t + 0.5 * dt, tb4, x3)?;
            let v4 = vp + dt * ((be + et) * s1.e.z + ga * s3.e.z + a * s4.e.z);
            let u4 = s4.u_gc(e3, v4, eps);
            let w = dt / 6.0;
            GcState {
                x: x + w * (u2 + u3 + 4.0 * u4),
                e_perp: e + w * eps * (e * d2 + e2 * d3 + 4.0 * e3 * s4.div_f()),
                v_par: vp + w * (s1.e.z + s3.e.z + 4.0 * s4.e.z),
            }
        }
        _ => panic!("limit scheme order must be 1, 2 or 3, got {order}"),
    };
    finite(order as usize + 1, out.x, out.e_perp + out.v_par)?;
    Ok(out)
}

/// Classical RK4 on the original (non-augmented) characteristics.
pub fn step_rk4(p: &ParticleState, t: f64, dt: f64, s: &FieldSampler) -> Result<ParticleState> {
    let rhs = |t: f64, x: Vec3, v: Vec3| -> Result<(Vec3, Vec3)> {
        let e = s.e(t, x)?;
        let (b, _) = s.b(t, x)?;
        Ok((v, e - (b / s.eps) * v.rot()))
    };
    let h = 0.5 * dt;
    let (k1x, k1v) = rhs(t, p.x, p.v)?;
    let (k2x, k2v) = rhs(t + h, p.x + h * k1x, p.v + h * k1v)?;
    let (k3x, k3v) = rhs(t + h, p.x + h * k2x, p.v + h * k2v)?;
    let (k4x, k4v) = rhs(t + dt, p.x + dt * k3x, p.v + dt * k3v)?;
    let c = dt / 6.0;
    let x = p.x + c * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    let v = p.v + c * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    let e = 0.5 * v.dot_perp(v);
    finite(4, x + v, e)?;
    Ok(ParticleState {
        x,
        v,
        e_perp: e,
        w: p.w,
    })
}

/// Advances a particle with any scheme. Limit schemes keep only
/// `(x, e⊥, v∥)` and leave `v⊥ = 0`.
pub fn step(
    scheme: SchemeKind,
    p: &ParticleState,
    t: f64,
    dt: f64,
    s: &FieldSampler,
    opts: PushOptions,
) -> Result<ParticleState> {
    match scheme {
        SchemeKind::Si1 | SchemeKind::Si2 | SchemeKind::Si3 => {
            step_si(scheme.order(), p, t, dt, s, opts)
        }
        SchemeKind::Limit1 | SchemeKind::Limit2 | SchemeKind::Limit3 => {
            let g = step_limit(scheme.order(), &GcState::from(p), t, dt, s, opts)?;
            Ok(ParticleState {
                x: g.x,
                v: Vec3::new(0.0, 0.0, g.v_par),
                e_perp: g.e_perp,
                w: p.w,
            })
        }
        SchemeKind::Rk4Ref => step_rk4(p, t, dt, s),
    }
}
