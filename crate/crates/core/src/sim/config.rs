//! Run configuration: a `[section]` / `key = value` text format backed by a
//! single key table that drives defaults, validation and help output.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pusher::{SchemeKind, StageTimes};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseKind {
    SingleParticle,
    Diocotron,
    DShape,
}

impl CaseKind {
    pub const ALL: [CaseKind; 3] = [
        CaseKind::SingleParticle,
        CaseKind::Diocotron,
        CaseKind::DShape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::SingleParticle => "single-particle",
            CaseKind::Diocotron => "diocotron",
            CaseKind::DShape => "dshape",
        }
    }

    fn column(self) -> usize {
        match self {
            CaseKind::SingleParticle => 0,
            CaseKind::Diocotron => 1,
            CaseKind::DShape => 2,
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        CaseKind::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| {
                format!("unknown case `{s}` (expected single-particle, diocotron or dshape)")
            })
    }
}

/// Magnetic intensity profile selected by `case.b_profile`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BProfileKind {
    /// `b = b_scale`.
    Uniform,
    /// `b = 1/(b_scale² − r²)`.
    InverseParabolic,
    /// `b = b_scale/√(b_scale² − r²)`.
    SqrtRadial,
}

impl fmt::Display for BProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BProfileKind::Uniform => "uniform",
            BProfileKind::InverseParabolic => "inverse-parabolic",
            BProfileKind::SqrtRadial => "sqrt-radial",
        })
    }
}

impl FromStr for BProfileKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "uniform" => Ok(BProfileKind::Uniform),
            "inverse-parabolic" => Ok(BProfileKind::InverseParabolic),
            "sqrt-radial" => Ok(BProfileKind::SqrtRadial),
            _ => Err(format!(
                "unknown profile `{s}` (expected uniform, inverse-parabolic or sqrt-radial)"
            )),
        }
    }
}

/// One configuration key with its per-case defaults
/// (single-particle, diocotron, dshape).
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub section: &'static str,
    pub name: &'static str,
    pub defaults: [&'static str; 3],
    pub help: &'static str,
}

impl KeySpec {
    pub fn path(&self) -> String {
        format!("{}.{}", self.section, self.name)
    }

    pub fn default_for(&self, case: CaseKind) -> &'static str {
        self.defaults[case.column()]
    }
}

pub const SECTIONS: [&str; 5] = ["run", "grid", "case", "scheme", "output"];

const fn key(
    section: &'static str,
    name: &'static str,
    defaults: [&'static str; 3],
    help: &'static str,
) -> KeySpec {
    KeySpec {
        section,
        name,
        defaults,
        help,
    }
}

pub const KEYS: &[KeySpec] = &[
    key(
        "run",
        "case",
        ["single-particle", "diocotron", "dshape"],
        "test case; fixed by the subcommand",
    ),
    key(
        "run",
        "scheme",
        ["SI3", "SI3", "SI3"],
        "SI1|SI2|SI3|LIMIT1|LIMIT2|LIMIT3|RK4REF",
    ),
    key(
        "run",
        "eps",
        ["0.1", "0.05", "0.01"],
        "stiffness parameter ε > 0",
    ),
    key("run", "dt", ["0.1", "0.1", "0.5"], "time step > 0"),
    key("run", "t_final", ["10", "40", "20"], "final time > 0"),
    key(
        "run",
        "n_particles",
        ["1", "100000", "100000"],
        "number of macro-particles (single-particle: 1)",
    ),
    key("run", "seed", ["1", "1", "1"], "64-bit RNG seed"),
    key("grid", "nx", ["64", "64", "64"], "nodes along x (>= 8)"),
    key("grid", "ny", ["64", "64", "96"], "nodes along y (>= 8)"),
    key(
        "grid",
        "nz",
        ["8", "8", "8"],
        "nodes along periodic z (>= 1)",
    ),
    key(
        "grid",
        "shape_order",
        ["1", "1", "1"],
        "B-spline order 1, 2 or 3",
    ),
    key(
        "case",
        "disk_radius",
        ["10", "9", "10"],
        "disk cross-section radius",
    ),
    key(
        "case",
        "r1",
        ["6", "6", "6"],
        "inner annulus radius (diocotron)",
    ),
    key(
        "case",
        "r2",
        ["7", "7", "7"],
        "outer annulus radius (diocotron)",
    ),
    key("case", "n0", ["4000", "4000", "5000"], "density amplitude"),
    key(
        "case",
        "alpha",
        ["0.001", "0.001", "0.001"],
        "perturbation amplitude",
    ),
    key(
        "case",
        "kz",
        ["3", "3", "1"],
        "axial mode number m in cos(2π m z / lz)",
    ),
    key("case", "lz", ["1", "1", "1"], "period in z"),
    key(
        "case",
        "rho0",
        ["0", "0", "0"],
        "neutralizing background density",
    ),
    key(
        "case",
        "x0",
        ["5,0,0", "5,0,0", "5,0,0"],
        "initial position (single-particle)",
    ),
    key(
        "case",
        "v0",
        ["4,3,2", "4,3,2", "4,3,2"],
        "initial velocity (single-particle)",
    ),
    key(
        "case",
        "b_profile",
        ["inverse-parabolic", "uniform", "sqrt-radial"],
        "uniform|inverse-parabolic|sqrt-radial",
    ),
    key(
        "case",
        "b_scale",
        ["10", "1", "20"],
        "uniform value, or the singular radius of the radial profiles",
    ),
    key("case", "dshape_r0", ["10", "10", "10"], "D-shape scale R0"),
    key(
        "case",
        "dshape_center",
        ["0,0", "0,0", "0,0"],
        "D-shape center",
    ),
    key(
        "case",
        "gauss_width",
        ["3", "3", "3"],
        "Gaussian width r0 (dshape)",
    ),
    key(
        "case",
        "gauss_center",
        ["1.5,-1.5", "1.5,-1.5", "1.5,-1.5"],
        "Gaussian centers ±x0 (dshape)",
    ),
    key(
        "scheme",
        "si3_stage_times",
        ["printed", "printed", "printed"],
        "printed|uniform: time argument of b in the last third-order stage",
    ),
    key("output", "dir", ["out", "out", "out"], "output directory"),
    key(
        "output",
        "diag_interval",
        ["1", "1", "1"],
        "steps between diagnostics rows (>= 1)",
    ),
    key(
        "output",
        "snapshot_interval",
        ["0", "100", "100"],
        "steps between density snapshots (0: initial and final only)",
    ),
];

pub fn find_key(path: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.path() == path)
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub case: CaseKind,
    pub scheme: SchemeKind,
    pub eps: f64,
    pub dt: f64,
    pub t_final: f64,
    pub n_particles: usize,
    pub seed: u64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub shape_order: u8,
    pub disk_radius: f64,
    pub r1: f64,
    pub r2: f64,
    pub n0: f64,
    pub alpha: f64,
    pub kz: f64,
    pub lz: f64,
    pub rho0: f64,
    pub x0: Vec3,
    pub v0: Vec3,
    pub b_profile: BProfileKind,
    pub b_scale: f64,
    pub dshape_r0: f64,
    pub dshape_center: [f64; 2],
    pub gauss_width: f64,
    pub gauss_center: [f64; 2],
    pub stage_times: StageTimes,
    pub out_dir: PathBuf,
    pub diag_interval: usize,
    pub snapshot_interval: usize,
}

/// Raw string values keyed by `section.key`, layered defaults → file → overrides.
#[derive(Debug, Clone)]
pub struct ConfigBuilder {
    case: CaseKind,
    values: BTreeMap<String, String>,
}

impl ConfigBuilder {
    pub fn new(case: CaseKind) -> Self {
        let values = KEYS
            .iter()
            .map(|k| (k.path(), k.default_for(case).to_string()))
            .collect();
        ConfigBuilder { case, values }
    }

    pub fn case(&self) -> CaseKind {
        self.case
    }

    /// Sets one `section.key`; unknown keys are errors.
    pub fn set(&mut self, path: &str, value: &str) -> Result<()> {
        let path = path.trim();
        if find_key(path).is_none() {
            return Err(Error::config(path, "unknown key"));
        }
        if path == "run.case" && value.trim() != self.case.name() {
            return Err(Error::config(
                path,
                format!(
                    "`{}` conflicts with the selected case `{}`",
                    value.trim(),
                    self.case
                ),
            ));
        }
        self.values
            .insert(path.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies a `key = value` override string.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "expected section.key=value"))?;
        self.set(k, v)
    }

    /// Applies every assignment of a config text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (path, value) in parse_text(text)? {
            self.set(&path, &value)?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<CaseConfig> {
        let get = |path: &'static str| (path, self.values[path].as_str());
        let cfg = CaseConfig {
            case: self.case,
            scheme: parse_with(get("run.scheme"))?,
            eps: positive(get("run.eps"))?,
            dt: positive(get("run.dt"))?,
            t_final: positive(get("run.t_final"))?,
            n_particles: at_least(get("run.n_particles"), 1)?,
            seed: parse_with(get("run.seed"))?,
            nx: at_least(get("grid.nx"), 8)?,
            ny: at_least(get("grid.ny"), 8)?,
            nz: at_least(get("grid.nz"), 1)?,
            shape_order: {
                let (k, v) = get("grid.shape_order");
                let o: u8 = parse_with((k, v))?;
                crate::pic::ShapeSpec::new(o)?;
                o
            },
            disk_radius: positive(get("case.disk_radius"))?,
            r1: non_negative(get("case.r1"))?,
            r2: positive(get("case.r2"))?,
            n0: positive(get("case.n0"))?,
            alpha: non_negative(get("case.alpha"))?,
            kz: finite(get("case.kz"))?,
            lz: positive(get("case.lz"))?,
            rho0: finite(get("case.rho0"))?,
            x0: vec3(get("case.x0"))?,
            v0: vec3(get("case.v0"))?,
            b_profile: parse_with(get("case.b_profile"))?,
            b_scale: positive(get("case.b_scale"))?,
            dshape_r0: positive(get("case.dshape_r0"))?,
            dshape_center: vec2(get("case.dshape_center"))?,
            gauss_width: positive(get("case.gauss_width"))?,
            gauss_center: vec2(get("case.gauss_center"))?,
            stage_times: parse_with(get("scheme.si3_stage_times"))?,
            out_dir: PathBuf::from(get("output.dir").1),
            diag_interval: at_least(get("output.diag_interval"), 1)?,
            snapshot_interval: parse_with(get("output.snapshot_interval"))?,
        };
        if cfg.r1 >= cfg.r2 {
            return Err(Error::config(
                "case.r1",
                format!("must be below case.r2 = {}", cfg.r2),
            ));
        }
        if cfg.case == CaseKind::SingleParticle && cfg.n_particles != 1 {
            return Err(Error::config(
                "run.n_particles",
                "the single-particle case uses exactly one particle",
            ));
        }
        if cfg.b_profile != BProfileKind::Uniform
            && cfg.case == CaseKind::SingleParticle
            && cfg.x0.norm_perp() >= cfg.b_scale
        {
            return Err(Error::config(
                "case.x0",
                "initial position lies outside the magnetic profile support",
            ));
        }
        Ok(cfg)
    }
}

fn parse_with<T: FromStr>((key, v): (&str, &str)) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}")))
}

fn finite(kv: (&str, &str)) -> Result<f64> {
    let x: f64 = parse_with(kv)?;
    if !x.is_finite() {
        return Err(Error::config(kv.0, "must be finite"));
    }
    Ok(x)
}

fn positive(kv: (&str, &str)) -> Result<f64> {
    let x = finite(kv)?;
    if x <= 0.0 {
        return Err(Error::config(kv.0, format!("must be > 0, got {x}")));
    }
    Ok(x)
}

fn non_negative(kv: (&str, &str)) -> Result<f64> {
    let x = finite(kv)?;
    if x < 0.0 {
        return Err(Error::config(kv.0, format!("must be >= 0, got {x}")));
    }
    Ok(x)
}

fn at_least(kv: (&str, &str), min: usize) -> Result<usize> {
    let x: usize = parse_with(kv)?;
    if x < min {
        return Err(Error::config(kv.0, format!("must be >= {min}, got {x}")));
    }
    Ok(x)
}

fn floats(kv: (&str, &str), n: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = kv.1.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(Error::config(
            kv.0,
            format!("expected {n} comma-separated numbers, got `{}`", kv.1),
        ));
    }
    parts.into_iter().map(|p| finite((kv.0, p))).collect()
}

fn vec3(kv: (&str, &str)) -> Result<Vec3> {
    let v = floats(kv, 3)?;
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn vec2(kv: (&str, &str)) -> Result<[f64; 2]> {
    let v = floats(kv, 2)?;
    Ok([v[0], v[1]])
}

/// Splits a config text into `(section.key, value)` pairs.
pub fn parse_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut section: Option<String> = None;
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::config(
                    name,
                    format!("unknown section on line {}", n + 1),
                ));
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::config(line, format!("line {}: expected `key = value`", n + 1))
        })?;
        let sec = section.as_deref().ok_or_else(|| {
            Error::config(
                k.trim(),
                format!("line {}: key outside any [section]", n + 1),
            )
        })?;
        out.push((format!("{sec}.{}", k.trim()), v.trim().to_string()));
    }
    Ok(out)
}

impl CaseConfig {
    pub fn defaults(case: CaseKind) -> Self {
        ConfigBuilder::new(case)
            .build()
            .expect("built-in defaults are valid")
    }

    /// Parses a complete config text; `run.case` selects the defaults
    /// (single-particle when absent).
    pub fn from_text(text: &str) -> Result<Self> {
        let pairs = parse_text(text)?;
        let case = match pairs.iter().find(|(k, _)| k == "run.case") {
            Some((k, v)) => parse_with((k.as_str(), v.as_str()))?,
            None => CaseKind::SingleParticle,
        };
        let mut b = ConfigBuilder::new(case);
        for (k, v) in pairs {
            b.set(&k, &v)?;
        }
        b.build()
    }

    fn value(&self, path: &str) -> String {
        let v2 = |v: [f64; 2]| format!("{},{}", v[0], v[1]);
        let v3 = |v: Vec3| format!("{},{},{}", v.x, v.y, v.z);
        match path {
            "run.case" => self.case.to_string(),
            "run.scheme" => self.scheme.to_string(),
            "run.eps" => self.eps.to_string(),
            "run.dt" => self.dt.to_string(),
            "run.t_final" => self.t_final.to_string(),
            "run.n_particles" => self.n_particles.to_string(),
            "run.seed" => self.seed.to_string(),
            "grid.nx" => self.nx.to_string(),
            "grid.ny" => self.ny.to_string(),
            "grid.nz" => self.nz.to_string(),
            "grid.shape_order" => self.shape_order.to_string(),
            "case.disk_radius" => self.disk_radius.to_string(),
            "case.r1" => self.r1.to_string(),
            "case.r2" => self.r2.to_string(),
            "case.n0" => self.n0.to_string(),
            "case.alpha" => self.alpha.to_string(),
            "case.kz" => self.kz.to_string(),
            "case.lz" => self.lz.to_string(),
            "case.rho0" => self.rho0.to_string(),
            "case.x0" => v3(self.x0),
            "case.v0" => v3(self.v0),
            "case.b_profile" => self.b_profile.to_string(),
            "case.b_scale" => self.b_scale.to_string(),
            "case.dshape_r0" => self.dshape_r0.to_string(),
            "case.dshape_center" => v2(self.dshape_center),
            "case.gauss_width" => self.gauss_width.to_string(),
            "case.gauss_center" => v2(self.gauss_center),
            "scheme.si3_stage_times" => self.stage_times.to_string(),
            "output.dir" => self.out_dir.display().to_string(),
            "output.diag_interval" => self.diag_interval.to_string(),
            "output.snapshot_interval" => self.snapshot_interval.to_string(),
            other => unreachable!("key table and serializer disagree on `{other}`"),
        }
    }

    /// Serializes every key in table order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for sec in SECTIONS {
            s.push_str(&format!("[{sec}]\n"));
            for k in KEYS.iter().filter(|k| k.section == sec) {
                s.push_str(&format!("{} = {}\n", k.name, self.value(&k.path())));
            }
            s.push('\n');
        }
        s
    }

    /// Number of steps to reach `t_final`; a final partial step is rounded up.
    pub fn n_steps(&self) -> usize {
        steps_for(self.t_final, self.dt)
    }
}

pub fn steps_for(t_final: f64, dt: f64) -> usize {
    let r = t_final / dt;
    if (r - r.round()).abs() < 1e-9 * r.max(1.0) {
        r.round() as usize
    } else {
        r.ceil() as usize
    }
}

/// Key reference table for `--help` and docs.
pub fn key_table() -> String {
    let mut s = String::from("Config keys (defaults: single-particle | diocotron | dshape):\n");
    for k in KEYS {
        let d = &k.defaults;
        let defaults = if d[0] == d[1] && d[1] == d[2] {
            d[0].to_string()
        } else {
            format!("{} | {} | {}", d[0], d[1], d[2])
        };
        s.push_str(&format!("  {:<26} {:<44} {}\n", k.path(), defaults, k.help));
    }
    s
}
