use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{CaseConfig, RhoSnapshot, RunSummary, TrajectoryRow};
use crate::diagnostics::write_csv;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::poisson::Snapshot;

pub const TRAJECTORY_HEADER: &str = "t,x,y,z,vx,vy,vz,eperp";

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = String::from(TRAJECTORY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t, r.x.x, r.x.y, r.x.z, r.v.x, r.v.y, r.v.z, r.e_perp
        );
    }
    s
}

/// Resolved config preceded by the version line; parses back with
/// [`CaseConfig::from_text`].
pub fn meta_text(cfg: &CaseConfig) -> String {
    format!("# {}\n{}", crate::version_string(), cfg.to_text())
}

fn snapshots(grid: &Grid, snap: &RhoSnapshot) -> (Snapshot, Snapshot) {
    let spacing = [grid.dx, grid.dy, grid.dz()];
    let plane = grid.plane_len();
    let mut avg = vec![0.0; plane];
    for slab in snap.rho.chunks(plane) {
        avg.iter_mut()
            .zip(slab)
            .for_each(|(a, r)| *a += r / grid.nz as f64);
    }
    (
        Snapshot {
            dims: [grid.nx, grid.ny, grid.nz],
            spacing,
            values: snap.rho.clone(),
        },
        Snapshot {
            dims: [grid.nx, grid.ny, 1],
            spacing,
            values: avg,
        },
    )
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `run.meta`, `diagnostics.csv`, and either `trajectory.csv` or the
/// density snapshots `rho_NNNNNN.txt` (all slabs) and `rho_avg_NNNNNN.txt`
/// (z-average) into `cfg.out_dir`.
pub fn write_outputs(summary: &RunSummary, cfg: &CaseConfig) -> Result<()> {
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("run.meta"), &meta_text(cfg))?;
    write_csv(&summary.records, &dir.join("diagnostics.csv"))?;
    if !summary.trajectory.is_empty() {
        write(
            &dir.join("trajectory.csv"),
            &trajectory_csv(&summary.trajectory),
        )?;
    }
    if !summary.snapshots.is_empty() {
        let grid = Grid::covering(&cfg.domain(), cfg.nx, cfg.ny, cfg.nz);
        for s in &summary.snapshots {
            let (full, avg) = snapshots(&grid, s);
            full.write(&dir.join(format!("rho_{:06}.txt", s.step)))?;
            avg.write(&dir.join(format!("rho_avg_{:06}.txt", s.step)))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_and_write, CaseKind};

    #[test]
    fn meta_round_trips() {
        for case in CaseKind::ALL {
            let mut cfg = CaseConfig::defaults(case);
            cfg.eps = 3.25e-7;
            cfg.x0.y = 0.1 + 0.2;
            assert_eq!(CaseConfig::from_text(&meta_text(&cfg)).unwrap(), cfg);
        }
    }

    #[test]
    fn single_particle_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = CaseConfig::defaults(CaseKind::SingleParticle);
        cfg.out_dir = dir.path().join("sp");
        cfg.t_final = 1.0;
        run_and_write(&cfg).unwrap();
        let traj = fs::read_to_string(cfg.out_dir.join("trajectory.csv")).unwrap();
        assert_eq!(traj.lines().count(), 1 + 11);
        assert_eq!(traj.lines().next(), Some(TRAJECTORY_HEADER));
        let meta = fs::read_to_string(cfg.out_dir.join("run.meta")).unwrap();
        assert!(meta.starts_with("# magpic-v"));
        assert_eq!(CaseConfig::from_text(&meta).unwrap(), cfg);
    }

    #[test]
    fn snapshot_blocks_match_nz() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = CaseConfig::defaults(CaseKind::Diocotron);
        cfg.out_dir = dir.path().to_path_buf();
        cfg.n_particles = 500;
        cfg.nx = 16;
        cfg.ny = 16;
        cfg.nz = 4;
        cfg.t_final = 0.2;
        run_and_write(&cfg).unwrap();
        let full = Snapshot::parse(&fs::read_to_string(dir.path().join("rho_000002.txt")).unwrap())
            .unwrap();
        assert_eq!(full.dims, [16, 16, 4]);
        let avg =
            Snapshot::parse(&fs::read_to_string(dir.path().join("rho_avg_000000.txt")).unwrap())
                .unwrap();
        assert_eq!(avg.dims[2], 1);
        let full0 =
            Snapshot::parse(&fs::read_to_string(dir.path().join("rho_000000.txt")).unwrap())
                .unwrap();
        let s0: f64 = full0.values.iter().sum::<f64>() / 4.0;
        let sa: f64 = avg.values.iter().sum();
        assert!((s0 - sa).abs() <= 1e-9 * s0.abs());
    }

    #[test]
    fn unwritable_dir_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let mut cfg = CaseConfig::defaults(CaseKind::SingleParticle);
        cfg.out_dir = blocker.join("sub");
        cfg.t_final = 0.1;
        let err = run_and_write(&cfg).unwrap_err().to_string();
        assert!(err.contains("sub"), "{err}");
    }
}
