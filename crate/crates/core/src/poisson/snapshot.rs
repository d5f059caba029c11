//! Plain-text grid dumps: a `# nx ny nz dx dy dz` header, then one block of
//! `ny` lines with `nx` values per z-slab, blocks separated by a blank line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    /// `idx3` layout: `(k·ny + j)·nx + i`.
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn to_text(&self) -> String {
        let [nx, ny, nz] = self.dims;
        let [dx, dy, dz] = self.spacing;
        let mut s = format!("# {nx} {ny} {nz} {dx:e} {dy:e} {dz:e}\n");
        for k in 0..nz {
            if k > 0 {
                s.push('\n');
            }
            for j in 0..ny {
                let row = &self.values[(k * ny + j) * nx..(k * ny + j + 1) * nx];
                let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
                s.push_str(&line.join(" "));
                s.push('\n');
            }
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(self.to_text().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn parse(text: &str) -> Option<Snapshot> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()?
            .strip_prefix('#')?
            .split_whitespace()
            .collect();
        if header.len() != 6 {
            return None;
        }
        let dims = [
            header[0].parse().ok()?,
            header[1].parse().ok()?,
            header[2].parse().ok()?,
        ];
        let spacing = [
            header[3].parse().ok()?,
            header[4].parse().ok()?,
            header[5].parse().ok()?,
        ];
        let body: Vec<&str> = lines.collect();
        let blocks = body
            .split(|l| l.trim().is_empty())
            .filter(|b| !b.is_empty())
            .count();
        if blocks != dims[2] {
            return None;
        }
        let values: Vec<f64> = body
            .iter()
            .flat_map(|l| l.split_whitespace())
            .map(|t| t.parse().ok())
            .collect::<Option<_>>()?;
        if values.len() != dims[0] * dims[1] * dims[2] {
            return None;
        }
        Some(Snapshot {
            dims,
            spacing,
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_block_count() {
        let s = Snapshot {
            dims: [3, 2, 4],
            spacing: [0.5, 0.25, 0.125],
            values: (0..24).map(|v| v as f64 * 0.1 - 1.0).collect(),
        };
        let text = s.to_text();
        assert!(text.starts_with("# 3 2 4 "));
        assert_eq!(text.split("\n\n").count(), 4);
        assert_eq!(Snapshot::parse(&text), Some(s));
    }
}
