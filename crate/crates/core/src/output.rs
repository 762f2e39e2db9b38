//! CSV output of mass series and density snapshots, plus the readers used by
//! `compare`.
//!
//! Mass series: header `t,mass_mode1,mass_mode2,total`, one row per sample.
//! Snapshots: `x_C,p` rows for 1D modes and `x_A,x_B,p` rows over active
//! cells (B outer, A inner) for 2D modes. Numbers use `{:.14e}`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::integrate::{MassSeries, Snapshot};
use crate::model::{ModeId, ModeSpec, Scenario};

/// Which solver produced a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Pde,
    Mc,
}

impl Source {
    pub fn tag(self) -> &'static str {
        match self {
            Source::Pde => "pde",
            Source::Mc => "mc",
        }
    }
}

pub fn mass_file_name(source: Source) -> String {
    format!("mass_{}.csv", source.tag())
}

pub fn snapshot_file_name(source: Source, mode: ModeId, step: usize) -> String {
    format!("snap_{}_mode{}_step{:06}.csv", source.tag(), mode, step)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_mass_series(series: &MassSeries, path: &Path) -> Result<()> {
    if series.is_empty() {
        return Err(Error::invalid("series", "mass series has no samples"));
    }
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    let mut header = String::from("t");
    for id in &series.mode_ids {
        header.push_str(&format!(",mass_mode{id}"));
    }
    writeln!(w, "{header},total").map_err(io)?;
    for ((t, masses), total) in series.times.iter().zip(&series.masses).zip(&series.totals) {
        let mut row = format!("{t:.14e}");
        for m in masses {
            row.push_str(&format!(",{m:.14e}"));
        }
        writeln!(w, "{row},{total:.14e}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Write one mode's field as a snapshot CSV.
pub fn write_snapshot(mode: &ModeSpec, field: &[f64], path: &Path) -> Result<()> {
    let mesh = mode.mesh();
    if field.len() != mesh.n_cells() {
        return Err(Error::SizeMismatch {
            expected: mesh.n_cells(),
            actual: field.len(),
        });
    }
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    if mode.dim() == 1 {
        writeln!(w, "x_C,p").map_err(io)?;
        for c in mesh.active_cells() {
            writeln!(w, "{:.14e},{:.14e}", mesh.cell_center(c)[0], field[c]).map_err(io)?;
        }
    } else {
        writeln!(w, "x_A,x_B,p").map_err(io)?;
        // Cell index is j * n_a + i, so index order is B outer, A inner.
        for c in mesh.active_cells() {
            let [x, y] = mesh.cell_center(c);
            writeln!(w, "{x:.14e},{y:.14e},{:.14e}", field[c]).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Write the mass series and every snapshot of a run into `dir`.
pub fn write_outputs(
    scenario: &Scenario,
    series: &MassSeries,
    snapshots: &[Snapshot],
    dir: &Path,
    source: Source,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let path = dir.join(mass_file_name(source));
    write_mass_series(series, &path)?;
    written.push(path);
    for snap in snapshots {
        for (mode, field) in scenario.modes().iter().zip(&snap.fields) {
            let path = dir.join(snapshot_file_name(source, mode.id(), snap.step));
            write_snapshot(mode, field, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(path, k + 2, e.to_string()))?;
        if row.len() != header.len() {
            return Err(parse_err(path, k + 2, format!("expected {} columns", header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn read_mass_series(path: &Path) -> Result<MassSeries> {
    let (header, rows) = read_table(path)?;
    if header.len() < 2 || header[0] != "t" || header.last().map(String::as_str) != Some("total") {
        return Err(parse_err(path, 1, "expected `t,mass_mode<id>...,total`"));
    }
    let mode_ids = header[1..header.len() - 1]
        .iter()
        .map(|h| {
            h.strip_prefix("mass_mode")
                .and_then(|id| id.parse().ok())
                .map(ModeId)
                .ok_or_else(|| parse_err(path, 1, format!("bad column `{h}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = mode_ids.len();
    Ok(MassSeries {
        mode_ids,
        times: rows.iter().map(|r| r[0]).collect(),
        masses: rows.iter().map(|r| r[1..=n].to_vec()).collect(),
        totals: rows.iter().map(|r| r[n + 1]).collect(),
    })
}

/// Snapshot rows: coordinates (one or two) and density.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotTable {
    pub coords: Vec<Vec<f64>>,
    pub density: Vec<f64>,
}

impl SnapshotTable {
    /// Cell volume inferred from the smallest coordinate spacing per axis.
    pub fn cell_volume(&self) -> f64 {
        let dim = self.coords.first().map_or(0, Vec::len);
        (0..dim)
            .map(|k| {
                let mut xs: Vec<f64> = self.coords.iter().map(|c| c[k]).collect();
                xs.sort_by(f64::total_cmp);
                xs.windows(2)
                    .map(|w| w[1] - w[0])
                    .filter(|d| *d > 1e-12)
                    .fold(f64::INFINITY, f64::min)
            })
            .map(|d| if d.is_finite() { d } else { 1.0 })
            .product()
    }
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotTable> {
    let (header, rows) = read_table(path)?;
    if header.last().map(String::as_str) != Some("p") || !(2..=3).contains(&header.len()) {
        return Err(parse_err(path, 1, "expected `x_C,p` or `x_A,x_B,p`"));
    }
    let d = header.len() - 1;
    Ok(SnapshotTable {
        coords: rows.iter().map(|r| r[..d].to_vec()).collect(),
        density: rows.iter().map(|r| r[d]).collect(),
    })
}

/// Result of comparing a PDE output directory with an MC output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub mode_ids: Vec<ModeId>,
    /// Largest absolute mass difference per mode over all samples.
    pub max_mass_deviation: Vec<f64>,
    /// `(file name, L1 distance)` for every snapshot present in both.
    pub snapshot_l1: Vec<(String, f64)>,
}

impl CompareReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_mass_deviation.iter().copied().fold(0.0, f64::max)
    }
}

pub fn compare_dirs(pde: &Path, mc: &Path) -> Result<CompareReport> {
    let a = read_mass_series(&pde.join(mass_file_name(Source::Pde)))?;
    let b = read_mass_series(&mc.join(mass_file_name(Source::Mc)))?;
    if a.mode_ids != b.mode_ids {
        return Err(Error::Config(format!(
            "mode columns differ: {:?} vs {:?}",
            a.mode_ids, b.mode_ids
        )));
    }
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut dev = vec![0.0f64; a.mode_ids.len()];
    for (ra, rb) in a.masses.iter().zip(&b.masses) {
        for (k, (x, y)) in ra.iter().zip(rb).enumerate() {
            dev[k] = dev[k].max((x - y).abs());
        }
    }

    let mut names: Vec<String> = fs::read_dir(pde)
        .map_err(|e| Error::io(pde, e))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.starts_with("snap_pde_") && n.ends_with(".csv"))
        .collect();
    names.sort();
    let mut l1 = Vec::new();
    for name in names {
        let other = mc.join(name.replacen("snap_pde_", "snap_mc_", 1));
        if !other.exists() {
            continue;
        }
        let ta = read_snapshot(&pde.join(&name))?;
        let tb = read_snapshot(&other)?;
        if ta.coords != tb.coords {
            return Err(Error::Config(format!("snapshot grids differ for {name}")));
        }
        let vol = ta.cell_volume();
        let d: f64 = ta.density.iter().zip(&tb.density).map(|(x, y)| (x - y).abs()).sum::<f64>() * vol;
        l1.push((name.trim_start_matches("snap_pde_").to_string(), d));
    }
    Ok(CompareReport {
        mode_ids: a.mode_ids,
        max_mass_deviation: dev,
        snapshot_l1: l1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_series_has_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = MassSeries::new(vec![ModeId(1), ModeId(2)]);
        s.push(0.0, vec![1.0, 0.0]);
        let path = dir.path().join("m.csv");
        write_mass_series(&s, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "t,mass_mode1,mass_mode2,total");
        assert_eq!(read_mass_series(&path).unwrap(), s);
    }

    #[test]
    fn empty_series_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let s = MassSeries::new(vec![ModeId(1)]);
        assert!(write_mass_series(&s, &dir.path().join("m.csv")).is_err());
    }

    #[test]
    fn values_round_trip_to_fourteen_digits() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = MassSeries::new(vec![ModeId(1), ModeId(2)]);
        s.push(0.1, vec![0.123_456_789_012_345_67, 1e-300]);
        let path = dir.path().join("m.csv");
        write_mass_series(&s, &path).unwrap();
        let r = read_mass_series(&path).unwrap();
        assert!((r.masses[0][0] - s.masses[0][0]).abs() < 1e-15);
        assert_eq!(r.masses[0][1], 1e-300);
    }

    #[test]
    fn io_errors_name_the_path() {
        let s = {
            let mut s = MassSeries::new(vec![ModeId(1)]);
            s.push(0.0, vec![1.0]);
            s
        };
        let err = write_mass_series(&s, Path::new("/nonexistent/dir/m.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/m.csv"));
    }

    #[test]
    fn inferred_cell_volume() {
        let t = SnapshotTable {
            coords: vec![vec![0.05, 0.25], vec![0.15, 0.25], vec![0.05, 0.5]],
            density: vec![0.0; 3],
        };
        assert!((t.cell_volume() - 0.1 * 0.25).abs() < 1e-12);
    }
}
