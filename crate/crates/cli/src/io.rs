//! CSV emission and ingestion. All floats are written with 17 significant
//! digits so identical runs produce identical bytes and round-trips are
//! lossless.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use qfp_core::grid::{PhaseGrid, WignerField};

use crate::config::{CliError, CliResult};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Short, stable time tag for file names ("0.5", "2", "12.5").
pub fn fmt_time(t: f64) -> String {
    let s = format!("{t}");
    s.replace('-', "m")
}

pub struct CsvWriter {
    file: std::io::BufWriter<fs::File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> CliResult<Self> {
        let file = fs::File::create(path)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
        let mut w = CsvWriter {
            file: std::io::BufWriter::new(file),
        };
        w.write_raw(&header.join(","))?;
        Ok(w)
    }

    pub fn write_row(&mut self, values: &[f64]) -> CliResult<()> {
        let line = values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",");
        self.write_raw(&line)
    }

    pub fn write_mixed(&mut self, strings: &[String]) -> CliResult<()> {
        self.write_raw(&strings.join(","))
    }

    fn write_raw(&mut self, line: &str) -> CliResult<()> {
        writeln!(self.file, "{line}").map_err(|e| CliError::Config(format!("write failed: {e}")))
    }
}

/// Emit a field as (x, xi, w) rows in node order.
pub fn write_field(dir: &Path, name: &str, field: &WignerField) -> CliResult<PathBuf> {
    let path = dir.join(name);
    let mut w = CsvWriter::create(&path, &["x", "xi", "w"])?;
    let grid = field.grid();
    for i in 0..grid.nx() {
        for j in 0..grid.nv() {
            w.write_row(&[grid.x(i), grid.v(j), field.at(i, j)])?;
        }
    }
    Ok(path)
}

/// Read a (x, xi, w) CSV back into a field; the rows must cover a full
/// uniform tensor grid.
pub fn read_field(path: &Path, time: f64) -> CliResult<WignerField> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut xs: Vec<f64> = Vec::new();
    let mut vs: Vec<f64> = Vec::new();
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            continue; // header
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(CliError::Config(format!(
                "{}:{}: expected 3 columns",
                path.display(),
                lineno + 1
            )));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("{}:{}: bad float", path.display(), lineno + 1)))
        };
        let (x, v, w) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !xs.iter().any(|a| *a == x) {
            xs.push(x);
        }
        if !vs.iter().any(|a| *a == v) {
            vs.push(v);
        }
        rows.push((x, v, w));
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (nx, nv) = (xs.len(), vs.len());
    if nx * nv != rows.len() {
        return Err(CliError::Config(format!(
            "{}: rows do not form a tensor grid ({} x {} != {})",
            path.display(),
            nx,
            nv,
            rows.len()
        )));
    }
    let lx = xs[nx - 1];
    let lv = vs[nv - 1];
    if (xs[0] + lx).abs() > 1e-9 * lx.abs().max(1.0) || (vs[0] + lv).abs() > 1e-9 * lv.abs().max(1.0)
    {
        return Err(CliError::Config(format!(
            "{}: grid must be symmetric about the origin",
            path.display()
        )));
    }
    let grid = PhaseGrid::new(nx, nv, lx, lv).map_err(CliError::from)?;
    let mut values = vec![f64::NAN; grid.len()];
    let hx = grid.hx();
    let hv = grid.hv();
    for (x, v, w) in rows {
        let i = ((x + lx) / hx).round() as usize;
        let j = ((v + lv) / hv).round() as usize;
        if (grid.x(i) - x).abs() > 1e-9 * hx || (grid.v(j) - v).abs() > 1e-9 * hv {
            return Err(CliError::Config(format!(
                "{}: nodes are not uniformly spaced",
                path.display()
            )));
        }
        values[grid.idx(i, j)] = w;
    }
    WignerField::from_values(grid, time, values).map_err(CliError::from)
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_manifest(dir: &Path, manifest: &serde_json::Value) -> CliResult<()> {
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Config(format!("manifest serialization failed: {e}")))?;
    fs::write(&path, text + "\n")
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn read_manifest(dir: &Path) -> CliResult<serde_json::Value> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))
}

/// Companion gnuplot script referencing a CSV; plotting stays external.
pub fn write_gnuplot_stub(dir: &Path, csv: &str, columns: &[(usize, &str)]) -> CliResult<()> {
    let stem = csv.trim_end_matches(".csv");
    let path = dir.join(format!("plot_{stem}.gp"));
    let mut lines = vec![
        "set datafile separator ','".to_string(),
        "set key autotitle columnhead".to_string(),
        format!("set title '{stem}'"),
    ];
    let plots: Vec<String> = columns
        .iter()
        .map(|(col, label)| format!("'{csv}' using 1:{col} with lines title '{label}'"))
        .collect();
    lines.push(format!("plot {}", plots.join(", \\\n     ")));
    lines.push("pause -1".to_string());
    fs::write(&path, lines.join("\n") + "\n")
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qfp_core::grid::GaussianSpec;

    #[test]
    fn field_roundtrip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let grid = PhaseGrid::new(16, 12, 3.0, 2.0).unwrap();
        let f = WignerField::gaussian_mixture(
            grid,
            0.0,
            &[GaussianSpec {
                weight: 1.0,
                center_x: 0.2,
                center_v: -0.1,
                sigma_x: 0.7,
                sigma_v: 0.5,
            }],
        );
        let path = write_field(dir.path(), "w_t0.csv", &f).unwrap();
        let back = read_field(&path, 0.0).unwrap();
        assert_eq!(back.grid(), f.grid());
        for (a, b) in back.values().iter().zip(f.values()) {
            assert_eq!(a, b, "17-digit round trip must be exact");
        }
    }

    #[test]
    fn float_format_is_17_significant_digits() {
        let s = fmt_f64(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        assert_eq!(fmt_time(0.5), "0.5");
        assert_eq!(fmt_time(2.0), "2");
    }
}
