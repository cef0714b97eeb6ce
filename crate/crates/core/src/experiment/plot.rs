use std::fs;
use std::path::Path;

use super::config::ExperimentKind;
use super::run::{csv_error, OutputFile, RunManifest};
use crate::error::{Error, Result};
use crate::stats;

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    if !path.is_file() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "run output missing"),
        ));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(
            rec.map_err(|e| csv_error(path, e))?
                .iter()
                .map(String::from)
                .collect(),
        );
    }
    Ok((header, rows))
}

struct Columns<'a> {
    header: &'a [String],
    path: &'a Path,
}

impl Columns<'_> {
    fn index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("{}: no column `{name}`", self.path.display())))
    }
}

fn parse<T: std::str::FromStr>(text: &str, path: &Path) -> Result<T> {
    text.parse()
        .map_err(|_| Error::Parse(format!("{}: bad value `{text}`", path.display())))
}

fn write_tsv(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut text = columns.join("\t");
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        text.push_str(&cells.join("\t"));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `(tau, censored)` pairs from an extinction-style CSV.
fn taus(header: &[String], rows: &[Vec<String>], path: &Path) -> Result<Vec<(f64, bool)>> {
    let cols = Columns { header, path };
    let (ti, ci) = (cols.index("tau")?, cols.index("censored")?);
    rows.iter()
        .map(|r| Ok((parse(&r[ti], path)?, parse(&r[ci], path)?)))
        .collect()
}

/// Survival curve at every uncensored time; censored samples count as alive.
fn survival_rows(samples: &[(f64, bool)]) -> Vec<Vec<f64>> {
    let total = samples.len() as f64;
    let mut times: Vec<f64> = samples.iter().filter(|s| !s.1).map(|s| s.0).collect();
    times.sort_by(f64::total_cmp);
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| vec![t, (total - (i + 1) as f64) / total])
        .collect()
}

/// Writes plain columnar files for external plotting from the outputs listed
/// in `manifest`, and returns their descriptions.
///
/// * `extinction`, `expo-test`: `survival.tsv` with `(t, survival)`.
/// * `expo-test`: `ks_cdf.tsv` with `(x, empirical_cdf, exp_cdf)` for `τ/mean`.
/// * `bstar`: `bstar_plateau.tsv` with `(n, quantile)` of `τ/n`.
/// * `coupling`: `discrepancy.tsv` with `(time, estimate)`.
///
/// Other experiments produce no plot data.
pub fn emit_plotdata(manifest: &RunManifest, out_dir: &Path) -> Result<Vec<OutputFile>> {
    let trials = manifest
        .output("trials")
        .ok_or_else(|| Error::Parse("manifest lists no per-trial output".into()))?;
    let csv_path = out_dir.join(&trials.path);
    let (header, rows) = read_csv(&csv_path)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, columns: &[&str], data: &[Vec<f64>]| -> Result<()> {
        write_tsv(&out_dir.join(name), columns, data)?;
        written.push(OutputFile {
            path: name.to_string(),
            role: "plot".into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
        });
        Ok(())
    };
    match manifest.experiment {
        ExperimentKind::Extinction | ExperimentKind::ExpoTest => {
            let samples = taus(&header, &rows, &csv_path)?;
            emit("survival.tsv", &["t", "survival"], &survival_rows(&samples))?;
            if manifest.experiment == ExperimentKind::ExpoTest {
                let times: Vec<f64> = samples.iter().filter(|s| !s.1).map(|s| s.0).collect();
                let mut data = Vec::new();
                if !times.is_empty() {
                    let mean = stats::mean(&times);
                    let scaled = stats::sorted(&times.iter().map(|t| t / mean).collect::<Vec<_>>());
                    let n = scaled.len() as f64;
                    for (i, &x) in scaled.iter().enumerate() {
                        data.push(vec![x, (i + 1) as f64 / n, 1.0 - (-x).exp()]);
                    }
                }
                emit("ks_cdf.tsv", &["x", "empirical_cdf", "exp_cdf"], &data)?;
            }
        }
        ExperimentKind::Bstar => {
            let cols = Columns {
                header: &header,
                path: &csv_path,
            };
            let ni = cols.index("n")?;
            let samples = taus(&header, &rows, &csv_path)?;
            let mut heights: Vec<usize> = Vec::new();
            for r in &rows {
                let n: usize = parse(&r[ni], &csv_path)?;
                if heights.last() != Some(&n) {
                    heights.push(n);
                }
            }
            let mut data = Vec::new();
            for n in heights {
                let scaled: Vec<f64> = rows
                    .iter()
                    .zip(&samples)
                    .filter(|(r, s)| r[ni] == n.to_string() && !s.1)
                    .map(|(_, s)| s.0 / n as f64)
                    .collect();
                if scaled.is_empty() {
                    continue;
                }
                let sorted = stats::sorted(&scaled);
                data.push(vec![
                    n as f64,
                    stats::quantile_sorted(&sorted, manifest.config.quantile),
                ]);
            }
            emit("bstar_plateau.tsv", &["n", "quantile"], &data)?;
        }
        ExperimentKind::Coupling => {
            let cols = Columns {
                header: &header,
                path: &csv_path,
            };
            let (ti, di) = (cols.index("time")?, cols.index("discrepant")?);
            let mut data: Vec<Vec<f64>> = Vec::new();
            for &t in &manifest.config.times {
                let at: Vec<bool> = rows
                    .iter()
                    .filter(|r| parse::<f64>(&r[ti], &csv_path).is_ok_and(|x| x == t))
                    .map(|r| parse(&r[di], &csv_path))
                    .collect::<Result<_>>()?;
                let frac = if at.is_empty() {
                    0.0
                } else {
                    at.iter().filter(|&&b| b).count() as f64 / at.len() as f64
                };
                data.push(vec![t, frac]);
            }
            emit("discrepancy.tsv", &["time", "estimate"], &data)?;
        }
        _ => {}
    }
    Ok(written)
}
