//! CSV rows, plot-ready `.dat` tables and the gnuplot script.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marker stored in `rel_err` when a run blew up.
pub const FAILED: &str = "failed";

/// One run of a sweep. Column order is fixed by field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    pub method: String,
    pub n: usize,
    pub tau: f64,
    pub kernel_param: f64,
    pub p: Option<f64>,
    #[serde(rename = "L_Q")]
    pub l_q: Option<usize>,
    #[serde(rename = "L_R")]
    pub l_r: Option<usize>,
    pub runtime_s: f64,
    /// Relative error, empty without a reference, or [`FAILED`].
    pub rel_err: String,
    pub mass_drift: Option<f64>,
    pub max_abs_final: Option<f64>,
    pub stability_advisory: String,
}

impl CsvRow {
    pub fn failed(&self) -> bool {
        self.rel_err == FAILED
    }

    pub fn rel_err_value(&self) -> Option<f64> {
        self.rel_err.parse().ok()
    }
}

pub const CSV_COLUMNS: [&str; 13] = [
    "experiment",
    "method",
    "n",
    "tau",
    "kernel_param",
    "p",
    "L_Q",
    "L_R",
    "runtime_s",
    "rel_err",
    "mass_drift",
    "max_abs_final",
    "stability_advisory",
];

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

pub fn emit_csv(rows: &[CsvRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to write".into()));
    }
    ensure_parent(path)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<CsvRow>, _>>()
        .map_err(|e| csv_err(path, e))
}

fn tag(x: f64) -> String {
    format!("{x}").replace('.', "p")
}

/// Writes one whitespace-separated table per `(experiment, n, tau)` with the
/// kernel parameter followed by one runtime column per method (`?` where a
/// method has no row), plus `<experiment>_runtimes.gp`. Returns written paths.
pub fn emit_plot_data(rows: &[CsvRow], dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to plot".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut methods: Vec<String> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }

    // (experiment, n, tau bits) -> kernel_param bits -> method -> runtime
    type Table = BTreeMap<u64, BTreeMap<String, f64>>;
    let mut groups: BTreeMap<(String, usize, u64), Table> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.experiment.clone(), r.n, r.tau.to_bits()))
            .or_default()
            .entry(r.kernel_param.to_bits())
            .or_default()
            .insert(r.method.clone(), r.runtime_s);
    }

    let mut written = Vec::new();
    let mut per_experiment: BTreeMap<String, Vec<(String, usize, f64)>> = BTreeMap::new();
    for ((exp, n, tau_bits), table) in &groups {
        let tau = f64::from_bits(*tau_bits);
        let name = format!("{exp}_n{n}_tau{}.dat", tag(tau));
        let path = dir.join(&name);
        let mut text = format!("# kernel_param {}\n", methods.join(" "));
        let mut params: Vec<f64> = table.keys().map(|b| f64::from_bits(*b)).collect();
        params.sort_by(f64::total_cmp);
        for param in params {
            let cols = &table[&param.to_bits()];
            text.push_str(&format!("{param}"));
            for m in &methods {
                match cols.get(m) {
                    Some(t) => text.push_str(&format!(" {t}")),
                    None => text.push_str(" ?"),
                }
            }
            text.push('\n');
        }
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        per_experiment
            .entry(exp.clone())
            .or_default()
            .push((name, *n, tau));
    }

    for (exp, files) in per_experiment {
        let path = dir.join(format!("{exp}_runtimes.gp"));
        let script = gnuplot_script(&exp, &files, &methods);
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(script.as_bytes())
            .map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn gnuplot_script(exp: &str, files: &[(String, usize, f64)], methods: &[String]) -> String {
    let cols = (files.len() as f64).sqrt().ceil().max(1.0) as usize;
    let rows = files.len().div_ceil(cols);
    let mut s = String::new();
    s.push_str("# execution time (s, log10 scale) versus kernel parameter\n");
    s.push_str(&format!(
        "set terminal pngcairo size {},{}\nset output '{exp}_runtimes.png'\n",
        420 * cols,
        320 * rows
    ));
    s.push_str("set datafile missing '?'\nset logscale y 10\nset format y '10^{%L}'\n");
    s.push_str("set xlabel 'kernel parameter'\nset ylabel 'seconds'\nset key top left\n");
    s.push_str(&format!("set multiplot layout {rows},{cols}\n"));
    for (name, n, tau) in files {
        s.push_str(&format!("set title 'n = {n}, tau = {tau}'\n"));
        let plots: Vec<String> = methods
            .iter()
            .enumerate()
            .map(|(k, m)| format!("'{name}' using 1:{} with linespoints title '{m}'", k + 2))
            .collect();
        s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    }
    s.push_str("unset multiplot\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, param: f64, runtime: f64) -> CsvRow {
        CsvRow {
            experiment: "exp1".into(),
            method: method.into(),
            n: 50,
            tau: 0.01,
            kernel_param: param,
            p: None,
            l_q: Some(500),
            l_r: None,
            runtime_s: runtime,
            rel_err: format!("{}", 1.0 / 3.0 * 1e-3),
            mass_drift: Some(1.2345678901234567e-14),
            max_abs_final: Some(std::f64::consts::PI),
            stability_advisory: "satisfied".into(),
        }
    }

    #[test]
    fn single_row_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        emit_csv(&[row("ptw", 0.1, 0.5)], &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.split_terminator('\n').collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert!(!text.contains('\r'));
        assert!(emit_csv(&[], &path).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        let mut rows = vec![row("ptw", 0.02, 1.0), row("rr", 0.3, 2.0)];
        rows[1].p = Some(3.0);
        rows[1].l_r = Some(4);
        rows[1].rel_err = FAILED.into();
        rows[1].mass_drift = None;
        emit_csv(&rows, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back, rows);
        assert!(back[1].failed());
        assert_eq!(back[0].rel_err_value(), Some(1.0 / 3.0 * 1e-3));
    }

    #[test]
    fn plot_tables() {
        let dir = tempfile::tempdir().unwrap();
        let mut rows = Vec::new();
        for (k, p) in [0.02, 0.05, 0.1, 0.2, 0.3].iter().enumerate() {
            rows.push(row("ptw", *p, k as f64));
            rows.push(row("fft", *p, 10.0 + k as f64));
            if k != 2 {
                rows.push(row("rr", *p, 20.0 + k as f64));
            }
        }
        let paths = emit_plot_data(&rows, dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        let dat = fs::read_to_string(&paths[0]).unwrap();
        let lines: Vec<&str> = dat.lines().collect();
        assert_eq!(lines[0], "# kernel_param ptw fft rr");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[3], "0.1 2 12 ?");
        let gp = fs::read_to_string(&paths[1]).unwrap();
        assert!(gp.contains("set logscale y"));
    }
}
