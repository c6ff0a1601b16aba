//! CSV and JSON artifacts.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vlp_core::{LayoutKind, LedLayout, WorldPoint};

use crate::error::{CliError, CliResult};

/// Nine significant digits, `.` decimal point, no locale.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..9).contains(&e) {
        let s = format!("{:.*}", (8 - e).max(0) as usize, x);
        trim_zeros(s)
    } else {
        let s = format!("{:.8e}", x);
        match s.split_once('e') {
            Some((m, exp)) => format!("{}e{}", trim_zeros(m.to_string()), exp),
            None => s,
        }
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Writes rows of pre-formatted cells under a header.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    use std::io::Write;
    writeln!(w)?;
    Ok(())
}

/// `{kind, density, leds: [[x, y, z], …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub kind: LayoutKind,
    pub density: f64,
    pub leds: Vec<[f64; 3]>,
}

impl From<&LedLayout> for LayoutFile {
    fn from(l: &LedLayout) -> Self {
        Self { kind: l.kind, density: l.density, leds: l.leds.iter().map(|p| [p.x, p.y, p.z]).collect() }
    }
}

impl From<LayoutFile> for LedLayout {
    fn from(f: LayoutFile) -> Self {
        LedLayout::new(f.kind, f.density, f.leds.into_iter().map(|p| WorldPoint::new(p[0], p[1], p[2])).collect())
    }
}

pub fn write_layout(path: &Path, layout: &LedLayout) -> CliResult<()> {
    write_json(path, &LayoutFile::from(layout))
}

pub fn read_layout(path: &Path) -> CliResult<LedLayout> {
    let text = std::fs::read_to_string(path)?;
    let f: LayoutFile = serde_json::from_str(&text)?;
    Ok(f.into())
}

/// Echo of a run: command, seed, crate version, full config and the files written.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub config: &'a C,
    pub outputs: Vec<String>,
}

/// Output directory guard: every artifact path is a plain file name inside it.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn file(&mut self, name: &str) -> CliResult<PathBuf> {
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(CliError::Config(format!("invalid output file name `{name}`")));
        }
        self.written.push(name.to_string());
        Ok(self.root.join(name))
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

/// `(x, y)` pairs for fitting from a CSV with an `n_c` column and one of
/// `npem`, `error_m` or `mean_error_m`.
pub fn read_fit_points(path: &Path, y_column: Option<&str>) -> CliResult<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let xi = find("n_c").ok_or_else(|| CliError::Config(format!("{}: missing n_c column", path.display())))?;
    let yi = match y_column {
        Some(c) => find(c),
        None => ["npem", "error_m", "mean_error_m"].iter().find_map(|c| find(c)),
    }
    .ok_or_else(|| CliError::Config(format!("{}: no value column", path.display())))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| -> CliResult<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| CliError::Config(format!("{}: unparsable value in row", path.display())))
        };
        let y = parse(yi)?;
        if y.is_finite() {
            out.push((parse(xi)?, y));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(18.0661234567), "18.0661235");
        assert_eq!(fmt_sig(0.0006536), "0.0006536");
        assert_eq!(fmt_sig(-2.5), "-2.5");
        assert_eq!(fmt_sig(1.23456789123e-9), "1.23456789e-9");
        assert_eq!(fmt_sig(123456789012.0), "1.23456789e11");
        assert_eq!(fmt_sig(f64::NAN), "nan");
    }

    #[test]
    fn layout_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let l = LedLayout::new(LayoutKind::Hexagonal, 1.0, vec![WorldPoint::new(1.0, 2.0, 2.75)]);
        let p = dir.path().join("layout.json");
        write_layout(&p, &l).unwrap();
        assert_eq!(read_layout(&p).unwrap(), l);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"kind\": \"hexagonal\""));
    }

    #[test]
    fn out_dir_rejects_escapes() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = OutDir::create(dir.path()).unwrap();
        assert!(o.file("../x.csv").is_err());
        assert!(o.file("a/b.csv").is_err());
        assert!(o.file("ok.csv").is_ok());
    }

    #[test]
    fn fit_points_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut t = Table::new(&["x", "n_c", "npem"]);
        t.push(vec!["0".into(), "4".into(), "0.5".into()]);
        t.push(vec!["0".into(), "2".into(), "nan".into()]);
        t.write(&p).unwrap();
        assert_eq!(read_fit_points(&p, None).unwrap(), vec![(4.0, 0.5)]);
    }
}
