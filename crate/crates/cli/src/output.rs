//! Result files: JSON lines plus CSV tables, all named by the config hash.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use feasmass::experiments::SurfacePoint;
use feasmass::{Bitstring, Error, Result};

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Output {
    dir: PathBuf,
    stem: String,
    hash: String,
    seed: u64,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Output {
    pub fn new(dir: &Path, command: &str, hash: &str, seed: u64) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            stem: format!("{command}-{hash}"),
            hash: hash.to_string(),
            seed,
        })
    }

    fn path(&self, suffix: &str, ext: &str) -> PathBuf {
        if suffix.is_empty() {
            self.dir.join(format!("{}.{ext}", self.stem))
        } else {
            self.dir.join(format!("{}-{suffix}.{ext}", self.stem))
        }
    }

    pub fn write_jsonl(&self, lines: &[serde_json::Value]) -> Result<PathBuf> {
        let path = self.path("", "jsonl");
        let mut body = String::new();
        for line in lines {
            body.push_str(&line.to_string());
            body.push('\n');
        }
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    fn write_csv(&self, suffix: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<PathBuf> {
        let path = self.path(suffix, "csv");
        let mut file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        writeln!(file, "# config_hash={} seed={}", self.hash, self.seed).map_err(|e| io_err(&path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let csv_err = |e: csv::Error| Error::InvalidArgument(format!("{}: {e}", path.display()));
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    /// `gamma,beta,p_feas`.
    pub fn write_surface(&self, suffix: &str, points: &[SurfacePoint]) -> Result<PathBuf> {
        let rows = points
            .iter()
            .map(|p| vec![fmt17(p.gamma), fmt17(p.beta), fmt17(p.p_feas)])
            .collect();
        self.write_csv(suffix, &["gamma", "beta", "p_feas"], rows)
    }

    /// `bitstring,count`, bit 0 first.
    pub fn write_histogram(&self, suffix: &str, counts: &BTreeMap<Bitstring, u64>, n_bits: usize) -> Result<PathBuf> {
        let rows = counts
            .iter()
            .map(|(x, c)| vec![x.render(n_bits), c.to_string()])
            .collect();
        self.write_csv(suffix, &["bitstring", "count"], rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.0 / 512.0, 1e-300, 123456.789] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
            assert_eq!(mantissa.len(), 17);
        }
    }
}
