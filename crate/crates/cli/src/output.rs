//! Output sinks. Every artifact carries the tool version, config hash and seed:
//! CSV files as a leading `#` line, JSON documents in a "meta" field, and
//! JSON-lines files in a `.meta.json` sidecar.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Meta {
    fn comment(&self) -> String {
        format!(
            "# {} {} command={} config_hash={} seed={}",
            self.tool, self.version, self.command, self.config_hash, self.seed
        )
    }
}

pub struct Output {
    pub meta: Meta,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

/// Round-trip-safe decimal text for a float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

impl Output {
    /// `--out`, else `<out-dir>/<default_name>`, else stdout (`None`).
    pub fn target(&self, default_name: &str) -> Option<PathBuf> {
        self.out
            .clone()
            .or_else(|| self.out_dir.as_ref().map(|d| d.join(default_name)))
    }

    fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
        Ok(match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                }
                Box::new(BufWriter::new(
                    File::create(p).with_context(|| format!("creating {}", p.display()))?,
                ))
            }
            None => Box::new(io::stdout().lock()),
        })
    }

    /// Writes `value` (which must serialize to an object) with a "meta" field.
    pub fn json<T: Serialize>(&self, default_name: &str, value: &T) -> Result<()> {
        let path = self.target(default_name);
        self.json_to(path.as_deref(), value)
    }

    pub fn json_to<T: Serialize>(&self, path: Option<&Path>, value: &T) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        if let Value::Object(map) = &mut v {
            map.insert("meta".into(), serde_json::to_value(&self.meta)?);
        }
        let mut w = Self::open(path)?;
        serde_json::to_writer_pretty(&mut w, &v)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn csv(&self, default_name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.target(default_name);
        self.csv_to(path.as_deref(), header, rows)
    }

    pub fn csv_to(&self, path: Option<&Path>, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = Self::open(path)?;
        writeln!(w, "{}", self.meta.comment())?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header)?;
        for row in rows {
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(())
    }

    /// One JSON object per line. The metadata goes to `<file>.meta.json`, or
    /// to stderr when streaming to stdout.
    pub fn jsonl<T: Serialize>(&self, default_name: &str, records: &[T]) -> Result<()> {
        let path = self.target(default_name);
        let mut w = Self::open(path.as_deref())?;
        for r in records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        w.flush()?;
        match path {
            Some(p) => {
                let mut side = p.into_os_string();
                side.push(".meta.json");
                let mut f = BufWriter::new(File::create(&side).context("creating metadata sidecar")?);
                serde_json::to_writer_pretty(&mut f, &self.meta)?;
                writeln!(f)?;
                f.flush()?;
            }
            None => eprintln!("{}", serde_json::to_string(&self.meta)?),
        }
        Ok(())
    }
}
