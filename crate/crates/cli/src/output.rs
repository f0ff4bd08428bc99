//! Output directory: tidy CSV tables with a schema line, JSON documents and
//! the manifest that records how to reproduce them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Bumped whenever a column is added, removed or renamed.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.root.join(name);
        let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let mut w = self.open(name)?;
        w.write_all(body.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    /// Writes `rows` under `header`. The first line names the table and its
    /// schema version as a `#` comment.
    pub fn csv<R, I>(&mut self, name: &str, table: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let mut w = self.open(name)?;
        writeln!(w, "# schema={table} version={CSV_SCHEMA_VERSION}")?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(header)?;
        for row in rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `manifest.json` listing everything produced so far.
    pub fn finish(mut self, manifest: Manifest) -> Result<PathBuf> {
        let files = self.written.clone();
        self.json(
            "manifest.json",
            &ManifestFile {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                csv_schema_version: CSV_SCHEMA_VERSION,
                files,
                manifest,
            },
        )?;
        Ok(self.root)
    }
}

/// What a command did, enough to re-run it bit for bit.
#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub jobs: usize,
    pub parallel: bool,
    /// Seeds used by stochastic steps, in order.
    pub seeds: Vec<u64>,
    /// Command options after defaults were applied.
    pub options: serde_json::Value,
    /// The scenario as read, in TOML.
    pub scenario: String,
    pub exit_code: i32,
}

#[derive(Serialize)]
struct ManifestFile {
    tool: &'static str,
    version: &'static str,
    csv_schema_version: u32,
    files: Vec<String>,
    #[serde(flatten)]
    manifest: Manifest,
}

/// Formats a float for CSV; non-finite values become empty cells.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}
