//! Artifact writers. Data files (CSV, result JSON) contain no clocks or
//! environment state, so a fixed seed reproduces them byte for byte; the
//! manifest carries the timestamp and the exact re-run recipe instead.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

/// Floats in CSV cells: 12 significant digits, scientific notation.
pub fn sig(x: f64) -> String {
    format!("{:.11e}", x)
}

/// Plain CSV assembler: header row plus pre-formatted cells, LF line ends,
/// no quoting (no cell we emit contains a comma).
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Csv { buf, columns: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert!(cells.len() == self.columns);
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// Sidecar describing how an artifact set was produced; rerunning the same
/// binary version with the recorded recipe, config, and seed reproduces the
/// data files byte for byte.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub recipe: String,
    pub config: Option<String>,
    pub out_dir: String,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub tol: Option<f64>,
    pub version: &'static str,
    pub timestamp: String,
    pub outputs: Vec<String>,
}

/// Target directory with bookkeeping of what was written into it.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn write_csv(&mut self, name: &str, csv: Csv) -> anyhow::Result<PathBuf> {
        self.write(name, &csv.into_string())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Write the manifest last so it can list every data file.
    pub fn finish(
        mut self,
        recipe: &str,
        config: Option<&Path>,
        seed: Option<u64>,
        paths: Option<usize>,
        tol: Option<f64>,
    ) -> anyhow::Result<Vec<PathBuf>> {
        let manifest = RunManifest {
            schema_version: 1,
            recipe: recipe.to_string(),
            config: config.map(|p| p.display().to_string()),
            out_dir: self.dir.display().to_string(),
            seed,
            paths,
            tol,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs: self.written.clone(),
        };
        let name = format!("{recipe}.manifest.json");
        self.write_json(&name, &manifest)?;
        Ok(self.written.iter().map(|n| self.dir.join(n)).collect())
    }
}
