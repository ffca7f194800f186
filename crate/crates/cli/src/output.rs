//! Output directory handling and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST: &str = "manifest.json";

/// Describes one invocation and every file it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    /// Field and column names whose values depend on the clock.
    pub timing_fields: Vec<String>,
    pub started_at: u64,
    pub finished_at: u64,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Resolves the output directory: `--out`, else `$SWARMFORGE_OUT/<sub>`,
/// else `swarmforge-out/<sub>`.
pub fn resolve_dir(out: Option<&Path>, subcommand: &str) -> PathBuf {
    match out {
        Some(dir) => dir.to_path_buf(),
        None => std::env::var_os("SWARMFORGE_OUT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("swarmforge-out"))
            .join(subcommand),
    }
}

/// Writes files under one directory and remembers what was written.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
    started_at: u64,
}

impl Outputs {
    pub fn create(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir,
            written: Vec::new(),
            started_at: unix_now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<fs::File>> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
        }
        let file = fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
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

    pub fn jsonl<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut w = self.open(name)?;
        for row in rows {
            serde_json::to_writer(&mut w, &row)?;
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let w = self.open(name)?;
        let mut writer = csv::Writer::from_writer(w);
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, content: &str) -> Result<()> {
        let mut w = self.open(name)?;
        w.write_all(content.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    /// Writes the manifest last, listing every file written before it.
    pub fn finish(
        mut self,
        subcommand: &str,
        config: serde_json::Value,
        seeds: BTreeMap<String, u64>,
        timing_fields: &[&str],
    ) -> Result<PathBuf> {
        let mut timing: Vec<String> = timing_fields.iter().map(|s| s.to_string()).collect();
        timing.extend(["started_at".to_string(), "finished_at".to_string()]);
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seeds,
            outputs: self.written.clone(),
            timing_fields: timing,
            started_at: self.started_at,
            finished_at: unix_now(),
        };
        self.json(MANIFEST, &manifest)?;
        Ok(self.dir)
    }
}

fn strip_fields(value: &mut serde_json::Value, fields: &[String]) {
    match value {
        serde_json::Value::Object(map) => {
            map.retain(|k, _| !fields.contains(k));
            map.values_mut().for_each(|v| strip_fields(v, fields));
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(|v| strip_fields(v, fields)),
        _ => {}
    }
}

fn strip_csv_columns(text: &str, fields: &[String]) -> Result<String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let keep: Vec<usize> = (0..headers.len())
        .filter(|&i| !fields.iter().any(|f| f == &headers[i]))
        .collect();
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(keep.iter().map(|&i| &headers[i]))?;
    for record in reader.records() {
        let record = record?;
        writer.write_record(keep.iter().map(|&i| &record[i]))?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

/// Every file of a finished run with the manifest's timing fields removed,
/// keyed by relative path. Two runs with the same inputs compare equal.
pub fn canonical_outputs(dir: &Path) -> Result<BTreeMap<String, String>> {
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?;
    let fields = &manifest.timing_fields;
    let mut files = BTreeMap::new();
    for name in manifest.outputs.iter().chain(std::iter::once(&MANIFEST.to_string())) {
        let text = fs::read_to_string(dir.join(name)).with_context(|| format!("missing output {name}"))?;
        let canonical = if name.ends_with(".jsonl") {
            let mut lines = Vec::new();
            for line in text.lines() {
                let mut v: serde_json::Value = serde_json::from_str(line)?;
                strip_fields(&mut v, fields);
                lines.push(v.to_string());
            }
            lines.join("\n")
        } else if name.ends_with(".json") {
            let mut v: serde_json::Value = serde_json::from_str(&text)?;
            strip_fields(&mut v, fields);
            v.to_string()
        } else if name.ends_with(".csv") {
            strip_csv_columns(&text, fields)?
        } else {
            text
        };
        files.insert(name.clone(), canonical);
    }
    Ok(files)
}
