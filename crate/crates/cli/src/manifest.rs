//! Run manifest: one text file per output directory listing what was
//! written, by which command, from which configuration.

use chrono::{SecondsFormat, Utc};
use pinnflow_core::error::Result;
use std::fs;
use std::path::Path;

pub const MANIFEST_NAME: &str = "run_manifest.txt";

pub struct Manifest {
    command: &'static str,
    seed: u64,
    started: String,
    files: Vec<(String, u64)>,
    config_echo: String,
}

impl Manifest {
    pub fn begin(command: &'static str, seed: u64, config_echo: String) -> Manifest {
        Manifest {
            command,
            seed,
            started: timestamp(),
            files: Vec::new(),
            config_echo,
        }
    }

    /// Writes `contents` under `root/rel` (creating parent directories) and
    /// records it. Paths use '/' separators in the manifest.
    pub fn write_file(&mut self, root: &Path, rel: &str, contents: &str) -> Result<()> {
        let path = root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.files.push((rel.to_string(), contents.len() as u64));
        Ok(())
    }

    /// Records a file some other writer already placed under `root`.
    pub fn record(&mut self, root: &Path, rel: &str) -> Result<()> {
        let size = fs::metadata(root.join(rel))?.len();
        self.files.push((rel.to_string(), size));
        Ok(())
    }

    /// Renders and writes the manifest itself. Every output file of the run
    /// must have been recorded by this point.
    pub fn finalize(mut self, root: &Path) -> Result<()> {
        self.files.sort();
        let mut out = String::new();
        out.push_str("[run]\n");
        out.push_str(&format!(
            "tool = {} {}\n",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION")
        ));
        out.push_str(&format!("command = {}\n", self.command));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("started_utc = {}\n", self.started));
        out.push_str(&format!("finished_utc = {}\n", timestamp()));
        out.push_str("\n[files]\n");
        for (name, size) in &self.files {
            out.push_str(&format!("{name} = {size}\n"));
        }
        out.push_str(&format!("{MANIFEST_NAME} = -\n"));
        out.push_str("\n[config]\n");
        out.push_str(&self.config_echo);
        fs::write(root.join(MANIFEST_NAME), out)?;
        Ok(())
    }
}

fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}
