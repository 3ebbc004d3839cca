use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use fluidpoll::output::{CsvTable, Document};
use serde::Serialize;

use crate::args::Format;

/// Writes documents to `<out>/<name>.{csv,json}`, or to stdout.
pub struct Emitter {
    out: Option<PathBuf>,
    format: Format,
}

impl Emitter {
    pub fn new(out: Option<PathBuf>, format: Format) -> Result<Self> {
        if let Some(dir) = &out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(Self { out, format })
    }

    /// Emits `payload` as JSON or `table` as CSV, depending on the format.
    pub fn emit<T: Serialize>(&self, name: &str, kind: &'static str, payload: T, table: &CsvTable) -> Result<()> {
        match self.format {
            Format::Json => {
                let text = Document::new(kind, payload).to_json_pretty()? + "\n";
                self.write(&format!("{name}.json"), text.as_bytes())
            }
            Format::Csv => self.table(name, table),
        }
    }

    /// Emits an extra CSV table; ignored in JSON mode.
    pub fn table(&self, name: &str, table: &CsvTable) -> Result<()> {
        if self.format == Format::Csv {
            self.write(&format!("{name}.csv"), table.to_string_lossy().as_bytes())?;
        }
        Ok(())
    }

    fn write(&self, file: &str, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(dir) => {
                let path = dir.join(file);
                fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
            }
            None => {
                let mut stdout = io::stdout().lock();
                stdout.write_all(bytes)?;
                stdout.flush()?;
                Ok(())
            }
        }
    }
}
