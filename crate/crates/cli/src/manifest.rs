//! Run manifests and plot-ready output emission.
//!
//! Every output file starts with a `#`-prefixed manifest block recording the
//! command, the full resolved parameter set, the master seed and RNG, and
//! the toolkit version: enough to reproduce the bytes exactly on the same
//! build. The timestamp honors `SOURCE_DATE_EPOCH` so pinned environments
//! get byte-identical files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub rng_algorithm: String,
    pub version: String,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new<P: Serialize>(command: &str, params: &P, seed: u64) -> Self {
        let timestamp_unix = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        RunManifest {
            command: command.to_string(),
            params: serde_json::to_value(params).expect("params serialize"),
            seed,
            rng_algorithm: quditec::mc::RNG_ALGORITHM.to_string(),
            version: TOOLKIT_VERSION.to_string(),
            timestamp_unix,
        }
    }

    pub fn header_lines(&self) -> Vec<String> {
        vec![
            format!("# quditec v{}", self.version),
            format!("# command: {}", self.command),
            format!("# params: {}", self.params),
            format!("# seed: {}", self.seed),
            format!("# rng: {}", self.rng_algorithm),
            format!("# timestamp_unix: {}", self.timestamp_unix),
        ]
    }
}

/// Destination for emitted tables/reports.
pub struct Output {
    writer: Box<dyn Write>,
}

impl Output {
    pub fn create(path: &Option<PathBuf>) -> io::Result<Self> {
        let writer: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(io::stdout().lock()),
        };
        Ok(Output { writer })
    }

    /// Long-format CSV: manifest block, one header row (column names carry
    /// units), then rows.
    pub fn csv(
        &mut self,
        manifest: &RunManifest,
        columns: &[&str],
        rows: &[Vec<String>],
    ) -> io::Result<()> {
        for line in manifest.header_lines() {
            writeln!(self.writer, "{line}")?;
        }
        writeln!(self.writer, "{}", columns.join(","))?;
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            writeln!(self.writer, "{}", row.join(","))?;
        }
        self.writer.flush()
    }

    /// JSON report with the manifest embedded.
    pub fn json<T: Serialize>(&mut self, manifest: &RunManifest, body: &T) -> io::Result<()> {
        let document = serde_json::json!({
            "manifest": manifest,
            "report": body,
        });
        writeln!(
            self.writer,
            "{}",
            serde_json::to_string_pretty(&document).expect("report serialize")
        )?;
        self.writer.flush()
    }
}

/// Compact float formatting for CSV cells: round-trippable, no trailing
/// noise for integral values.
pub fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v:.12e}")
    }
}
