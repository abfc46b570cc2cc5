// SPDX-License-Identifier: MIT OR Apache-2.0

//! Versioned JSON reports, scan-curve CSV and atomic file output.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use gkcp::ScanProfile;
use serde::Serialize;

use crate::input::InputInfo;

pub const SCHEMA: &str = "gkcp-report";
pub const SCHEMA_VERSION: u32 = 1;

/// Top-level object of every JSON report.
#[derive(Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize> {
    pub schema: &'static str,
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<&'a InputInfo>,
    pub config: &'a C,
    pub result: &'a R,
}

impl<'a, C: Serialize, R: Serialize> Report<'a, C, R> {
    pub fn new(
        command: &'a str,
        input: Option<&'a InputInfo>,
        config: &'a C,
        result: &'a R,
    ) -> Self {
        Self {
            schema: SCHEMA,
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            input,
            config,
            result,
        }
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Writes via a temporary file in the target directory and a rename, so
/// readers never see a partial file.
pub fn write_atomic(
    path: &Path,
    write: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        write(&mut buf)?;
        buf.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => write_atomic(p, |w| Ok(w.write_all(text.as_bytes())?)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}

/// `t,Z_D,Z_W12,Z_W08,GKCP`, one row per split. `i12` and `i08` index the
/// two `r` values in the profile.
pub fn write_scan_curve(
    w: &mut dyn Write,
    p: &ScanProfile<f64>,
    i12: usize,
    i08: usize,
) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "Z_D", "Z_W12", "Z_W08", "GKCP"])?;
    for (k, t) in p.t.iter().enumerate() {
        out.write_record([
            t.to_string(),
            p.z_d[k].to_string(),
            p.z_w[i12][k].to_string(),
            p.z_w[i08][k].to_string(),
            p.gkcp[k].to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
