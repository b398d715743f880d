//! Run directory layout: one CSV per trace, `report.json`, the resolved
//! config, a generic plot script and `manifest.json` with content hashes.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::scenarios::{Artifact, Body};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub figure: String,
    pub version: String,
    pub config_sha256: String,
    pub files: Vec<FileEntry>,
}

const PLOT_SCRIPT: &str = r##"# Plots every CSV in this directory: each column against the first one.
import csv
import pathlib

import matplotlib.pyplot as plt

here = pathlib.Path(__file__).resolve().parent
for path in sorted(here.glob("*.csv")):
    with path.open() as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, data = rows[0], [[float(v) for v in r] for r in rows[1:]]
    x = [r[0] for r in data]
    fig, ax = plt.subplots(figsize=(7, 4))
    for j, name in enumerate(header[1:], start=1):
        ax.plot(x, [r[j] for r in data], label=name)
    ax.set_xlabel(header[0])
    ax.set_title(path.stem)
    if len(header) <= 12:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path.with_suffix(".png"), dpi=150)
    plt.close(fig)
"##;

/// Writes `artifacts` into `dir` and returns the manifest.
pub fn write_run(
    dir: &Path,
    scenario: &str,
    figure: &str,
    config_text: &str,
    artifacts: Vec<Artifact>,
    plot: bool,
) -> io::Result<Manifest> {
    fs::create_dir_all(dir)?;
    let config_sha256 = sha256_hex(config_text.as_bytes());
    let mut files: Vec<(String, Vec<u8>)> = vec![("config.resolved.txt".into(), config_text.as_bytes().to_vec())];
    for a in artifacts {
        let bytes = match a.body {
            Body::Csv(mut t) => {
                t.set_meta("scenario", scenario);
                t.set_meta("config_sha256", &config_sha256);
                t.set_meta("fluxmech_version", VERSION);
                t.to_csv().into_bytes()
            }
            Body::Json(v) => {
                let mut s = serde_json::to_string_pretty(&v).map_err(io::Error::other)?;
                s.push('\n');
                s.into_bytes()
            }
        };
        files.push((a.file, bytes));
    }
    if plot {
        files.push(("plot.py".into(), PLOT_SCRIPT.as_bytes().to_vec()));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    let mut entries = Vec::new();
    for (name, bytes) in files {
        fs::write(dir.join(&name), &bytes)?;
        entries.push(FileEntry { sha256: sha256_hex(&bytes), bytes: bytes.len(), path: name });
    }
    let manifest = Manifest {
        scenario: scenario.into(),
        figure: figure.into(),
        version: VERSION.into(),
        config_sha256,
        files: entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(manifest)
}
