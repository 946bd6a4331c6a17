//! CSV output with a commented provenance header.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Writes a CSV file whose header comments carry the crate version and the
/// fully resolved run parameters, then a column-name row, then the rows.
pub fn write_csv(
    path: &Path,
    meta: &[(String, String)],
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# version = {}", env!("CARGO_PKG_VERSION"))?;
    for (k, v) in meta {
        writeln!(out, "# {k} = {v}")?;
    }
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Shortest-round-trip float formatting shared by all emitters.
pub fn fmt(x: f64) -> String {
    format!("{x}")
}
