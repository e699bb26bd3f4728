//! Snapshot persistence: the binary `PODS` container and single-field CSV import.
//!
//! `PODS` layout (little-endian): magic, version `u32 = 1`, count `u32`,
//! nx `u32`, ny `u32`, then `count * nx * ny` `f64` values, row-major,
//! snapshots concatenated.

use std::fs;
use std::path::Path;

use crate::binio::{to_u32, write_atomic, Decoder, Encoder};
use crate::error::{Error, Result};
use crate::flow::field::Field2D;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"PODS";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn encode_snapshots(fields: &[Field2D]) -> Result<Vec<u8>> {
    let (nx, ny) = fields.first().map_or((0, 0), |f| (f.nx(), f.ny()));
    if let Some(i) = fields.iter().position(|f| f.nx() != nx || f.ny() != ny) {
        return Err(Error::DimensionMismatch(format!(
            "snapshot {i} is {}x{}, expected {nx}x{ny}",
            fields[i].nx(),
            fields[i].ny()
        )));
    }
    let mut e = Encoder::with_magic(SNAPSHOT_MAGIC, SNAPSHOT_VERSION);
    e.u32(to_u32(fields.len(), "snapshot count")?);
    e.u32(to_u32(nx, "nx")?);
    e.u32(to_u32(ny, "ny")?);
    for f in fields {
        e.f64s(f.values());
    }
    Ok(e.into_bytes())
}

pub fn decode_snapshots(bytes: &[u8]) -> Result<Vec<Field2D>> {
    let mut d = Decoder::open(bytes, SNAPSHOT_MAGIC, SNAPSHOT_VERSION)?;
    let count = d.u32()? as usize;
    let nx = d.u32()? as usize;
    let ny = d.u32()? as usize;
    if count > 0 && (nx == 0 || ny == 0) {
        return Err(Error::DimensionMismatch(format!("header declares an empty {nx}x{ny} grid")));
    }
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        out.push(Field2D::new(nx, ny, d.f64s(nx * ny)?)?);
    }
    d.finish()?;
    Ok(out)
}

pub fn write_snapshot_file(fields: &[Field2D], path: &Path) -> Result<()> {
    write_atomic(path, &encode_snapshots(fields)?)
}

pub fn read_snapshot_file(path: &Path) -> Result<Vec<Field2D>> {
    decode_snapshots(&fs::read(path)?)
}

/// Parse one snapshot from CSV text: `ny` rows of `nx` comma-separated values,
/// the first row being `y = 0`.
pub fn parse_snapshot_csv(text: &str) -> Result<Field2D> {
    let mut values = Vec::new();
    let mut nx = None;
    let mut ny = 0;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {t:?}: {e}", line_no + 1)))
            })
            .collect::<Result<_>>()?;
        match nx {
            None => nx = Some(row.len()),
            Some(n) if n != row.len() => {
                return Err(Error::DimensionMismatch(format!(
                    "line {} has {} columns, expected {n}",
                    line_no + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        values.extend(row);
        ny += 1;
    }
    let nx = nx.ok_or_else(|| Error::Parse("empty CSV snapshot".into()))?;
    Field2D::new(nx, ny, values)
}

/// Inverse of [`parse_snapshot_csv`], with 17 significant digits so values round-trip exactly.
pub fn format_snapshot_csv(field: &Field2D) -> String {
    let mut out = String::with_capacity(field.len() * 24);
    for row in field.values().chunks(field.nx()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn read_snapshot_csv(path: &Path) -> Result<Field2D> {
    parse_snapshot_csv(&fs::read_to_string(path)?)
}
