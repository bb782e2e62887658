//! Point-cloud file formats.
//!
//! CSV: one row per point, numeric columns. A first row containing any
//! non-numeric field is treated as a header; a header is required to pick a
//! named meta column.
//!
//! Binary matrix: three little-endian `u64` header words `magic, n, d`
//! followed by `n * d` little-endian IEEE-754 `f64` values in row-major
//! order. `magic` is [`BINARY_MAGIC`] (the ASCII bytes `TOPOREG1` read as a
//! little-endian `u64`). Meta channels are not stored in this format.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use super::PointCloud;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: u64 = u64::from_le_bytes(*b"TOPOREG1");

/// Reads a CSV cloud; `meta_column` names a header column to split off as the meta channel.
pub fn read_csv(path: impl AsRef<Path>, meta_column: Option<&str>) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut records = reader.records();
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();

    let parse = |rec: &csv::StringRecord| -> Option<Vec<f64>> {
        rec.iter().map(|f| f.parse::<f64>().ok()).collect()
    };

    if let Some(first) = records.next() {
        let first = first.map_err(|e| Error::format(path, e.to_string()))?;
        match parse(&first) {
            Some(v) => rows.push(v),
            None => header = Some(first.iter().map(str::to_owned).collect()),
        }
    }
    for (line, rec) in records.enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = parse(&rec).ok_or_else(|| {
            let lineno = line + if header.is_some() { 2 } else { 3 };
            Error::format(path, format!("non-numeric field on line {lineno}"))
        })?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "no data rows"));
    }

    let meta_idx = match meta_column {
        None => None,
        Some(name) => {
            let h = header
                .as_ref()
                .ok_or_else(|| Error::format(path, format!("meta column `{name}` requested but the file has no header")))?;
            Some(
                h.iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::format(path, format!("no column named `{name}`")))?,
            )
        }
    };

    let width = rows[0].len();
    let mut coords = Vec::with_capacity(rows.len() * width);
    let mut meta = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::format(
                path,
                format!("row {} has {} fields, expected {width}", i + 1, row.len()),
            ));
        }
        for (c, &v) in row.iter().enumerate() {
            if Some(c) == meta_idx {
                meta.push(v);
            } else {
                coords.push(v);
            }
        }
    }
    let dim = width - usize::from(meta_idx.is_some());
    let cloud = PointCloud::new(coords, dim).map_err(|e| Error::format(path, e.to_string()))?;
    match meta_column {
        Some(name) => cloud.with_meta(name, meta),
        None => Ok(cloud),
    }
}

/// CSV text with header `x0,...,x{d-1}[,meta]`.
pub fn csv_string(cloud: &PointCloud) -> String {
    let mut out = String::new();
    let mut cols: Vec<String> = (0..cloud.dim()).map(|a| format!("x{a}")).collect();
    if let Some(name) = cloud.meta_name() {
        cols.push(name.to_owned());
    }
    out.push_str(&cols.join(","));
    out.push('\n');
    for (i, p) in cloud.points().enumerate() {
        let mut fields: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        if let Some(m) = cloud.meta() {
            fields.push(m[i].to_string());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    crate::report::write_atomic(path.as_ref(), csv_string(cloud).as_bytes())
}

pub fn read_binary(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 24 {
        return Err(Error::format(path, "truncated header"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap());
    if word(0) != BINARY_MAGIC {
        return Err(Error::format(path, "bad magic"));
    }
    let (n, d) = (word(1) as usize, word(2) as usize);
    let expected = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(24))
        .ok_or_else(|| Error::format(path, "header sizes overflow"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("expected {expected} bytes for {n} x {d}, found {}", bytes.len()),
        ));
    }
    let coords = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PointCloud::new(coords, d).map_err(|e| Error::format(path, e.to_string()))
}

pub fn binary_bytes(cloud: &PointCloud) -> Vec<u8> {
    let mut buf = Vec::with_capacity(24 + 8 * cloud.coords().len());
    for w in [BINARY_MAGIC, cloud.len() as u64, cloud.dim() as u64] {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    for x in cloud.coords() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf
}

pub fn write_binary(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    crate::report::write_atomic(path.as_ref(), &binary_bytes(cloud))
}

/// Dispatches on extension: `.bin` is the binary matrix format, anything else CSV.
pub fn read_points(path: impl AsRef<Path>, meta_column: Option<&str>) -> Result<PointCloud> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input file does not exist"),
        ));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => read_binary(path),
        _ => read_csv(path, meta_column),
    }
}
