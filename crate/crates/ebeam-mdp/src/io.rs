//! File formats: shot lists as CSV, float rasters as PFM, heatmaps as PGM,
//! and the per-epoch optimization trace as CSV.
//!
//! All formats are header-only and diff- or viewer-friendly. Float rasters
//! round-trip bit-exactly at float32 precision; shot lists round-trip
//! losslessly through the shortest-decimal representation.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::RasterField;
use crate::model::{Shot, ShotSet};
use crate::opt::OptTrace;

/// Column header of a shot-list CSV.
pub const SHOT_CSV_HEADER: &str = "id,x,y,w,h,d,q";

fn display_path(path: &Path) -> String {
    path.display().to_string()
}

/// Writes a shot list as CSV. Integer-valued coordinates print as integers;
/// any fractional value (raw, unprojected sets) prints as the shortest
/// decimal that parses back to the same float.
pub fn write_shots(path: &Path, shots: &ShotSet) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(display_path(path), e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "{SHOT_CSV_HEADER}")?;
        for (id, s) in shots.iter().enumerate() {
            writeln!(w, "{id},{},{},{},{},{},{}", s.x, s.y, s.w, s.h, s.dose, s.q)?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(display_path(path), e))
}

/// Reads a shot list written by [`write_shots`]. The `id` column is
/// ignored beyond requiring a parseable integer; every numeric field must
/// be finite.
pub fn read_shots(path: &Path) -> Result<Vec<Shot>> {
    let name = display_path(path);
    let file = File::open(path).map_err(|e| Error::io(name.clone(), e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io(name.clone(), e))?,
        None => return Err(Error::parse(name, "empty file (missing header)")),
    };
    if header.trim_end_matches('\r') != SHOT_CSV_HEADER {
        return Err(Error::parse(
            name,
            format!("bad header {header:?}, expected {SHOT_CSV_HEADER:?}"),
        ));
    }

    let mut shots = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(name.clone(), e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let row: Vec<&str> = line.split(',').collect();
        if row.len() != 7 {
            return Err(Error::parse(
                name,
                format!("line {}: expected 7 fields, got {}", idx + 1, row.len()),
            ));
        }
        row[0].trim().parse::<u64>().map_err(|_| {
            Error::parse(&name, format!("line {}: bad id {:?}", idx + 1, row[0]))
        })?;
        let mut vals = [0.0f64; 6];
        for (slot, field) in vals.iter_mut().zip(&row[1..]) {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(&name, format!("line {}: bad number {field:?}", idx + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    name,
                    format!("line {}: non-finite value {field:?}", idx + 1),
                ));
            }
            *slot = v;
        }
        shots.push(Shot::new(vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]));
    }
    Ok(shots)
}

/// Writes a float raster as grayscale PFM (`Pf`), little-endian float32,
/// rows bottom-to-top — the same row order the raster uses in memory.
pub fn write_pfm(path: &Path, field: &RasterField) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(display_path(path), e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        write!(w, "Pf\n{} {}\n-1.0\n", field.width(), field.height())?;
        for j in 0..field.height() {
            for &v in field.row(j) {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(display_path(path), e))
}

/// Reads a grayscale PFM raster. The sign of the scale token selects the
/// byte order, per the format's convention.
pub fn read_pfm(path: &Path) -> Result<RasterField> {
    let name = display_path(path);
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(name.clone(), e))?;

    // Header: three whitespace-separated tokens, then a single whitespace
    // byte, then the raw samples.
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(name.clone(), "truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = token(&bytes)?;
    if magic != "Pf" {
        return Err(Error::parse(name, format!("bad magic {magic:?}, expected \"Pf\"")));
    }
    let width: usize = token(&bytes)?
        .parse()
        .map_err(|_| Error::parse(&name, "bad width"))?;
    let height: usize = token(&bytes)?
        .parse()
        .map_err(|_| Error::parse(&name, "bad height"))?;
    let scale: f64 = token(&bytes)?
        .parse()
        .map_err(|_| Error::parse(&name, "bad scale"))?;
    if width == 0 || height == 0 {
        return Err(Error::parse(name, "zero raster dimension"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::parse(name, "scale must be finite and nonzero"));
    }
    pos += 1; // single whitespace separating header from samples
    let need = width * height * 4;
    if bytes.len() < pos || bytes.len() - pos != need {
        return Err(Error::parse(
            name,
            format!("expected {need} sample bytes, found {}", bytes.len().saturating_sub(pos)),
        ));
    }

    let little_endian = scale < 0.0;
    let mut field = RasterField::zeros(width, height);
    for j in 0..height {
        let row = field.row_mut(j);
        for item in row.iter_mut() {
            let raw: [u8; 4] = bytes[pos..pos + 4].try_into().unwrap();
            *item = if little_endian {
                f32::from_le_bytes(raw) as f64
            } else {
                f32::from_be_bytes(raw) as f64
            };
            pos += 4;
        }
    }
    Ok(field)
}

/// Writes an 8-bit min-max-normalized PGM (P5) heatmap of the raster. A
/// constant field maps to all-black.
pub fn write_pgm(path: &Path, field: &RasterField) -> Result<()> {
    let lo = field.min();
    let hi = field.max();
    let span = hi - lo;
    let file = File::create(path).map_err(|e| Error::io(display_path(path), e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", field.width(), field.height())?;
        // PGM rows run top-to-bottom; the raster stores bottom-up.
        for j in (0..field.height()).rev() {
            let row: Vec<u8> = field
                .row(j)
                .iter()
                .map(|&v| {
                    if span > 0.0 {
                        (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8
                    } else {
                        0
                    }
                })
                .collect();
            w.write_all(&row)?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(display_path(path), e))
}

/// Writes the per-epoch loss trace as CSV.
pub fn write_trace(path: &Path, trace: &OptTrace) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(display_path(path), e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "{}", crate::loss::LossReport::CSV_HEADER)?;
        for (i, rec) in trace.epochs.iter().enumerate() {
            writeln!(w, "{}", rec.report.csv_row(i + 1, rec.lr))?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(display_path(path), e))
}
