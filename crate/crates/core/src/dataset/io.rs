//! CSV and binary matrix formats.
//!
//! CSV: UTF-8, comma-separated, `.` decimal, scientific notation accepted;
//! rows are variables and columns are time steps. The writer emits 17
//! significant digits so a round trip is lossless for `f64`.
//!
//! Binary: magic `TVM1`, little-endian u64 row and column counts, then
//! `rows*cols` little-endian f64 values in column-major order.

use crate::error::{Error, Result};
use crate::Matrix;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::TimeSeriesMatrix;

/// Read a time-series matrix from CSV. `skip_header` drops the first row;
/// `transpose` swaps the variable/time orientation after reading.
pub fn load_csv(path: &Path, skip_header: bool, transpose: bool) -> Result<TimeSeriesMatrix> {
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = 0usize;
    for (line_idx, line) in reader.lines().enumerate() {
        let line = line?;
        if skip_header && line_idx == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(width);
        for (col_idx, cell) in line.split(',').enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| {
                Error::Data(format!(
                    "cannot parse '{}' as a number at row {}, column {}",
                    cell.trim(),
                    line_idx + 1,
                    col_idx + 1
                ))
            })?;
            row.push(value);
        }
        if rows.is_empty() {
            width = row.len();
        } else if row.len() != width {
            return Err(Error::Data(format!(
                "ragged CSV: row {} has {} columns, expected {width}",
                line_idx + 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{} is empty", path.display())));
    }

    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let mut m = Matrix::from_row_slice(flat.len() / width, width, &flat);
    if transpose {
        m = m.transpose();
    }
    TimeSeriesMatrix::new(m)
}

/// Write any matrix as CSV with 17 significant digits per value.
pub fn write_matrix_csv(m: &Matrix, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                w.write_all(b",")?;
            }
            write!(w, "{:.16e}", m[(i, j)])?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Read a matrix written by [`write_matrix_csv`]; no header, no transpose.
pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let ts = load_csv(path, false, false)?;
    Ok(ts.into_values())
}

/// Write a time-series matrix as CSV.
pub fn save_csv(series: &TimeSeriesMatrix, path: &Path) -> Result<()> {
    write_matrix_csv(series.values(), path)
}

const BINARY_MAGIC: &[u8; 4] = b"TVM1";

/// Write a time-series matrix in the binary format.
pub fn save_binary(series: &TimeSeriesMatrix, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(series.num_vars() as u64).to_le_bytes())?;
    w.write_all(&(series.num_steps() as u64).to_le_bytes())?;
    // Column-major walk matches the in-memory layout.
    for v in series.values().iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a time-series matrix in the binary format.
pub fn load_binary(path: &Path) -> Result<TimeSeriesMatrix> {
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Data(format!("{}: truncated header", path.display())))?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Data(format!(
            "{}: bad magic {:?}, expected \"TVM1\"",
            path.display(),
            magic
        )));
    }
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let rows = u64::from_le_bytes(buf8) as usize;
    r.read_exact(&mut buf8)?;
    let cols = u64::from_le_bytes(buf8) as usize;
    if rows == 0 || cols == 0 || rows.saturating_mul(cols) > (1usize << 33) {
        return Err(Error::Data(format!(
            "{}: implausible dimensions {rows}x{cols}",
            path.display()
        )));
    }
    let mut values = vec![0.0f64; rows * cols];
    for v in values.iter_mut() {
        r.read_exact(&mut buf8)
            .map_err(|_| Error::Data(format!("{}: truncated payload", path.display())))?;
        *v = f64::from_le_bytes(buf8);
    }
    TimeSeriesMatrix::new(Matrix::from_column_slice(rows, cols, &values))
}
