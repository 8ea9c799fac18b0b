use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{Raster, RasterKind};

use super::table::format_float;

/// Reads an ESRI ASCII grid. The header keys are matched case-insensitively;
/// `NODATA_value` defaults to -9999 when absent.
pub fn load_raster(path: impl AsRef<Path>, kind: RasterKind) -> Result<Raster> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_raster(&text, kind).map_err(|e| match e {
        Error::Load { line, message, .. } => Error::load(path, line, message),
        other => Error::load(path, None, other.to_string()),
    })
}

pub fn parse_raster(text: &str, kind: RasterKind) -> Result<Raster> {
    let err = |line: usize, msg: String| Error::load("<input>", Some(line), msg);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();

    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut cellsize = None;
    let mut nodata = None;
    while let Some(&(no, line)) = lines.peek() {
        let mut parts = line.split_whitespace();
        let Some(key) = parts.next() else {
            lines.next();
            continue;
        };
        let key = key.to_ascii_lowercase();
        let slot = match key.as_str() {
            "ncols" | "nrows" | "xllcorner" | "yllcorner" | "cellsize" | "nodata_value" => key,
            "xllcenter" | "yllcenter" => return Err(err(no, "cell-center origins are not supported".into())),
            "dx" | "dy" => return Err(err(no, "rectangular cells are not supported".into())),
            _ => break,
        };
        let value = parts
            .next()
            .ok_or_else(|| err(no, format!("header key {slot} has no value")))?;
        if parts.next().is_some() {
            return Err(err(no, format!("trailing tokens after {slot}")));
        }
        lines.next();
        let target = match slot.as_str() {
            "ncols" | "nrows" => {
                let n: usize = value
                    .parse()
                    .map_err(|_| err(no, format!("{slot} must be a positive integer, got {value:?}")))?;
                if slot == "ncols" {
                    ncols = Some(n);
                } else {
                    nrows = Some(n);
                }
                continue;
            }
            "xllcorner" => &mut xll,
            "yllcorner" => &mut yll,
            "cellsize" => &mut cellsize,
            _ => &mut nodata,
        };
        let v: f64 = value
            .parse()
            .map_err(|_| err(no, format!("{slot} must be a number, got {value:?}")))?;
        *target = Some(v);
    }
    let require = |v: Option<f64>, name: &str| v.ok_or_else(|| err(1, format!("missing header key {name}")));
    let ncols = ncols.ok_or_else(|| err(1, "missing header key ncols".into()))?;
    let nrows = nrows.ok_or_else(|| err(1, "missing header key nrows".into()))?;
    let xll = require(xll, "xllcorner")?;
    let yll = require(yll, "yllcorner")?;
    let cellsize = require(cellsize, "cellsize")?;
    let nodata = nodata.unwrap_or(-9999.0);

    let mut values = Vec::with_capacity(ncols * nrows);
    let mut rows_read = 0;
    let mut last_line = 0;
    for (no, line) in lines {
        last_line = no;
        if line.trim().is_empty() {
            continue;
        }
        if rows_read == nrows {
            return Err(err(no, format!("more than {nrows} data rows")));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| err(no, format!("bad cell value {tok:?}")))?;
            values.push(v);
        }
        let got = values.len() - before;
        if got != ncols {
            return Err(err(no, format!("expected {ncols} values, found {got}")));
        }
        rows_read += 1;
    }
    if rows_read != nrows {
        return Err(err(
            last_line + 1,
            format!("expected {nrows} data rows, found {rows_read}"),
        ));
    }
    Raster::new(ncols, nrows, xll, yll, cellsize, nodata, values, kind).map_err(|e| err(1, e.to_string()))
}

/// Canonical serialization: lowercase header keys in fixed order, one data
/// line per row.
pub fn raster_to_string(r: &Raster) -> String {
    let mut out = String::with_capacity(r.values().len() * 8 + 128);
    let _ = writeln!(out, "ncols {}", r.ncols());
    let _ = writeln!(out, "nrows {}", r.nrows());
    let _ = writeln!(out, "xllcorner {}", format_float(r.xll()));
    let _ = writeln!(out, "yllcorner {}", format_float(r.yll()));
    let _ = writeln!(out, "cellsize {}", format_float(r.cellsize()));
    let _ = writeln!(out, "nodata_value {}", format_float(r.nodata()));
    for row in r.values().chunks(r.ncols()) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&format_float(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_raster(r: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, raster_to_string(r)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let r = parse_raster(
            "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n7\n",
            RasterKind::Continuous,
        )
        .unwrap();
        assert_eq!(r.values(), [7.0]);
        assert_eq!(r.nodata(), -9999.0);
    }

    #[test]
    fn short_row_reports_its_line() {
        let text = "NCOLS 3\nNROWS 2\nXLLCORNER 0\nYLLCORNER 0\nCELLSIZE 1\n1 2 3\n4 5\n";
        let err = parse_raster(text, RasterKind::Continuous).unwrap_err();
        assert!(matches!(err, Error::Load { line: Some(7), .. }), "{err:?}");
    }

    #[test]
    fn malformed_headers() {
        assert!(parse_raster("ncols x\n", RasterKind::Continuous).is_err());
        assert!(parse_raster("ncols 1\nnrows 1\nxllcorner 0\ncellsize 1\n1\n", RasterKind::Continuous).is_err());
        let rect = "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ndx 1\ndy 2\n1\n";
        assert!(parse_raster(rect, RasterKind::Continuous).is_err());
        let extra = "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1\n2\n";
        assert!(matches!(
            parse_raster(extra, RasterKind::Continuous),
            Err(Error::Load { line: Some(7), .. })
        ));
    }

    #[test]
    fn canonical_output_and_round_trip() {
        let r = Raster::new(
            3,
            2,
            -10.5,
            20.25,
            0.1,
            -9999.0,
            vec![1.0, -9999.0, 0.1 + 0.2, 4.0, 5.5, -6.0],
            RasterKind::Continuous,
        )
        .unwrap();
        let text = raster_to_string(&r);
        assert!(text.starts_with(
            "ncols 3\nnrows 2\nxllcorner -10.5\nyllcorner 20.25\ncellsize 0.1\nnodata_value -9999\n1 -9999 0.30000000000000004\n"
        ));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.asc");
        write_raster(&r, &p).unwrap();
        assert_eq!(load_raster(&p, RasterKind::Continuous).unwrap(), r);
    }
}
