//! Dense data matrices, grayscale images and their on-disk formats.
//!
//! Two persistence formats are supported:
//!
//! * headerless CSV, one matrix row per line, comma separated, `\n` endings;
//! * binary (P5) and ASCII (P2) PGM with `maxval = 255`.
//!
//! Images enter the numeric side as columns scaled to `[0, 1]` (pixel / 255)
//! and leave it clamped and rounded back to 8-bit.

use std::fmt::Write as _;
use std::fs;
use std::ops::Deref;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A finite `d x N` matrix with one sample per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        if let Some(v) = m.iter().find(|v| !v.is_finite()) {
            return Err(Error::numerical(format!(
                "non-finite entry {v} in data matrix"
            )));
        }
        Ok(DataMatrix(m))
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.len();
        let d = columns.first().map(Vec::len).ok_or(Error::EmptyInput)?;
        if let Some(bad) = columns.iter().find(|c| c.len() != d) {
            return Err(Error::dim(format!(
                "column of length {} among columns of length {d}",
                bad.len()
            )));
        }
        Self::new(DMatrix::from_fn(d, n, |i, j| columns[j][i]))
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Sample count `N`.
    pub fn n_samples(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl Deref for DataMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl AsRef<DMatrix<f64>> for DataMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text)
}

pub fn parse_matrix_csv(text: &str) -> Result<DataMatrix> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for tok in line.split(',') {
            let tok = tok.trim();
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("not a number: {tok:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("non-finite value {tok:?}"),
                });
            }
            values.push(v);
        }
        let width = values.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Format(format!(
                    "ragged rows: line {} has {width} fields, expected {c}",
                    lineno + 1
                )))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or(Error::EmptyInput)?;
    DataMatrix::from_row_slice(rows, cols, &values)
}

/// CSV text for a matrix. `f64`'s `Display` prints the shortest string that
/// parses back to the identical value, so the round trip is exact.
pub fn format_matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 12);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", m[(i, j)]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_matrix_csv(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix_csv(m)).map_err(|e| Error::io(path, e))
}

/// Scale every nonzero column to unit Euclidean norm. Zero columns are kept.
pub fn column_normalize(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    out
}

/// 8-bit grayscale image, pixels stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width * height != pixels.len() {
            return Err(Error::dim(format!(
                "{}x{} image with {} pixels",
                width,
                height,
                pixels.len()
            )));
        }
        Ok(ImageGrid {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        ImageGrid {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Nearest-neighbour resampling: target `(x, y)` reads source
    /// `(floor(x * w_in / w), floor(y * h_in / h))`.
    pub fn resize_nearest(&self, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::dim("resize target must be non-empty"));
        }
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            let sy = y * self.height / height;
            for x in 0..width {
                let sx = x * self.width / width;
                pixels.push(self.get(sx, sy));
            }
        }
        ImageGrid::new(width, height, pixels)
    }

    /// Pixels as a `[0, 1]` column vector in row-major order.
    pub fn to_column(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| f64::from(p) / 255.0).collect()
    }

    /// Inverse of [`ImageGrid::to_column`]; values are scaled by 255, clamped
    /// to `[0, 255]` and rounded.
    pub fn from_column(values: &[f64], width: usize, height: usize) -> Result<Self> {
        let pixels = values.iter().map(|&v| to_pixel(v * 255.0)).collect();
        ImageGrid::new(width, height, pixels)
    }
}

fn to_pixel(v: f64) -> u8 {
    if v.is_nan() {
        0
    } else {
        v.round().clamp(0.0, 255.0) as u8
    }
}

/// Stack equally sized images as the columns of a data matrix.
pub fn images_to_matrix(images: &[ImageGrid]) -> Result<DataMatrix> {
    let first = images.first().ok_or(Error::EmptyInput)?;
    if let Some(bad) = images
        .iter()
        .find(|g| g.width != first.width || g.height != first.height)
    {
        return Err(Error::dim(format!(
            "image of size {}x{} among {}x{} images",
            bad.width, bad.height, first.width, first.height
        )));
    }
    let cols: Vec<Vec<f64>> = images.iter().map(ImageGrid::to_column).collect();
    DataMatrix::from_columns(&cols)
}

pub fn matrix_to_images(m: &DMatrix<f64>, width: usize, height: usize) -> Result<Vec<ImageGrid>> {
    if m.nrows() != width * height {
        return Err(Error::dim(format!(
            "{} rows cannot form {width}x{height} images",
            m.nrows()
        )));
    }
    m.column_iter()
        .map(|c| ImageGrid::from_column(c.as_slice(), width, height))
        .collect()
}

pub fn load_pgm(path: impl AsRef<Path>, resize: Option<(usize, usize)>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = parse_pgm(&bytes)?;
    match resize {
        Some((w, h)) => img.resize_nearest(w, h),
        None => Ok(img),
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token().ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("missing {what}"),
        })?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad {what}: {:?}", String::from_utf8_lossy(tok))))
    }
}

pub fn parse_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    let mut rd = HeaderReader { bytes, pos: 0 };
    let binary = match rd.token() {
        Some(b"P5") => true,
        Some(b"P2") => false,
        Some(other) => {
            return Err(Error::Format(format!(
                "bad PGM magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
        None => return Err(Error::EmptyInput),
    };
    let width = rd.number("width")?;
    let height = rd.number("height")?;
    let maxval = rd.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("degenerate size {width}x{height}")));
    }
    let count = width * height;
    let pixels = if binary {
        // exactly one whitespace byte separates maxval from the raster
        let start = rd.pos + 1;
        if start > bytes.len() || bytes.len() - start < count {
            return Err(Error::Parse {
                line: 0,
                msg: format!("truncated raster: expected {count} bytes"),
            });
        }
        bytes[start..start + count].to_vec()
    } else {
        let mut px = Vec::with_capacity(count);
        for k in 0..count {
            let tok = rd.token().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("truncated raster: {k} of {count} pixels"),
            })?;
            let v: u32 = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: format!("bad pixel {:?}", String::from_utf8_lossy(tok)),
                })?;
            if v > 255 {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("pixel {v} exceeds maxval"),
                });
            }
            px.push(v as u8);
        }
        px
    };
    ImageGrid::new(width, height, pixels)
}

pub fn encode_pgm(g: &ImageGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", g.width, g.height).into_bytes();
    out.extend_from_slice(&g.pixels);
    out
}

pub fn save_pgm(g: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(g)).map_err(|e| Error::io(path, e))
}

/// Grid placement of equally sized tiles on one canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileLayout {
    pub rows: usize,
    pub cols: usize,
    pub tile_width: usize,
    pub tile_height: usize,
    pub separator: usize,
    pub background: u8,
}

impl TileLayout {
    pub fn canvas_size(&self) -> (usize, usize) {
        let w = self.cols * self.tile_width + self.cols.saturating_sub(1) * self.separator;
        let h = self.rows * self.tile_height + self.rows.saturating_sub(1) * self.separator;
        (w, h)
    }
}

/// Paste `tiles[r][c]` into a canvas. Missing tiles leave the background.
pub fn tile_images(layout: &TileLayout, tiles: &[Vec<ImageGrid>]) -> Result<ImageGrid> {
    let (cw, ch) = layout.canvas_size();
    let mut canvas = ImageGrid::filled(cw, ch, layout.background);
    if tiles.len() > layout.rows {
        return Err(Error::dim(format!(
            "{} tile rows for a {}-row layout",
            tiles.len(),
            layout.rows
        )));
    }
    for (r, row) in tiles.iter().enumerate() {
        if row.len() > layout.cols {
            return Err(Error::dim(format!(
                "{} tiles for a {}-column layout",
                row.len(),
                layout.cols
            )));
        }
        for (c, tile) in row.iter().enumerate() {
            if tile.width != layout.tile_width || tile.height != layout.tile_height {
                return Err(Error::dim("tile size differs from layout"));
            }
            let x0 = c * (layout.tile_width + layout.separator);
            let y0 = r * (layout.tile_height + layout.separator);
            for y in 0..tile.height {
                let dst = (y0 + y) * cw + x0;
                canvas.pixels[dst..dst + tile.width]
                    .copy_from_slice(&tile.pixels[y * tile.width..(y + 1) * tile.width]);
            }
        }
    }
    Ok(canvas)
}

/// Recovery panel: one row per component (original, principal `XZ`,
/// salient `LX`, error `E`), one column per sample, 2-pixel separators.
pub fn recovery_panel(
    components: &[&DMatrix<f64>],
    width: usize,
    height: usize,
    max_samples: usize,
) -> Result<ImageGrid> {
    let n = components
        .first()
        .map(|m| m.ncols())
        .ok_or(Error::EmptyInput)?;
    let shown = n.min(max_samples.max(1));
    let mut rows = Vec::with_capacity(components.len());
    for m in components {
        let cols = m.columns(0, shown).into_owned();
        rows.push(matrix_to_images(&cols, width, height)?);
    }
    let layout = TileLayout {
        rows: components.len(),
        cols: shown,
        tile_width: width,
        tile_height: height,
        separator: 2,
        background: 255,
    };
    tile_images(&layout, &rows)
}
