//! Grid containers: fractional-occupancy sets and sampled functions on a
//! uniform lattice over the compact window [−L, L]ⁿ.
//!
//! Occupancy is fractional in [0, 1] so that symmetrizations can preserve
//! measure at machine precision; estimators that need a crisp boundary
//! threshold at 0.5. The cell count per axis is even, so the origin is a
//! cell corner and central symmetry is representable.
//!
//! File format (`MUGRID v1`): one header line
//! `MUGRID v1 [FN] n N L density-id`, then row-major values as text floats,
//! one grid line per row (x₁ fastest). `.csv` files carry the same layout
//! with comma separators.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::{GridDensity, DEFAULT_QUAD_TOL};
use crate::error::{Error, Result};

/// Uniform lattice over [−L, L]ⁿ with N cells per axis, N even.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub cells: usize,
    pub half_width: f64,
}

impl GridSpec {
    pub fn new(n: usize, cells: usize, half_width: f64) -> Result<Self> {
        if !(n == 2 || n == 3) {
            return Err(Error::Grid(format!("grid dimension must be 2 or 3, got {n}")));
        }
        if cells == 0 || cells % 2 != 0 {
            return Err(Error::Grid(format!("cells per axis must be even and positive, got {cells}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Grid(format!("window half-width must be positive, got {half_width}")));
        }
        Ok(Self {
            n,
            cells,
            half_width,
        })
    }

    /// Cell width Δ = 2L/N.
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    pub fn total_cells(&self) -> usize {
        self.cells.pow(self.n as u32)
    }

    /// Number of x₁-lines (contiguous runs of N cells).
    pub fn lines(&self) -> usize {
        self.cells.pow(self.n as u32 - 1)
    }

    /// Center coordinate of axis index i.
    pub fn axis_center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.dx()
    }

    /// Edge coordinate of axis index i (i = 0..=N).
    pub fn axis_edge(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    /// Multi-index of a flat cell index; x₁ varies fastest.
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let nn = self.cells;
        if self.n == 2 {
            [idx % nn, idx / nn, 0]
        } else {
            [idx % nn, (idx / nn) % nn, idx / (nn * nn)]
        }
    }

    /// Cell-center coordinates; entries beyond `n` are zero.
    pub fn cell_coords(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut out = [0.0; 3];
        for k in 0..self.n {
            out[k] = self.axis_center(mi[k]);
        }
        out
    }

    /// x′ coordinates (all axes but x₁) of a line index.
    pub fn line_rest_coords(&self, line: usize) -> [f64; 2] {
        let nn = self.cells;
        if self.n == 2 {
            [self.axis_center(line), 0.0]
        } else {
            [self.axis_center(line % nn), self.axis_center(line / nn)]
        }
    }

    /// Whether the multi-index touches the outermost ring of given width.
    pub fn on_boundary(&self, mi: &[usize; 3], ring: usize) -> bool {
        (0..self.n).any(|k| mi[k] < ring || mi[k] >= self.cells - ring)
    }

    pub fn label(&self) -> String {
        format!("n={};N={};L={}", self.n, self.cells, self.half_width)
    }
}

/// Fractional-occupancy set on a grid with its density handle.
#[derive(Clone, Debug)]
pub struct GridSet {
    spec: GridSpec,
    density: GridDensity,
    occ: Vec<f64>,
    boolean: bool,
}

impl GridSet {
    /// Validates the occupancy range and the support-interior invariant
    /// (no occupied cells on the outermost ring, which guards dilation and
    /// symmetrization overflow).
    pub fn from_occupancy(spec: GridSpec, density: GridDensity, occ: Vec<f64>) -> Result<Self> {
        if density.dim() != spec.n {
            return Err(Error::Grid(format!(
                "density dimension {} does not match grid dimension {}",
                density.dim(),
                spec.n
            )));
        }
        if occ.len() != spec.total_cells() {
            return Err(Error::Grid(format!(
                "occupancy length {} does not match {} cells",
                occ.len(),
                spec.total_cells()
            )));
        }
        let mut boolean = true;
        for (idx, &v) in occ.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::Grid(format!("occupancy out of [0,1] at cell {idx}: {v}")));
            }
            if v != 0.0 && v != 1.0 {
                boolean = false;
            }
            if v > 0.0 && spec.on_boundary(&spec.multi_index(idx), 1) {
                return Err(Error::Grid(
                    "occupied cell on the window boundary: support must be strictly interior"
                        .into(),
                ));
            }
        }
        Ok(Self {
            spec,
            density,
            occ,
            boolean,
        })
    }

    /// Fractional rasterization of `{level > 0}` with `subs`² (or ³)
    /// subsamples per cell.
    pub fn rasterize<F>(spec: GridSpec, density: GridDensity, level: F, subs: usize) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let subs = subs.max(1);
        let dx = spec.dx();
        let inv = 1.0 / subs as f64;
        let occ = crate::par::map_indexed(spec.total_cells(), |idx| {
            let base = spec.cell_coords(idx);
            let mut hits = 0usize;
            let mut total = 0usize;
            let mut point = [0.0; 3];
            for sx in 0..subs {
                for sy in 0..subs {
                    let sz_range = if spec.n == 3 { subs } else { 1 };
                    for sz in 0..sz_range {
                        point[0] = base[0] + ((sx as f64 + 0.5) * inv - 0.5) * dx;
                        point[1] = base[1] + ((sy as f64 + 0.5) * inv - 0.5) * dx;
                        if spec.n == 3 {
                            point[2] = base[2] + ((sz as f64 + 0.5) * inv - 0.5) * dx;
                        }
                        if level(&point[..spec.n]) > 0.0 {
                            hits += 1;
                        }
                        total += 1;
                    }
                }
            }
            hits as f64 / total as f64
        });
        Self::from_occupancy(spec, density, occ)
    }

    /// Boolean rasterization by cell-center test.
    pub fn rasterize_boolean<F>(spec: GridSpec, density: GridDensity, level: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let occ = crate::par::map_indexed(spec.total_cells(), |idx| {
            let c = spec.cell_coords(idx);
            if level(&c[..spec.n]) > 0.0 {
                1.0
            } else {
                0.0
            }
        });
        Self::from_occupancy(spec, density, occ)
    }

    /// Centered disk / ball of the given radius, fractional occupancy.
    pub fn centered_ball(spec: GridSpec, density: GridDensity, radius: f64, subs: usize) -> Result<Self> {
        Self::rasterize(
            spec,
            density,
            move |x| radius - x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            subs,
        )
    }

    /// Axis-aligned box given by center and half-widths, fractional.
    pub fn rect(
        spec: GridSpec,
        density: GridDensity,
        center: &[f64],
        half_widths: &[f64],
        subs: usize,
    ) -> Result<Self> {
        let c: Vec<f64> = center.to_vec();
        let h: Vec<f64> = half_widths.to_vec();
        Self::rasterize(
            spec,
            density,
            move |x| {
                x.iter()
                    .zip(c.iter().zip(&h))
                    .map(|(xi, (ci, hi))| hi - (xi - ci).abs())
                    .fold(f64::INFINITY, f64::min)
            },
            subs,
        )
    }

    /// Crisp copy: occupancy thresholded at 0.5.
    pub fn thresholded(&self) -> Self {
        let occ = self
            .occ
            .iter()
            .map(|&v| if v >= 0.5 { 1.0 } else { 0.0 })
            .collect();
        Self {
            spec: self.spec,
            density: self.density.clone(),
            occ,
            boolean: true,
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn density(&self) -> &GridDensity {
        &self.density
    }

    pub fn occ(&self) -> &[f64] {
        &self.occ
    }

    pub fn is_boolean(&self) -> bool {
        self.boolean
    }

    /// Support mask at the 0.5 threshold (cells counted as occupied by the
    /// crisp estimators and the distance transform).
    pub fn support_mask(&self) -> Vec<bool> {
        self.occ.iter().map(|&v| v >= 0.5).collect()
    }

    /// Cell-wise symmetric difference mass Σ |occ_a − occ_b| · w.
    pub fn symmetric_difference_measure(&self, other: &GridSet) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::Grid("grids differ".into()));
        }
        let spec = self.spec;
        let density = self.density.clone();
        let dxn = spec.dx().powi(spec.n as i32);
        let nn = spec.cells;
        let a = &self.occ;
        let b = &other.occ;
        Ok(crate::par::sum_rows(spec.lines(), |line| {
            let base = line * nn;
            let mut acc = 0.0;
            for i in 0..nn {
                let idx = base + i;
                let w = density.eval(&spec.cell_coords(idx)[..spec.n]) * dxn;
                acc += (a[idx] - b[idx]).abs() * w;
            }
            acc
        }))
    }
}

/// Sampled nonnegative function on the lattice.
#[derive(Clone, Debug)]
pub struct GridFunction {
    spec: GridSpec,
    density: GridDensity,
    values: Vec<f64>,
    compact: bool,
}

impl GridFunction {
    /// `compact` asserts that the support keeps a 2-cell margin to the
    /// window (required by the gradient stencils).
    pub fn from_values(
        spec: GridSpec,
        density: GridDensity,
        values: Vec<f64>,
        compact: bool,
    ) -> Result<Self> {
        if density.dim() != spec.n {
            return Err(Error::Grid(format!(
                "density dimension {} does not match grid dimension {}",
                density.dim(),
                spec.n
            )));
        }
        if values.len() != spec.total_cells() {
            return Err(Error::Grid(format!(
                "value length {} does not match {} cells",
                values.len(),
                spec.total_cells()
            )));
        }
        for (idx, &v) in values.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Grid(format!("function values must be >= 0, got {v} at {idx}")));
            }
            if compact && v > 0.0 && spec.on_boundary(&spec.multi_index(idx), 2) {
                return Err(Error::Grid(
                    "compactly supported function has values within 2 cells of the window"
                        .into(),
                ));
            }
        }
        Ok(Self {
            spec,
            density,
            values,
            compact,
        })
    }

    /// Sample a nonnegative function at cell centers (negative values are a
    /// domain error, not clamped).
    pub fn sample<F>(spec: GridSpec, density: GridDensity, f: F, compact: bool) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values = crate::par::map_indexed(spec.total_cells(), |idx| {
            let c = spec.cell_coords(idx);
            f(&c[..spec.n])
        });
        Self::from_values(spec, density, values, compact)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn density(&self) -> &GridDensity {
        &self.density
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_compact(&self) -> bool {
        self.compact
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// Replace the value array (same length, revalidated).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::from_values(self.spec, self.density.clone(), values, self.compact)
    }

    /// Indicator of a set as a function (occupancy as values).
    pub fn indicator(set: &GridSet) -> Result<Self> {
        Self::from_values(set.spec(), set.density().clone(), set.occ().to_vec(), false)
    }
}

enum Payload<'a> {
    Set(&'a GridSet),
    Fn(&'a GridFunction),
}

fn write_mugrid(path: &Path, payload: Payload) -> Result<()> {
    let comma = path.extension().map(|e| e == "csv").unwrap_or(false);
    let sep = if comma { "," } else { " " };
    let (spec, density_id, data, tag) = match payload {
        Payload::Set(s) => (s.spec, s.density.id(), &s.occ, ""),
        Payload::Fn(f) => (f.spec, f.density.id(), &f.values, "FN "),
    };
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "MUGRID v1 {tag}{} {} {} {}",
        spec.n, spec.cells, spec.half_width, density_id
    )?;
    let nn = spec.cells;
    for line in 0..spec.lines() {
        let row = &data[line * nn..(line + 1) * nn];
        let mut s = String::with_capacity(nn * 20);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push_str(sep);
            }
            s.push_str(&format!("{v}"));
        }
        writeln!(w, "{s}")?;
    }
    Ok(())
}

struct RawGrid {
    spec: GridSpec,
    density: GridDensity,
    data: Vec<f64>,
    is_fn: bool,
}

fn read_mugrid(path: &Path) -> Result<RawGrid> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty MUGRID file".into()))??;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() < 6 || toks[0] != "MUGRID" || toks[1] != "v1" {
        return Err(Error::Format(format!("not a MUGRID v1 header: `{header}`")));
    }
    let (is_fn, rest) = if toks[2] == "FN" {
        (true, &toks[3..])
    } else {
        (false, &toks[2..])
    };
    if rest.len() != 4 {
        return Err(Error::Format(format!("malformed MUGRID header: `{header}`")));
    }
    let n: usize = rest[0]
        .parse()
        .map_err(|_| Error::Format(format!("bad dimension `{}`", rest[0])))?;
    let cells: usize = rest[1]
        .parse()
        .map_err(|_| Error::Format(format!("bad cell count `{}`", rest[1])))?;
    let half_width: f64 = rest[2]
        .parse()
        .map_err(|_| Error::Format(format!("bad half-width `{}`", rest[2])))?;
    let spec = GridSpec::new(n, cells, half_width)?;
    let density = GridDensity::parse_id(rest[3], DEFAULT_QUAD_TOL)?;

    let mut data = Vec::with_capacity(spec.total_cells());
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let it: Box<dyn Iterator<Item = &str>> = if line.contains(',') {
            Box::new(line.split(','))
        } else {
            Box::new(line.split_whitespace())
        };
        for tok in it {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            data.push(
                tok.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad value `{tok}`")))?,
            );
        }
    }
    if data.len() != spec.total_cells() {
        return Err(Error::Format(format!(
            "expected {} values, found {}",
            spec.total_cells(),
            data.len()
        )));
    }
    Ok(RawGrid {
        spec,
        density,
        data,
        is_fn,
    })
}

impl GridSet {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_mugrid(path.as_ref(), Payload::Set(self))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let raw = read_mugrid(path.as_ref())?;
        if raw.is_fn {
            return Err(Error::Format("file holds a function (FN), not a set".into()));
        }
        Self::from_occupancy(raw.spec, raw.density, raw.data)
    }
}

impl GridFunction {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_mugrid(path.as_ref(), Payload::Fn(self))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let raw = read_mugrid(path.as_ref())?;
        if !raw.is_fn {
            return Err(Error::Format("file holds a set, not a function (FN)".into()));
        }
        // compactness is re-derived rather than trusted
        let compact = {
            let spec = raw.spec;
            raw.data.iter().enumerate().all(|(idx, &v)| {
                v == 0.0 || !spec.on_boundary(&spec.multi_index(idx), 2)
            })
        };
        Self::from_values(raw.spec, raw.density, raw.data, compact)
    }

    /// Whether a MUGRID file holds a function (`FN` tag) or a set.
    pub fn peek_is_fn(path: impl AsRef<Path>) -> Result<bool> {
        Ok(read_mugrid(path.as_ref())?.is_fn)
    }
}
