//! Rasterized open sets and the inward filling operator.
//!
//! An open set `O ⊂ R^d` (d = 2, 3) is represented by a box of cubic cells, a
//! subset of which are marked inside. Everything outside the array, and every
//! cell not marked inside, is the complement of `O`. Connectivity is face
//! adjacency. The one-point compactification `O_∞` is realized by a virtual
//! node `∞` adjacent to the *frontier band*: the inside cells that touch the
//! array frame or a non-inside cell.
//!
//! Cells are indexed with the first axis fastest: `i0 + n0·(i1 + n1·i2)`.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Dimension;
use crate::measures::DiscreteMeasure;

#[derive(Debug, Clone, PartialEq)]
pub struct GridOpenSet {
    dim: Dimension,
    origin: Vec<f64>,
    spacing: f64,
    shape: Vec<usize>,
    inside: Vec<bool>,
}

/// A set of cells of one grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    mask: Vec<bool>,
    count: usize,
}

impl CellSet {
    pub fn empty(n_cells: usize) -> Self {
        CellSet {
            mask: vec![false; n_cells],
            count: 0,
        }
    }

    /// Cells are not checked against any grid; indices past `n_cells` panic.
    pub fn from_cells<I: IntoIterator<Item = usize>>(n_cells: usize, cells: I) -> Self {
        let mut set = CellSet::empty(n_cells);
        for c in cells {
            set.insert(c);
        }
        set
    }

    fn from_mask(mask: Vec<bool>) -> Self {
        let count = mask.iter().filter(|&&b| b).count();
        CellSet { mask, count }
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.mask.get(cell).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, cell: usize) {
        if !self.mask[cell] {
            self.mask[cell] = true;
            self.count += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Cells in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn is_subset_of(&self, other: &CellSet) -> bool {
        self.mask.len() == other.mask.len() && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        CellSet::from_mask(self.mask.iter().zip(&other.mask).map(|(&a, &b)| a || b).collect())
    }

    pub fn n_cells(&self) -> usize {
        self.mask.len()
    }
}

#[derive(Serialize, Deserialize)]
struct MaskHeader {
    origin: Vec<f64>,
    spacing: f64,
}

impl GridOpenSet {
    pub fn new(origin: Vec<f64>, spacing: f64, shape: Vec<usize>, inside: Vec<bool>) -> Result<Self> {
        let d = shape.len();
        if !(d == 2 || d == 3) {
            return Err(Error::domain(format!("grid sets need d = 2 or 3, got {d}")));
        }
        if origin.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: origin.len(),
            });
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::domain(format!("spacing must be positive, got {spacing}")));
        }
        let n: usize = shape.iter().product();
        if n == 0 || inside.len() != n {
            return Err(Error::domain(format!(
                "inside mask has {} cells, shape {shape:?} needs {n}",
                inside.len()
            )));
        }
        if !inside.iter().any(|&b| b) {
            return Err(Error::domain("open set has no inside cell"));
        }
        Ok(GridOpenSet {
            dim: Dimension::new(d)?,
            origin,
            spacing,
            shape,
            inside,
        })
    }

    /// Every cell of the box is inside.
    pub fn full_box(origin: Vec<f64>, spacing: f64, shape: Vec<usize>) -> Result<Self> {
        let n = shape.iter().product();
        Self::new(origin, spacing, shape, vec![true; n])
    }

    /// Cells whose center satisfies `inside`.
    pub fn from_predicate<F: Fn(&[f64]) -> bool>(
        origin: Vec<f64>,
        spacing: f64,
        shape: Vec<usize>,
        inside: F,
    ) -> Result<Self> {
        let n: usize = shape.iter().product();
        let probe = GridOpenSet {
            dim: Dimension::new(shape.len().max(1))?,
            origin: origin.clone(),
            spacing,
            shape: shape.clone(),
            inside: Vec::new(),
        };
        let mask = (0..n).map(|i| inside(&probe.cell_center(i))).collect();
        Self::new(origin, spacing, shape, mask)
    }

    /// A full box of spacing `h` covering `[lo, hi]` with `margin` extra cells per side.
    pub fn covering_box(lo: &[f64], hi: &[f64], spacing: f64, margin: usize) -> Result<Self> {
        let origin: Vec<f64> = lo.iter().map(|v| v - margin as f64 * spacing).collect();
        let shape = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| ((b - a) / spacing).ceil() as usize + 2 * margin + 1)
            .collect();
        Self::full_box(origin, spacing, shape)
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn n_cells(&self) -> usize {
        self.inside.len()
    }

    pub fn is_inside(&self, cell: usize) -> bool {
        self.inside[cell]
    }

    pub fn inside_cells(&self) -> CellSet {
        CellSet::from_mask(self.inside.clone())
    }

    /// Lower and upper corners of the array box.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let hi = self
            .origin
            .iter()
            .zip(&self.shape)
            .map(|(o, n)| o + *n as f64 * self.spacing)
            .collect();
        (self.origin.clone(), hi)
    }

    /// Diameter of the array box.
    pub fn diameter(&self) -> f64 {
        self.shape
            .iter()
            .map(|n| (*n as f64 * self.spacing).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn coords(&self, cell: usize) -> [usize; 3] {
        let mut c = [0; 3];
        let mut rest = cell;
        for (k, n) in self.shape.iter().enumerate() {
            c[k] = rest % n;
            rest /= n;
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        for k in (0..self.shape.len()).rev() {
            idx = idx * self.shape[k] + coords[k];
        }
        idx
    }

    pub fn cell_center(&self, cell: usize) -> Vec<f64> {
        let c = self.coords(cell);
        (0..self.shape.len())
            .map(|k| self.origin[k] + (c[k] as f64 + 0.5) * self.spacing)
            .collect()
    }

    /// The array cell containing `p` (half-open cells), inside or not.
    pub fn cell_of(&self, p: &[f64]) -> Option<usize> {
        if p.len() != self.shape.len() {
            return None;
        }
        let mut coords = [0usize; 3];
        for k in 0..p.len() {
            let t = ((p[k] - self.origin[k]) / self.spacing).floor();
            if !(t >= 0.0 && (t as usize) < self.shape[k]) {
                return None;
            }
            coords[k] = t as usize;
        }
        Some(self.index(&coords[..p.len()]))
    }

    /// Distance from `p` to the nearest face of the cell containing it.
    pub fn distance_to_cell_faces(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(&self.origin)
            .map(|(x, o)| {
                let t = (x - o) / self.spacing;
                let frac = t - t.floor();
                frac.min(1.0 - frac) * self.spacing
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Face neighbours inside the array, and whether `cell` lies on the frame.
    fn neighbors(&self, cell: usize, out: &mut Vec<usize>) -> bool {
        out.clear();
        let c = self.coords(cell);
        let mut on_frame = false;
        let mut stride = 1;
        for k in 0..self.shape.len() {
            if c[k] > 0 {
                out.push(cell - stride);
            } else {
                on_frame = true;
            }
            if c[k] + 1 < self.shape[k] {
                out.push(cell + stride);
            } else {
                on_frame = true;
            }
            stride *= self.shape[k];
        }
        on_frame
    }

    /// Whether an inside cell is adjacent to the complement (frame or outside cell).
    pub fn touches_complement(&self, cell: usize) -> bool {
        let mut nb = Vec::with_capacity(6);
        let on_frame = self.neighbors(cell, &mut nb);
        on_frame || nb.iter().any(|&n| !self.inside[n])
    }

    /// Inside cells adjacent to the complement of the open set.
    pub fn frontier_band(&self) -> CellSet {
        CellSet::from_mask(
            (0..self.n_cells())
                .map(|i| self.inside[i] && self.touches_complement(i))
                .collect(),
        )
    }

    /// Builds a cell set, checking that every cell is inside.
    pub fn cell_set<I: IntoIterator<Item = usize>>(&self, cells: I) -> Result<CellSet> {
        let mut set = CellSet::empty(self.n_cells());
        for c in cells {
            if c >= self.n_cells() || !self.inside[c] {
                return Err(Error::domain(format!("cell {c} is not an inside cell")));
            }
            set.insert(c);
        }
        Ok(set)
    }

    /// Inside cells whose center satisfies `pred`.
    pub fn cells_where<F: Fn(&[f64]) -> bool>(&self, pred: F) -> CellSet {
        CellSet::from_mask(
            (0..self.n_cells())
                .map(|i| self.inside[i] && pred(&self.cell_center(i)))
                .collect(),
        )
    }

    /// Center points of every cell outside `set` (inside cells only).
    pub fn centers_outside(&self, set: &CellSet) -> Vec<Vec<f64>> {
        (0..self.n_cells())
            .filter(|&i| self.inside[i] && !set.contains(i))
            .map(|i| self.cell_center(i))
            .collect()
    }

    /// The same open set in an array enlarged by `pad` cells on every side.
    pub fn padded(&self, pad: usize) -> GridOpenSet {
        let shape: Vec<usize> = self.shape.iter().map(|n| n + 2 * pad).collect();
        let origin = self.origin.iter().map(|o| o - pad as f64 * self.spacing).collect();
        let mut inside = vec![false; shape.iter().product()];
        let mut g = GridOpenSet {
            dim: self.dim,
            origin,
            spacing: self.spacing,
            shape,
            inside: Vec::new(),
        };
        for i in 0..self.n_cells() {
            if self.inside[i] {
                inside[self.padded_index(i, pad, &g.shape)] = true;
            }
        }
        g.inside = inside;
        g
    }

    fn padded_index(&self, cell: usize, pad: usize, new_shape: &[usize]) -> usize {
        let c = self.coords(cell);
        let mut idx = 0;
        for k in (0..new_shape.len()).rev() {
            idx = idx * new_shape[k] + c[k] + pad;
        }
        idx
    }

    /// Maps a cell set of this grid into [`GridOpenSet::padded`]`(pad)`.
    pub fn map_to_padded(&self, set: &CellSet, pad: usize) -> CellSet {
        let shape: Vec<usize> = self.shape.iter().map(|n| n + 2 * pad).collect();
        let mut out = CellSet::empty(shape.iter().product());
        for c in set.iter() {
            out.insert(self.padded_index(c, pad, &shape));
        }
        out
    }

    /// Returns a copy with the given extra cells marked inside.
    pub fn with_inside<I: IntoIterator<Item = usize>>(&self, extra: I) -> GridOpenSet {
        let mut g = self.clone();
        for c in extra {
            g.inside[c] = true;
        }
        g
    }

    /// Parses the mask format: a one-line JSON header `{"origin": [...],
    /// "spacing": h}` followed by rows of `.` (outside) and `#` (inside).
    /// Row `j` is the second-axis index `j`, column `i` the first-axis index.
    /// In 3D, blank-line-separated blocks are successive third-axis slices.
    pub fn parse_mask(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header_line = lines
            .by_ref()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| Error::Format("empty mask file".into()))?;
        let header: MaskHeader =
            serde_json::from_str(header_line).map_err(|e| Error::Format(format!("bad mask header: {e}")))?;
        let mut slices: Vec<Vec<Vec<bool>>> = vec![Vec::new()];
        for line in lines {
            let line = line.trim_end();
            if line.trim().is_empty() {
                if !slices.last().unwrap().is_empty() {
                    slices.push(Vec::new());
                }
                continue;
            }
            let row = line
                .chars()
                .map(|ch| match ch {
                    '#' => Ok(true),
                    '.' => Ok(false),
                    other => Err(Error::Format(format!("unexpected mask character {other:?}"))),
                })
                .collect::<Result<Vec<bool>>>()?;
            slices.last_mut().unwrap().push(row);
        }
        if slices.last().is_some_and(|s| s.is_empty()) {
            slices.pop();
        }
        let d = header.origin.len();
        let expected_slices = if d == 2 { 1 } else { slices.len() };
        if slices.is_empty() || slices.len() != expected_slices {
            return Err(Error::Format(format!(
                "{} mask blocks for a {d}-dimensional header",
                slices.len()
            )));
        }
        let ny = slices[0].len();
        let nx = slices[0].first().map_or(0, Vec::len);
        let mut inside = Vec::with_capacity(nx * ny * slices.len());
        for s in &slices {
            if s.len() != ny || s.iter().any(|r| r.len() != nx) {
                return Err(Error::Format("mask rows have unequal lengths".into()));
            }
            for row in s {
                inside.extend(row);
            }
        }
        let shape = if d == 2 {
            vec![nx, ny]
        } else {
            vec![nx, ny, slices.len()]
        };
        Self::new(header.origin, header.spacing, shape, inside)
    }

    pub fn to_mask_string(&self) -> String {
        let header = MaskHeader {
            origin: self.origin.clone(),
            spacing: self.spacing,
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        let (nx, ny) = (self.shape[0], self.shape[1]);
        let nz = self.shape.get(2).copied().unwrap_or(1);
        for k in 0..nz {
            if k > 0 {
                out.push('\n');
            }
            for j in 0..ny {
                for i in 0..nx {
                    out.push(if self.inside[i + nx * (j + ny * k)] { '#' } else { '.' });
                }
                let _ = writeln!(out);
            }
        }
        out
    }

    pub fn load_mask(path: &Path) -> Result<Self> {
        Self::parse_mask(&std::fs::read_to_string(path)?)
    }
}

/// Face-connected components of `cells`, ordered by their smallest cell index.
pub fn components(g: &GridOpenSet, cells: &CellSet) -> Vec<CellSet> {
    let n = g.n_cells();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    let mut nb = Vec::with_capacity(6);
    for start in cells.iter() {
        if seen[start] {
            continue;
        }
        let mut comp = CellSet::empty(n);
        seen[start] = true;
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            comp.insert(c);
            g.neighbors(c, &mut nb);
            for &m in &nb {
                if !seen[m] && cells.contains(m) {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// True iff no cell of `s` lies in the frontier band of `g`.
pub fn is_relatively_compact(g: &GridOpenSet, s: &CellSet) -> bool {
    s.n_cells() == g.n_cells() && s.iter().all(|c| g.is_inside(c) && !g.touches_complement(c))
}

/// Inward filling of `s` in `g`: the complement, within the inside cells, of
/// the component of `(inside ∖ s) ∪ {∞}` that contains `∞`.
pub fn inward_fill(g: &GridOpenSet, s: &CellSet) -> Result<CellSet> {
    if !is_relatively_compact(g, s) {
        return Err(Error::NotRelativelyCompact);
    }
    let reached = reach_from_infinity(g, s);
    Ok(CellSet::from_mask(
        (0..g.n_cells()).map(|i| g.is_inside(i) && !reached[i]).collect(),
    ))
}

/// Inside cells outside `s` connected to `∞` through inside cells outside `s`.
fn reach_from_infinity(g: &GridOpenSet, s: &CellSet) -> Vec<bool> {
    let n = g.n_cells();
    let mut reached = vec![false; n];
    let mut queue = VecDeque::new();
    for c in 0..n {
        if g.is_inside(c) && !s.contains(c) && g.touches_complement(c) {
            reached[c] = true;
            queue.push_back(c);
        }
    }
    let mut nb = Vec::with_capacity(6);
    while let Some(c) = queue.pop_front() {
        g.neighbors(c, &mut nb);
        for &m in &nb {
            if !reached[m] && g.is_inside(m) && !s.contains(m) {
                reached[m] = true;
                queue.push_back(m);
            }
        }
    }
    reached
}

/// Cells containing at least one atom of the given measures.
pub fn rasterize_support(g: &GridOpenSet, measures: &[&DiscreteMeasure]) -> Result<CellSet> {
    let mut set = CellSet::empty(g.n_cells());
    for mu in measures {
        if mu.dim() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: g.dim().get(),
                found: mu.dim().get(),
            });
        }
        for p in mu.support() {
            match g.cell_of(p) {
                Some(c) if g.is_inside(c) => set.insert(c),
                _ => return Err(Error::AtomOutsideGrid(p.to_vec())),
            }
        }
    }
    Ok(set)
}

/// `S_O`: inward filling of the rasterized joint support.
pub fn support_infill(g: &GridOpenSet, measures: &[&DiscreteMeasure]) -> Result<CellSet> {
    inward_fill(g, &rasterize_support(g, measures)?)
}
