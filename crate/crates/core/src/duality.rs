//! Arens–Singer potentials and the measure ↔ potential maps.
//!
//! `forward_map` sends an Arens–Singer measure `ω` at `x` to
//! `V = pt_{ω−δ_x}`. `inverse_map` recovers a measure from a sampled field
//! with a declared pole: `c_d·ΔV` off the pole plus an atom `(1 − ρ̂)·δ_x`,
//! where `ρ̂` estimates `limsup V(y)/(−K(y,x))` as `y → x`.
//!
//! `ρ̂` is read from ring means: for `V = −ρ·K(·,x) + H` with `H` harmonic
//! near `x`, the ring mean is `−ρ·k(r) + H(x)`, so differences of ring means
//! at two radii isolate `ρ` without the `H(x)/k(r)` bias of a plain ratio.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balayage::{check_har_balayage, FAR_RING_FACTOR, FAR_RING_POINTS};
use crate::classical_domains::BallDomain;
use crate::error::{Error, Result};
use crate::geometry::{support_infill, CellSet, GridOpenSet};
use crate::kernels::{distance, on_diagonal, radial_kernel, riesz_constant, Dimension, ExtReal};
use crate::measures::DiscreteMeasure;
use crate::potentials::potential;
use crate::sphere::{sphere_nodes, spherical_mean};

/// Weights below this are dropped from recovered measures.
pub const WEIGHT_FLOOR: f64 = 1e-6;
/// Ridge parameter for rank-deficient least-squares systems.
pub const MFS_RIDGE: f64 = 1e-10;
/// Default MFS source circle radius as a multiple of the sample circumradius.
pub const MFS_SOURCE_FACTOR: f64 = 1.5;

/// A potential with a declared pole, sampled pointwise.
pub trait PotentialField: Sync {
    fn dim(&self) -> Dimension;
    fn pole(&self) -> &[f64];
    fn value(&self, y: &[f64]) -> Result<ExtReal>;
    /// Atoms of the Riesz measure away from the pole, when known.
    fn singular_support(&self) -> Option<&DiscreteMeasure>;
}

/// `V = pt_{ω−δ_x}` for an Arens–Singer measure `ω` at `x`.
#[derive(Debug, Clone)]
pub struct ASPotential {
    pole: Vec<f64>,
    base: DiscreteMeasure,
    signed: DiscreteMeasure,
    infill: CellSet,
    grid: GridOpenSet,
}

/// `P_x(ω)`. Fails with [`Error::PremiseFailed`] unless `δ_x ⪯ ω` on `g`
/// within `tol`.
pub fn forward_map(omega: &DiscreteMeasure, x: &[f64], g: &GridOpenSet, tol: f64) -> Result<ASPotential> {
    let dirac = DiscreteMeasure::dirac(x)?;
    let report = check_har_balayage(&dirac, omega, g, tol)?;
    if !report.verdict {
        return Err(Error::PremiseFailed(format!(
            "ω is not an Arens–Singer measure at {x:?} (potential residual {:.3e}, mass gap {:.3e})",
            report.potential_residual, report.mass_gap
        )));
    }
    let infill = support_infill(g, &[&dirac, omega])?;
    let signed = DiscreteMeasure::combine(1.0, omega, -1.0, &dirac)?;
    Ok(ASPotential {
        pole: x.to_vec(),
        base: omega.clone(),
        signed,
        infill,
        grid: g.clone(),
    })
}

impl ASPotential {
    pub fn pole(&self) -> &[f64] {
        &self.pole
    }

    /// The measure `ω`.
    pub fn base(&self) -> &DiscreteMeasure {
        &self.base
    }

    /// The cached infill of `{x} ∪ supp ω`.
    pub fn infill(&self) -> &CellSet {
        &self.infill
    }

    pub fn grid(&self) -> &GridOpenSet {
        &self.grid
    }

    pub fn value(&self, y: &[f64]) -> Result<ExtReal> {
        potential(&self.signed, y)
    }

    /// `max |V|` over inside cell centers outside the infill and the far sphere.
    pub fn max_abs_outside_infill(&self) -> Result<f64> {
        let mut pts = self.grid.centers_outside(&self.infill);
        let (lo, hi) = self.grid.bounds();
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        pts.extend(sphere_nodes(
            &center,
            FAR_RING_FACTOR * self.grid.diameter(),
            FAR_RING_POINTS,
        ));
        let vals: Vec<f64> = pts
            .par_iter()
            .map(|y| self.value(y).map(|v| v.finite().map_or(f64::INFINITY, f64::abs)))
            .collect::<Result<_>>()?;
        Ok(vals.into_iter().fold(0.0, f64::max))
    }

    /// `min V` over inside cell centers.
    pub fn min_on_grid(&self) -> Result<f64> {
        let cells: Vec<usize> = self.grid.inside_cells().iter().collect();
        let vals: Vec<f64> = cells
            .par_iter()
            .map(|&c| self.value(&self.grid.cell_center(c)).map(ExtReal::to_f64))
            .collect::<Result<_>>()?;
        Ok(vals.into_iter().fold(f64::INFINITY, f64::min))
    }
}

impl PotentialField for ASPotential {
    fn dim(&self) -> Dimension {
        self.base.dim()
    }
    fn pole(&self) -> &[f64] {
        &self.pole
    }
    fn value(&self, y: &[f64]) -> Result<ExtReal> {
        ASPotential::value(self, y)
    }
    fn singular_support(&self) -> Option<&DiscreteMeasure> {
        Some(&self.base)
    }
}

/// `y ↦ g_B(y, x)`.
#[derive(Debug, Clone)]
pub struct GreenPotential {
    pub ball: BallDomain,
    pub pole: Vec<f64>,
}

impl PotentialField for GreenPotential {
    fn dim(&self) -> Dimension {
        self.ball.dim()
    }
    fn pole(&self) -> &[f64] {
        &self.pole
    }
    fn value(&self, y: &[f64]) -> Result<ExtReal> {
        self.ball.green(&self.pole, y)
    }
    fn singular_support(&self) -> Option<&DiscreteMeasure> {
        None
    }
}

/// Zero potential with a declared pole.
#[derive(Debug, Clone)]
pub struct ZeroPotential {
    pub pole: Vec<f64>,
}

impl PotentialField for ZeroPotential {
    fn dim(&self) -> Dimension {
        Dimension::new(self.pole.len()).expect("pole has at least one coordinate")
    }
    fn pole(&self) -> &[f64] {
        &self.pole
    }
    fn value(&self, _y: &[f64]) -> Result<ExtReal> {
        Ok(ExtReal::Finite(0.0))
    }
    fn singular_support(&self) -> Option<&DiscreteMeasure> {
        None
    }
}

fn ring_nodes(d: usize) -> usize {
    if d == 2 {
        256
    } else {
        1024
    }
}

/// Ring-mean estimate of `limsup V(y)/(−K(y,x))`: the largest slope of the
/// ring mean against `−k(r)` over consecutive radii.
pub fn limsup_ratio<F: PotentialField + ?Sized>(field: &F, ring_radii: &[f64]) -> Result<f64> {
    let d = field.dim();
    if d.get() < 2 {
        return Err(Error::domain("the ring estimator needs d ≥ 2"));
    }
    if ring_radii.len() < 2 || ring_radii.windows(2).any(|w| !(0.0 < w[0] && w[0] < w[1])) {
        return Err(Error::domain(
            "ring radii must be at least two increasing positive radii",
        ));
    }
    let x = field.pole();
    let mut means = Vec::with_capacity(ring_radii.len());
    for &r in ring_radii {
        let mut fault = None;
        let m = spherical_mean(x, r, ring_nodes(d.get()), |y| match field.value(y) {
            Ok(ExtReal::Finite(v)) => v,
            Ok(_) => {
                fault.get_or_insert_with(|| Error::domain(format!("field is infinite on the ring of radius {r}")));
                0.0
            }
            Err(e) => {
                fault.get_or_insert(e);
                0.0
            }
        });
        if let Some(e) = fault {
            return Err(e);
        }
        means.push(m);
    }
    let s = d.kernel_index();
    let mut best = f64::NEG_INFINITY;
    for (i, w) in ring_radii.windows(2).enumerate() {
        let dk = radial_kernel(s, w[1])? - radial_kernel(s, w[0])?;
        best = best.max((means[i] - means[i + 1]) / dk);
    }
    Ok(best)
}

/// Default ring radii `{4h, 8h, 16h}`.
pub fn default_ring_radii(stencil_h: f64) -> Vec<f64> {
    vec![4.0 * stencil_h, 8.0 * stencil_h, 16.0 * stencil_h]
}

/// Recovers `c_d·ΔV|_{R^d∖x} + (1 − ρ̂)·δ_x` on a lattice of spacing
/// `stencil_h` offset by half a step inside the box of `g`.
///
/// Lattice nodes within the largest ring radius of the pole, and nodes whose
/// stencil meets a non-finite value, contribute nothing to the Laplacian part.
pub fn inverse_map<F: PotentialField + ?Sized>(
    field: &F,
    g: &GridOpenSet,
    stencil_h: f64,
    ring_radii: &[f64],
) -> Result<DiscreteMeasure> {
    let d = field.dim();
    if g.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: g.dim().get(),
            found: d.get(),
        });
    }
    if !(stencil_h > 0.0) {
        return Err(Error::domain("stencil spacing must be positive"));
    }
    let x = field.pole().to_vec();
    let r_max = ring_radii.iter().copied().fold(0.0, f64::max);
    if let Some(mu) = field.singular_support() {
        // mass at the pole itself is read by the ring estimator
        let near = |p: &&[f64]| !on_diagonal(p, &x) && distance(p, &x) <= r_max + stencil_h;
        if let Some(p) = mu.support().find(near) {
            return Err(Error::domain(format!(
                "ring of radius {r_max} meets the support at {p:?}"
            )));
        }
    }
    let rho = limsup_ratio(field, ring_radii)?;

    let (lo, hi) = g.bounds();
    let dd = d.get();
    let shape: Vec<usize> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| ((b - a) / stencil_h).floor() as usize)
        .collect();
    if shape.iter().any(|&n| n < 3) {
        return Err(Error::domain("stencil spacing too coarse for the grid box"));
    }
    let strides: Vec<usize> = shape
        .iter()
        .scan(1, |acc, &n| {
            let s = *acc;
            *acc *= n;
            Some(s)
        })
        .collect();
    let n_nodes: usize = shape.iter().product();
    let node = |i: usize| -> Vec<f64> {
        (0..dd)
            .map(|k| lo[k] + ((i / strides[k]) % shape[k]) as f64 * stencil_h + 0.5 * stencil_h)
            .collect()
    };
    let snap = 1e-12 * stencil_h.max(1.0);
    let on_node = (0..dd).all(|k| {
        let t = (x[k] - lo[k]) / stencil_h - 0.5;
        (t - t.round()).abs() * stencil_h < snap
    });
    if on_node {
        return Err(Error::domain(format!("pole {x:?} lies on a lattice node")));
    }
    let values: Vec<f64> = (0..n_nodes)
        .into_par_iter()
        .map(|i| field.value(&node(i)).map(ExtReal::to_f64))
        .collect::<Result<_>>()?;
    let scale = riesz_constant(d) * stencil_h.powi(dd as i32 - 2);
    let weights: Vec<(usize, f64)> = (0..n_nodes)
        .into_par_iter()
        .filter_map(|i| {
            let interior = (0..dd).all(|k| {
                let c = (i / strides[k]) % shape[k];
                c > 0 && c + 1 < shape[k]
            });
            if !interior || distance(&node(i), &x) <= r_max {
                return None;
            }
            let center = values[i];
            let mut sum = -2.0 * dd as f64 * center;
            let mut finite = center.is_finite();
            for k in 0..dd {
                let (a, b) = (values[i - strides[k]], values[i + strides[k]]);
                finite &= a.is_finite() && b.is_finite();
                sum += a + b;
            }
            let w = scale * sum;
            (finite && w.abs() >= WEIGHT_FLOOR).then_some((i, w))
        })
        .collect();
    let mut atoms: Vec<(Vec<f64>, f64)> = weights.into_iter().map(|(i, w)| (node(i), w)).collect();
    let pole_weight = 1.0 - rho;
    if pole_weight.abs() >= WEIGHT_FLOOR {
        atoms.push((x, pole_weight));
    }
    DiscreteMeasure::from_atoms(d, atoms)
}

/// Least-squares fit of kernel translates `Σ a_j k_{d−2}(|·−y_j|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfsFit {
    pub sources: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    pub sup_error: f64,
    pub bound: f64,
    pub success: bool,
    /// The system was rank-deficient and solved with a ridge term.
    pub regularized: bool,
}

impl MfsFit {
    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        let s = (y.len() as f64) - 2.0;
        let mut acc = 0.0;
        for (src, a) in self.sources.iter().zip(&self.coefficients) {
            acc += a * radial_kernel(s, distance(y, src))?;
        }
        Ok(acc)
    }
}

/// `m` sources on the circle or sphere of radius `factor` times the
/// circumradius of the samples about their bounding-box center.
pub fn default_sources(samples: &[Vec<f64>], m: usize, factor: f64) -> Result<Vec<Vec<f64>>> {
    let first = samples.first().ok_or_else(|| Error::domain("no sample points"))?;
    let d = first.len();
    let mut lo = first.clone();
    let mut hi = first.clone();
    for p in samples {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let radius = samples.iter().map(|p| distance(p, &center)).fold(0.0, f64::max);
    if !(radius > 0.0) {
        return Err(Error::domain("samples have zero circumradius"));
    }
    if !(2..=3).contains(&d) {
        return Err(Error::domain("default sources are defined for d = 2, 3"));
    }
    Ok(sphere_nodes(&center, factor * radius, m))
}

/// Fits `values` at `samples` with kernel translates centered at `sources`.
pub fn mfs_fit(samples: &[Vec<f64>], values: &[f64], sources: &[Vec<f64>], b: f64) -> Result<MfsFit> {
    if samples.len() != values.len() {
        return Err(Error::domain("sample and value counts differ"));
    }
    if samples.is_empty() || sources.is_empty() {
        return Err(Error::domain("need at least one sample and one source"));
    }
    if !(b > 0.0) {
        return Err(Error::domain("bound must be positive"));
    }
    let d = Dimension::new(samples[0].len())?;
    for p in samples.iter().chain(sources) {
        d.check(p)?;
    }
    for s in sources {
        if samples.iter().any(|p| distance(p, s) <= 1e-12) {
            return Err(Error::domain(format!("source {s:?} coincides with a sample point")));
        }
    }
    let kidx = d.kernel_index();
    let (n, m) = (samples.len(), sources.len());
    let mut a = DMatrix::<f64>::zeros(n, m);
    for (i, p) in samples.iter().enumerate() {
        for (j, s) in sources.iter().enumerate() {
            a[(i, j)] = radial_kernel(kidx, distance(p, s))?;
        }
    }
    let rhs = DVector::from_column_slice(values);
    let svd = a.clone().svd(true, true);
    let (u, vt) = (
        svd.u.as_ref().expect("u requested"),
        svd.v_t.as_ref().expect("v_t requested"),
    );
    let sigma = &svd.singular_values;
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let regularized = sigma.len() < m || sigma.iter().any(|&s| s <= smax * 1e-12);
    let utb = u.transpose() * &rhs;
    let mut coef = DVector::<f64>::zeros(m);
    for (k, &s) in sigma.iter().enumerate() {
        let f = if regularized {
            s / (s * s + MFS_RIDGE)
        } else if s > 0.0 {
            1.0 / s
        } else {
            0.0
        };
        coef += vt.row(k).transpose() * (f * utb[k]);
    }
    let fitted = &a * &coef;
    let sup_error = fitted
        .iter()
        .zip(values)
        .map(|(f, v)| (f - v).abs())
        .fold(0.0, f64::max);
    Ok(MfsFit {
        sources: sources.to_vec(),
        coefficients: coef.iter().copied().collect(),
        sup_error,
        bound: b,
        success: sup_error < b,
        regularized,
    })
}
