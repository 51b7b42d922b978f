//! Verification of harmonic and subharmonic balayage between discrete measures.
//!
//! `Δ ⪯ ω` on an open set `O` is checked through its potential form: equal
//! masses and `pt_Δ = pt_ω` on `R^d ∖ S_O`, where `S_O` is the inward filling
//! of the rasterized supports. The harness evaluates the equivalent statements
//! separately and compares their verdicts.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{support_infill, CellSet, GridOpenSet};
use crate::kernels::{ExtReal, ExtSum};
use crate::measures::DiscreteMeasure;
use crate::poisson_jensen::{measure_pj_residual, CanonicalSubharmonic, Region};
use crate::potentials::potential;
use crate::sphere::sphere_nodes;

/// Points sampled on the far sphere around the grid.
pub const FAR_RING_POINTS: usize = 100;
/// Radius of the far sphere as a multiple of the grid diameter.
pub const FAR_RING_FACTOR: f64 = 3.0;
/// Cells sampled for the kernel-function statement.
pub const SPECIAL_POINTS: usize = 50;

/// Where a residual peaked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstPoint {
    pub statement: String,
    pub location: Vec<f64>,
    pub residual: f64,
}

/// How the verdicts of the separately evaluated statements relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Consistency {
    /// Every statement reached the same verdict.
    Agree,
    /// Verdicts differ, and some residual lies within a factor of ten of the tolerance.
    Inconclusive,
    /// Verdicts differ even though every residual is clear of the tolerance.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalayageReport {
    pub tolerance: f64,
    /// max |∫h dΔ − ∫h dω| over the harmonic test family.
    pub har_test_residual: Option<f64>,
    /// max |pt_Δ − pt_ω| over cell centers outside `S_O` and the far sphere.
    pub potential_residual: f64,
    pub mass_gap: f64,
    /// max(pt_Δ − pt_ω, 0) over all cell centers.
    pub sbh_violation: Option<f64>,
    /// max residual of the measure Poisson–Jensen identity over the supplied `u`.
    pub pj_residual: Option<f64>,
    /// max |pt_Δ(x) − pt_ω(x)| via `u = K(·,x)` at sampled cells outside `S_O`.
    pub special_residual: Option<f64>,
    pub points_evaluated: usize,
    pub worst: Vec<WorstPoint>,
    pub verdict: bool,
    pub consistency: Option<Consistency>,
}

/// Harmonic test functions on the convex hull of the supports.
#[derive(Debug, Clone, PartialEq)]
pub enum HarmonicTestFunction {
    Constant(f64),
    Coordinate(usize),
    /// Harmonic part of a canonical function (its Riesz measure must be empty).
    KernelSum(CanonicalSubharmonic),
}

impl HarmonicTestFunction {
    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        match self {
            HarmonicTestFunction::Constant(c) => Ok(*c),
            HarmonicTestFunction::Coordinate(k) => y
                .get(*k)
                .copied()
                .ok_or_else(|| Error::domain(format!("no coordinate {k}"))),
            HarmonicTestFunction::KernelSum(h) => h
                .eval(y)?
                .finite()
                .ok_or_else(|| Error::domain(format!("test function is infinite at {y:?}"))),
        }
    }
}

/// Constants, coordinates, and `count` unit-norm kernel sums with sources on a
/// sphere just outside the grid box.
pub fn standard_test_functions(g: &GridOpenSet, count: usize) -> Result<Vec<HarmonicTestFunction>> {
    let d = g.dim();
    let (lo, hi) = g.bounds();
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let radius = 0.75 * g.diameter();
    let nodes = sphere_nodes(&center, radius, 24);
    let region = Region::new(lo, hi)?;
    let mut out = vec![HarmonicTestFunction::Constant(1.0)];
    out.extend((0..d.get()).map(HarmonicTestFunction::Coordinate));
    for j in 0..count {
        let atoms: Vec<(Vec<f64>, f64)> = (0..3)
            .map(|i| {
                let node = nodes[(7 * j + 5 * i) % nodes.len()].clone();
                let w = ((j * 3 + i) as f64 * 1.37 + 0.4).cos();
                (node, w)
            })
            .collect();
        let norm: f64 = atoms.iter().map(|(_, w)| w.abs()).sum();
        let sources = DiscreteMeasure::from_atoms(d, atoms.into_iter().map(|(p, w)| (p, w / norm)))?;
        out.push(HarmonicTestFunction::KernelSum(CanonicalSubharmonic::harmonic(
            sources,
            0.0,
            region.clone(),
        )?));
    }
    Ok(out)
}

fn hull_box(delta: &DiscreteMeasure, omega: &DiscreteMeasure) -> Option<(Vec<f64>, Vec<f64>)> {
    match (delta.bounding_box(), omega.bounding_box()) {
        (None, b) | (b, None) => b,
        (Some((l1, h1)), Some((l2, h2))) => Some((
            l1.iter().zip(&l2).map(|(a, b)| a.min(*b)).collect(),
            h1.iter().zip(&h2).map(|(a, b)| a.max(*b)).collect(),
        )),
    }
}

/// Statements I/II: `max_h |∫h dΔ − ∫h dω|`. Kernel sums whose sources meet
/// the bounding box of the supports are rejected.
pub fn check_har_test_functions(
    delta: &DiscreteMeasure,
    omega: &DiscreteMeasure,
    tests: &[HarmonicTestFunction],
) -> Result<f64> {
    check_pair(delta, omega)?;
    let hull = hull_box(delta, omega);
    let mut worst = 0.0f64;
    for t in tests {
        if let (HarmonicTestFunction::KernelSum(h), Some((lo, hi))) = (t, &hull) {
            if !h.riesz_measure().is_empty() {
                return Err(Error::domain("test function has a Riesz measure"));
            }
            let inside = |p: &[f64]| p.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= v && v <= b);
            if h.sources().support().any(inside) {
                return Err(Error::domain("test function has sources in the hull of the supports"));
            }
        }
        let a = integrate_f64(delta, t)?;
        let b = integrate_f64(omega, t)?;
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

fn integrate_f64(mu: &DiscreteMeasure, t: &HarmonicTestFunction) -> Result<f64> {
    let mut acc = ExtSum::new();
    for a in mu.atoms() {
        acc.add_f64(a.weight * t.eval(&a.location)?);
    }
    Ok(acc.value()?.to_f64())
}

fn check_pair(delta: &DiscreteMeasure, omega: &DiscreteMeasure) -> Result<()> {
    if delta.dim() != omega.dim() {
        return Err(Error::DimensionMismatch {
            expected: delta.dim().get(),
            found: omega.dim().get(),
        });
    }
    if !delta.is_positive() || !omega.is_positive() {
        return Err(Error::domain("balayage is defined for positive measures"));
    }
    Ok(())
}

fn check_grid(delta: &DiscreteMeasure, g: &GridOpenSet) -> Result<()> {
    if g.dim() != delta.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim().get(),
            found: delta.dim().get(),
        });
    }
    Ok(())
}

/// Cell centers outside `S_O` followed by the far sphere.
fn potential_probe_points(g: &GridOpenSet, s_o: &CellSet) -> Vec<Vec<f64>> {
    let mut pts = g.centers_outside(s_o);
    let (lo, hi) = g.bounds();
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    pts.extend(sphere_nodes(&center, FAR_RING_FACTOR * g.diameter(), FAR_RING_POINTS));
    pts
}

/// `max |f(y)|` over `points`, with its location. Non-finite values count as `+∞`.
fn max_abs_over<F>(points: &[Vec<f64>], f: F) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<ExtReal> + Sync,
{
    let values: Vec<f64> = points
        .par_iter()
        .map(|y| f(y).map(|v| v.finite().map_or(f64::INFINITY, f64::abs)))
        .collect::<Result<_>>()?;
    let mut best = (0.0, Vec::new());
    for (v, y) in values.into_iter().zip(points) {
        if v > best.0 || best.1.is_empty() {
            best = (v, y.clone());
        }
    }
    Ok(best)
}

fn potential_gap(delta: &DiscreteMeasure, omega: &DiscreteMeasure, y: &[f64]) -> Result<ExtReal> {
    potential(delta, y)?.try_sub(potential(omega, y)?)
}

/// Statement III: `Δ ⪯ ω` iff masses agree and `pt_Δ = pt_ω` outside `S_O`.
pub fn check_har_balayage(
    delta: &DiscreteMeasure,
    omega: &DiscreteMeasure,
    g: &GridOpenSet,
    tol: f64,
) -> Result<BalayageReport> {
    check_pair(delta, omega)?;
    check_grid(delta, g)?;
    let s_o = support_infill(g, &[delta, omega])?;
    let points = potential_probe_points(g, &s_o);
    let (potential_residual, at) = max_abs_over(&points, |y| potential_gap(delta, omega, y))?;
    let mass_gap = (delta.mass().total - omega.mass().total).abs();
    Ok(BalayageReport {
        tolerance: tol,
        har_test_residual: None,
        potential_residual,
        mass_gap,
        sbh_violation: None,
        pj_residual: None,
        special_residual: None,
        points_evaluated: points.len(),
        worst: vec![WorstPoint {
            statement: "III".into(),
            location: at,
            residual: potential_residual,
        }],
        verdict: potential_residual <= tol && mass_gap <= tol,
        consistency: None,
    })
}

/// Subharmonic balayage: harmonic balayage plus `pt_ω ≥ pt_Δ − tol` at every
/// cell center. Centers where both potentials are `−∞` are skipped.
pub fn check_sbh_balayage(
    delta: &DiscreteMeasure,
    omega: &DiscreteMeasure,
    g: &GridOpenSet,
    tol: f64,
) -> Result<BalayageReport> {
    let mut report = check_har_balayage(delta, omega, g, tol)?;
    let centers: Vec<Vec<f64>> = (0..g.n_cells()).map(|c| g.cell_center(c)).collect();
    let excess: Vec<f64> = centers
        .par_iter()
        .map(|y| match potential_gap(delta, omega, y) {
            Ok(v) => Ok(v.to_f64()),
            Err(Error::InfinityClash) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let (i, worst) =
        excess.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
        );
    let violation = worst.max(0.0);
    report.points_evaluated += centers.len();
    report.worst.push(WorstPoint {
        statement: "sbh".into(),
        location: centers.get(i).cloned().unwrap_or_default(),
        residual: violation,
    });
    report.sbh_violation = Some(violation);
    report.verdict = report.verdict && violation <= tol;
    Ok(report)
}

fn clear_of(residual: f64, tol: f64) -> bool {
    residual <= tol / 10.0 || residual >= 10.0 * tol
}

/// Evaluates statements I/II, III, V and VII separately and compares verdicts.
///
/// `u_list` feeds statement V and must be subharmonic on the grid box; with
/// `B = S_O`. The report's verdict is the verdict of statement III.
pub fn main_lemma_harness(
    delta: &DiscreteMeasure,
    omega: &DiscreteMeasure,
    g: &GridOpenSet,
    u_list: &[CanonicalSubharmonic],
    tol: f64,
) -> Result<BalayageReport> {
    let mut report = check_har_balayage(delta, omega, g, tol)?;
    let s_o = support_infill(g, &[delta, omega])?;

    let tests = standard_test_functions(g, 20)?;
    let har = check_har_test_functions(delta, omega, &tests)?;
    report.har_test_residual = Some(har);
    report.points_evaluated += tests.len();

    let mut pj_worst = (0.0f64, Vec::new());
    for u in u_list {
        let r = measure_pj_residual(u, delta, omega, &s_o, g)?;
        if r.residual > pj_worst.0 || pj_worst.1.is_empty() {
            let at = u
                .riesz_measure()
                .support()
                .next()
                .map(<[f64]>::to_vec)
                .unwrap_or_default();
            pj_worst = (r.residual, at);
        }
    }
    report.points_evaluated += u_list.len();
    if !u_list.is_empty() {
        report.pj_residual = Some(pj_worst.0);
        report.worst.push(WorstPoint {
            statement: "V".into(),
            location: pj_worst.1,
            residual: pj_worst.0,
        });
    }

    let outside: Vec<usize> = (0..g.n_cells())
        .filter(|&c| g.is_inside(c) && !s_o.contains(c))
        .collect();
    let stride = (outside.len() / SPECIAL_POINTS).max(1);
    let region = Region::of_grid(g);
    let mut special = (0.0f64, Vec::new());
    let mut n_special = 0;
    for &c in outside.iter().step_by(stride).take(SPECIAL_POINTS) {
        let x = g.cell_center(c);
        let u = CanonicalSubharmonic::kernel(&x, region.clone())?;
        let r = measure_pj_residual(&u, delta, omega, &s_o, g)?;
        n_special += 1;
        if r.residual > special.0 || special.1.is_empty() {
            special = (r.residual, x);
        }
    }
    report.points_evaluated += n_special;
    if n_special > 0 {
        report.special_residual = Some(special.0);
        report.worst.push(WorstPoint {
            statement: "VII".into(),
            location: special.1,
            residual: special.0,
        });
    }

    let iii = report.potential_residual.max(report.mass_gap);
    let mut residuals = vec![har, iii];
    residuals.extend(report.pj_residual);
    residuals.extend(report.special_residual);
    let verdicts: Vec<bool> = residuals.iter().map(|r| *r <= tol).collect();
    report.consistency = Some(if verdicts.iter().all(|v| *v == verdicts[0]) {
        Consistency::Agree
    } else if residuals.iter().all(|r| clear_of(*r, tol)) {
        Consistency::Mixed
    } else {
        Consistency::Inconclusive
    });
    Ok(report)
}
