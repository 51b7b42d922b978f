//! Potentials `pt_μ(y) = ∫ K_{d-2}(x, y) dμ(x)` of atomic charges.

use crate::error::{Error, Result};
use crate::kernels::{norm, on_diagonal, radial_kernel, spatial_kernel_unchecked, ExtReal, ExtSum};
use crate::measures::DiscreteMeasure;
use crate::sphere::unit_sphere_nodes;

/// `pt_μ(y)` in extended reals.
///
/// For `d ≥ 2` a positive atom at `y` gives `-inf` and a negative one `+inf`;
/// since atoms are merged both cannot occur at one exact location, and the
/// near-coincidence of opposite-sign atoms is reported as
/// [`Error::InfinityClash`].
pub fn potential(mu: &DiscreteMeasure, y: &[f64]) -> Result<ExtReal> {
    let d = mu.dim();
    d.check(y)?;
    let mut acc = ExtSum::new();
    for a in mu.atoms() {
        acc.add(spatial_kernel_unchecked(d, &a.location, y).scale(a.weight));
    }
    acc.value()
}

/// [`potential`] as an IEEE double (infinities as `±inf`).
pub fn potential_f64(mu: &DiscreteMeasure, y: &[f64]) -> Result<f64> {
    potential(mu, y).map(ExtReal::to_f64)
}

/// Whether `y` lies in the evaluability set of `pt_μ`.
///
/// For an atomic charge this fails only where atoms of both signs sit on the
/// kernel diagonal at `y` (in `d ≥ 2`).
pub fn is_evaluable(mu: &DiscreteMeasure, y: &[f64]) -> bool {
    if mu.dim().get() < 2 || y.len() != mu.dim().get() {
        return y.len() == mu.dim().get();
    }
    let mut pos = false;
    let mut neg = false;
    for a in mu.atoms() {
        if on_diagonal(&a.location, y) {
            pos |= a.weight > 0.0;
            neg |= a.weight < 0.0;
        }
    }
    !(pos && neg)
}

/// Closed form of a one-dimensional potential outside the support hull:
/// `μ(R)x − ∫t dμ(t)` right of the support, `−μ(R)x + ∫t dμ(t)` left of it.
pub fn potential_1d_closed(mu: &DiscreteMeasure, x: f64) -> Result<f64> {
    if mu.dim().get() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: mu.dim().get(),
        });
    }
    if !mu.is_positive() {
        return Err(Error::domain("closed form needs a positive measure"));
    }
    let Some((lo, hi)) = mu.bounding_box() else {
        return Ok(0.0);
    };
    let total = mu.mass().total;
    let first_moment = mu.integrate_finite(|t| t[0]);
    if x >= hi[0] {
        Ok(total * x - first_moment)
    } else if x <= lo[0] {
        Ok(-total * x + first_moment)
    } else {
        Err(Error::domain(format!(
            "x = {x} lies strictly inside the support hull ({}, {})",
            lo[0], hi[0]
        )))
    }
}

/// Largest far-field deviation `|pt_μ(R·e) − μ(R^d)·k_{d-2}(R)|` over
/// `n_dirs` unit directions `e`. Decays like `R^{1-d}`.
pub fn asymptotic_deviation(mu: &DiscreteMeasure, radius: f64, n_dirs: usize) -> Result<f64> {
    let d = mu.dim().get();
    if n_dirs == 0 {
        return Err(Error::domain("need at least one direction"));
    }
    let reach = mu.support_radius();
    if !(radius > 2.0 * reach) || radius <= 0.0 {
        return Err(Error::domain(format!(
            "radius {radius} must exceed twice the support radius {reach}"
        )));
    }
    let total = mu.mass().total;
    let dirs: Vec<Vec<f64>> = match d {
        1 => (0..n_dirs).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }]).collect(),
        _ => unit_sphere_nodes(d, n_dirs),
    };
    let mut worst = 0.0_f64;
    for e in dirs {
        let y: Vec<f64> = e.iter().map(|v| v * radius / norm(&e)).collect();
        // the realized |y| differs from `radius` by rounding
        let far = total * radial_kernel(d as f64 - 2.0, norm(&y))?;
        let pt = potential_f64(mu, &y)?;
        worst = worst.max((pt - far).abs());
    }
    Ok(worst)
}
