//! Residual evaluators for the Poisson–Jensen identities.
//!
//! Every integral against a Riesz measure is a finite sum over atoms, so the
//! only approximation error in these identities comes from discretized
//! harmonic measures. Integrals over a rasterized set `S` or `B` count an atom
//! when the cell containing it belongs to the set; atoms closer than
//! [`CELL_FACE_MARGIN`] to a cell face are rejected as ambiguous.

use serde::{Deserialize, Serialize, Serializer};

use crate::classical_domains::BallDomain;
use crate::duality::ASPotential;
use crate::error::{Error, Result};
use crate::geometry::{is_relatively_compact, support_infill, CellSet, GridOpenSet};
use crate::kernels::{distance, spatial_kernel, Dimension, ExtReal, ExtSum};
use crate::measures::DiscreteMeasure;
use crate::potentials::potential;

/// Atoms closer than this to a cell face have ambiguous cell membership.
pub const CELL_FACE_MARGIN: f64 = 1e-9;

/// Axis-aligned closed box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::domain("region corners are not ordered"));
        }
        Ok(Region { lo, hi })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    pub fn contains_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        self.contains(lo) && self.contains(hi)
    }

    /// The array box of a grid.
    pub fn of_grid(g: &GridOpenSet) -> Self {
        let (lo, hi) = g.bounds();
        Region { lo, hi }
    }
}

/// A subharmonic function `u = pt_atoms + pt_sources + constant` whose Riesz
/// measure on `region` is exactly `atoms`.
///
/// Every source lies strictly outside the closed region, so the source part is
/// harmonic there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SubharmonicRepr", into = "SubharmonicRepr")]
pub struct CanonicalSubharmonic {
    atoms: DiscreteMeasure,
    sources: DiscreteMeasure,
    constant: f64,
    region: Region,
}

#[derive(Serialize, Deserialize)]
struct SubharmonicRepr {
    atoms: DiscreteMeasure,
    sources: DiscreteMeasure,
    constant: f64,
    region: Region,
}

impl TryFrom<SubharmonicRepr> for CanonicalSubharmonic {
    type Error = Error;
    fn try_from(r: SubharmonicRepr) -> Result<Self> {
        CanonicalSubharmonic::new(r.atoms, r.sources, r.constant, r.region)
    }
}

impl From<CanonicalSubharmonic> for SubharmonicRepr {
    fn from(u: CanonicalSubharmonic) -> Self {
        SubharmonicRepr {
            atoms: u.atoms,
            sources: u.sources,
            constant: u.constant,
            region: u.region,
        }
    }
}

impl CanonicalSubharmonic {
    pub fn new(atoms: DiscreteMeasure, sources: DiscreteMeasure, constant: f64, region: Region) -> Result<Self> {
        let d = atoms.dim();
        if sources.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d.get(),
                found: sources.dim().get(),
            });
        }
        d.check(&region.lo)?;
        if !atoms.is_positive() {
            return Err(Error::domain("Riesz measure atoms must be positive"));
        }
        if let Some(p) = atoms.support().find(|p| !region.contains(p)) {
            return Err(Error::domain(format!("atom {p:?} lies outside the region")));
        }
        if let Some(p) = sources.support().find(|p| region.contains(p)) {
            return Err(Error::domain(format!("source {p:?} lies inside the closed region")));
        }
        if !constant.is_finite() {
            return Err(Error::domain("constant must be finite"));
        }
        Ok(CanonicalSubharmonic {
            atoms,
            sources,
            constant,
            region,
        })
    }

    /// `K_{d-2}(·, x)`, with Riesz measure `δ_x`.
    pub fn kernel(x: &[f64], region: Region) -> Result<Self> {
        let atoms = DiscreteMeasure::dirac(x)?;
        let dim = atoms.dim();
        Self::new(atoms, DiscreteMeasure::empty(dim), 0.0, region)
    }

    /// `pt_μ` for a positive measure `μ`.
    pub fn potential_of(mu: &DiscreteMeasure, region: Region) -> Result<Self> {
        Self::new(mu.clone(), DiscreteMeasure::empty(mu.dim()), 0.0, region)
    }

    /// A function harmonic on `region`.
    pub fn harmonic(sources: DiscreteMeasure, constant: f64, region: Region) -> Result<Self> {
        let dim = sources.dim();
        Self::new(DiscreteMeasure::empty(dim), sources, constant, region)
    }

    /// Same function with an extra harmonic part (sources must avoid the region).
    pub fn with_harmonic_part(&self, sources: &DiscreteMeasure, constant: f64) -> Result<Self> {
        let merged = DiscreteMeasure::combine(1.0, &self.sources, 1.0, sources)?;
        Self::new(
            self.atoms.clone(),
            merged,
            self.constant + constant,
            self.region.clone(),
        )
    }

    /// `α·u + β·v` for `α, β ≥ 0` and a shared region.
    pub fn combine(alpha: f64, u: &Self, beta: f64, v: &Self) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0) {
            return Err(Error::domain("coefficients must be non-negative"));
        }
        if u.region != v.region {
            return Err(Error::domain("regions differ"));
        }
        Self::new(
            DiscreteMeasure::combine(alpha, &u.atoms, beta, &v.atoms)?,
            DiscreteMeasure::combine(alpha, &u.sources, beta, &v.sources)?,
            alpha * u.constant + beta * v.constant,
            u.region.clone(),
        )
    }

    pub fn with_constant(&self, constant: f64) -> Self {
        CanonicalSubharmonic {
            constant,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> Dimension {
        self.atoms.dim()
    }

    /// The Riesz measure on the region.
    pub fn riesz_measure(&self) -> &DiscreteMeasure {
        &self.atoms
    }

    pub fn sources(&self) -> &DiscreteMeasure {
        &self.sources
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// `u(y)` in extended reals.
    pub fn eval(&self, y: &[f64]) -> Result<ExtReal> {
        potential(&self.atoms, y)?
            .try_add(potential(&self.sources, y)?)?
            .try_add(ExtReal::Finite(self.constant))
    }
}

/// Both sides of an identity and their gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PJReport {
    pub lhs: ExtReal,
    pub rhs: ExtReal,
    #[serde(serialize_with = "serialize_ext_f64")]
    pub residual: f64,
    pub both_neg_inf: bool,
}

fn serialize_ext_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    ExtReal::from(*v).serialize(s)
}

impl PJReport {
    pub fn new(lhs: ExtReal, rhs: ExtReal) -> Self {
        let (residual, both_neg_inf) = match (lhs, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ((a - b).abs(), false),
            (ExtReal::NegInf, ExtReal::NegInf) => (0.0, true),
            (ExtReal::PosInf, ExtReal::PosInf) => (0.0, false),
            _ => (f64::INFINITY, false),
        };
        PJReport {
            lhs,
            rhs,
            residual,
            both_neg_inf,
        }
    }

    pub fn holds_within(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// `∫ f dμ` restricted to atoms whose cell lies in `set`.
fn integrate_over_cells<F>(mu: &DiscreteMeasure, g: &GridOpenSet, set: &CellSet, mut f: F) -> Result<ExtReal>
where
    F: FnMut(&[f64]) -> Result<ExtReal>,
{
    let mut acc = ExtSum::new();
    for a in mu.atoms() {
        if g.cell_of(&a.location).is_some_and(|c| set.contains(c)) {
            acc.add(f(&a.location)?.scale(a.weight));
        }
    }
    acc.value()
}

fn check_unambiguous(g: &GridOpenSet, mu: &DiscreteMeasure, what: &str) -> Result<()> {
    for p in mu.support() {
        if g.cell_of(p).is_some() && g.distance_to_cell_faces(p) < CELL_FACE_MARGIN {
            return Err(Error::domain(format!(
                "{what} atom {p:?} lies within {CELL_FACE_MARGIN} of a cell face"
            )));
        }
    }
    Ok(())
}

fn check_dims(g: &GridOpenSet, fs: &[&CanonicalSubharmonic]) -> Result<()> {
    for f in fs {
        if f.dim() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: g.dim().get(),
                found: f.dim().get(),
            });
        }
    }
    Ok(())
}

fn ext_sum(a: ExtReal, b: ExtReal) -> Result<ExtReal> {
    a.try_add(b)
}

/// Classical Poisson–Jensen identity on a ball,
/// `u(x) = ∫_{∂B} u dω_B(x,·) − ∫_{clos B} g_B(·,x) dΔ_u`,
/// with `ω_B` discretized on `n_quad` nodes.
pub fn classical_pj_residual(
    u: &CanonicalSubharmonic,
    ball: &BallDomain,
    x: &[f64],
    n_quad: usize,
) -> Result<PJReport> {
    if u.dim() != ball.dim() {
        return Err(Error::DimensionMismatch {
            expected: ball.dim().get(),
            found: u.dim().get(),
        });
    }
    let (lo, hi) = ball.bounds();
    if !u.region().contains_box(&lo, &hi) {
        return Err(Error::domain("closed ball is not inside the region of u"));
    }
    let d = ball.dim().get();
    let r = ball.radius;
    let resolution = match d {
        1 => 0.0,
        2 => std::f64::consts::TAU * r / n_quad as f64,
        _ => r * (4.0 * std::f64::consts::PI / n_quad as f64).sqrt(),
    };
    for p in u.riesz_measure().support() {
        let gap = (distance(p, &ball.center) - r).abs();
        if gap < 10.0 * resolution || gap == 0.0 {
            return Err(Error::domain(format!(
                "atom {p:?} straddles the sphere at quadrature resolution {resolution:.3e}"
            )));
        }
    }
    let omega = ball.harmonic_measure_quadrature(x, n_quad)?;
    let lhs = u.eval(x)?;
    let boundary = omega.integrate(|y| u.eval(y))?;
    let green = u
        .riesz_measure()
        .restrict(|p| distance(p, &ball.center) <= r)
        .integrate(|a| ball.green(x, a))?;
    let rhs = boundary.try_sub(green)?;
    Ok(PJReport::new(lhs, rhs))
}

/// Full symmetric identity
/// `∫_S u dΔ_q + ∫_B p dΔ_u = ∫_S u dΔ_p + ∫_B q dΔ_u`.
///
/// Premises checked at cell centers: `q = p` outside `infill(S)` and on
/// `infill(S) ∖ B`, both within `premise_tol`; `B` relatively compact in `g`.
pub fn full_symmetric_pj_residual(
    u: &CanonicalSubharmonic,
    q: &CanonicalSubharmonic,
    p: &CanonicalSubharmonic,
    s_cells: &CellSet,
    b_cells: &CellSet,
    g: &GridOpenSet,
    premise_tol: f64,
) -> Result<PJReport> {
    check_dims(g, &[u, q, p])?;
    if !is_relatively_compact(g, b_cells) {
        return Err(Error::NotRelativelyCompact);
    }
    let s_infill = crate::geometry::inward_fill(g, s_cells)?;
    check_premises(q, p, g, |c| !s_infill.contains(c) || !b_cells.contains(c), premise_tol)?;
    symmetric_sums(u, q, p, s_cells, b_cells, g)
}

/// Symmetric identity `∫_S u dΔ_q + ∫_S p dΔ_u = ∫_S u dΔ_p + ∫_S q dΔ_u`
/// for `q = p` outside `S` (checked at cell centers within `premise_tol`).
pub fn symmetric_pj_residual(
    u: &CanonicalSubharmonic,
    q: &CanonicalSubharmonic,
    p: &CanonicalSubharmonic,
    s_cells: &CellSet,
    g: &GridOpenSet,
    premise_tol: f64,
) -> Result<PJReport> {
    check_dims(g, &[u, q, p])?;
    check_premises(q, p, g, |c| !s_cells.contains(c), premise_tol)?;
    symmetric_sums(u, q, p, s_cells, s_cells, g)
}

fn check_premises<F: Fn(usize) -> bool>(
    q: &CanonicalSubharmonic,
    p: &CanonicalSubharmonic,
    g: &GridOpenSet,
    outside: F,
    premise_tol: f64,
) -> Result<()> {
    for c in 0..g.n_cells() {
        if !g.is_inside(c) || !outside(c) {
            continue;
        }
        let y = g.cell_center(c);
        let gap = q.eval(&y)?.try_sub(p.eval(&y)?)?;
        let gap = gap.finite().map_or(f64::INFINITY, f64::abs);
        if gap > premise_tol {
            return Err(Error::HypothesisViolated(format!(
                "q and p differ by {gap:.3e} at {y:?}, outside the set"
            )));
        }
    }
    Ok(())
}

fn symmetric_sums(
    u: &CanonicalSubharmonic,
    q: &CanonicalSubharmonic,
    p: &CanonicalSubharmonic,
    s_cells: &CellSet,
    b_cells: &CellSet,
    g: &GridOpenSet,
) -> Result<PJReport> {
    check_unambiguous(g, u.riesz_measure(), "u")?;
    check_unambiguous(g, q.riesz_measure(), "q")?;
    check_unambiguous(g, p.riesz_measure(), "p")?;
    for (name, f) in [("q", q), ("p", p)] {
        for a in f.riesz_measure().support() {
            if !g.cell_of(a).is_some_and(|c| s_cells.contains(c)) {
                return Err(Error::domain(format!("{name} atom {a:?} lies outside S")));
            }
        }
    }
    let lhs = ext_sum(
        integrate_over_cells(q.riesz_measure(), g, s_cells, |y| u.eval(y))?,
        integrate_over_cells(u.riesz_measure(), g, b_cells, |y| p.eval(y))?,
    )?;
    let rhs = ext_sum(
        integrate_over_cells(p.riesz_measure(), g, s_cells, |y| u.eval(y))?,
        integrate_over_cells(u.riesz_measure(), g, b_cells, |y| q.eval(y))?,
    )?;
    Ok(PJReport::new(lhs, rhs))
}

/// Identity for measures and their potentials,
/// `∫u dΔ + ∫_B pt_ω dΔ_u = ∫u dω + ∫_B pt_Δ dΔ_u`, for `S_O ⊂ B ⋐ g`.
pub fn measure_pj_residual(
    u: &CanonicalSubharmonic,
    delta: &DiscreteMeasure,
    omega: &DiscreteMeasure,
    b_cells: &CellSet,
    g: &GridOpenSet,
) -> Result<PJReport> {
    check_dims(g, &[u])?;
    let s_o = support_infill(g, &[delta, omega])?;
    if !s_o.is_subset_of(b_cells) {
        return Err(Error::HypothesisViolated("S_O is not contained in B".into()));
    }
    if !is_relatively_compact(g, b_cells) {
        return Err(Error::NotRelativelyCompact);
    }
    let h = g.spacing();
    for c in b_cells.iter() {
        let center = g.cell_center(c);
        let lo: Vec<f64> = center.iter().map(|v| v - 0.5 * h).collect();
        let hi: Vec<f64> = center.iter().map(|v| v + 0.5 * h).collect();
        if !u.region().contains_box(&lo, &hi) {
            return Err(Error::domain("B is not inside the region of u"));
        }
    }
    check_unambiguous(g, u.riesz_measure(), "u")?;
    let lhs = ext_sum(
        delta.integrate(|y| u.eval(y))?,
        integrate_over_cells(u.riesz_measure(), g, b_cells, |y| potential(omega, y))?,
    )?;
    let rhs = ext_sum(
        omega.integrate(|y| u.eval(y))?,
        integrate_over_cells(u.riesz_measure(), g, b_cells, |y| potential(delta, y))?,
    )?;
    Ok(PJReport::new(lhs, rhs))
}

/// Poisson–Jensen identity for an Arens–Singer measure `ω` at `x`,
/// `u(x) = ∫u dω − ∫ pt_{ω−δ_x} dΔ_u`. The premise `δ_x ⪯ ω` is checked
/// with [`crate::balayage::check_har_balayage`] at tolerance `tol`.
pub fn asj_pj_residual(
    u: &CanonicalSubharmonic,
    omega: &DiscreteMeasure,
    x: &[f64],
    g: &GridOpenSet,
    tol: f64,
) -> Result<PJReport> {
    check_dims(g, &[u])?;
    let dirac = DiscreteMeasure::dirac(x)?;
    let report = crate::balayage::check_har_balayage(&dirac, omega, g, tol)?;
    if !report.verdict {
        return Err(Error::PremiseFailed(format!(
            "ω is not an Arens–Singer measure at {x:?} (potential residual {:.3e}, mass gap {:.3e})",
            report.potential_residual, report.mass_gap
        )));
    }
    arens_singer_sums(u, omega, x)
}

/// The same identity written with the potential `V = pt_{ω−δ_x}`:
/// `u(x) = ∫u dΔ_V − ∫V dΔ_u`. Arithmetic is shared with [`asj_pj_residual`].
pub fn asp_pj_residual(u: &CanonicalSubharmonic, v: &ASPotential) -> Result<PJReport> {
    if u.dim() != v.base().dim() {
        return Err(Error::DimensionMismatch {
            expected: v.base().dim().get(),
            found: u.dim().get(),
        });
    }
    arens_singer_sums(u, v.base(), v.pole())
}

fn arens_singer_sums(u: &CanonicalSubharmonic, omega: &DiscreteMeasure, x: &[f64]) -> Result<PJReport> {
    let d = u.dim();
    let lhs = u.eval(x)?;
    let boundary = omega.integrate(|y| u.eval(y))?;
    let interior = u
        .riesz_measure()
        .integrate(|a| potential(omega, a)?.try_sub(spatial_kernel(d, a, x)?))?;
    Ok(PJReport::new(lhs, boundary.try_sub(interior)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{inward_fill, rasterize_support};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d2() -> Dimension {
        Dimension::new(2).unwrap()
    }

    fn square(h: f64) -> Region {
        Region::new(vec![-h, -h], vec![h, h]).unwrap()
    }

    fn grid() -> GridOpenSet {
        // cell faces at multiples of 0.1 offset by 0.013 to keep fixtures off faces
        GridOpenSet::full_box(vec![-2.013, -2.013], 0.1, vec![41, 41]).unwrap()
    }

    #[test]
    fn invariants_are_enforced() {
        let inside_source = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        assert!(CanonicalSubharmonic::harmonic(inside_source, 0.0, square(1.0)).is_err());
        let neg = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap().scaled(-1.0);
        assert!(CanonicalSubharmonic::potential_of(&neg, square(1.0)).is_err());
        assert!(CanonicalSubharmonic::kernel(&[3.0, 0.0], square(1.0)).is_err());
    }

    #[test]
    fn eval_matches_kernel_and_shifts() {
        let u = CanonicalSubharmonic::kernel(&[0.2, 0.1], square(2.0)).unwrap();
        let y = [1.0, -0.5];
        assert_eq!(u.eval(&y).unwrap(), spatial_kernel(d2(), &y, &[0.2, 0.1]).unwrap());
        assert_eq!(u.eval(&[0.2, 0.1]).unwrap(), ExtReal::NegInf);
        let v = u.with_constant(1.5);
        assert_eq!(v.eval(&y).unwrap().to_f64(), u.eval(&y).unwrap().to_f64() + 1.5);
    }

    #[test]
    fn harmonic_part_has_the_mean_value_property() {
        let src = DiscreteMeasure::from_atoms(
            d2(),
            [(vec![3.0, 0.0], 1.0), (vec![0.0, -2.5], -0.7), (vec![-2.2, 2.2], 0.4)],
        )
        .unwrap();
        let h = CanonicalSubharmonic::harmonic(src, 0.3, square(1.0)).unwrap();
        let c = [0.2, 0.1];
        let mean = crate::sphere::spherical_mean(&c, 0.7, 64, |p| h.eval(p).unwrap().to_f64());
        assert!((mean - h.eval(&c).unwrap().to_f64()).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip_validates() {
        let u = CanonicalSubharmonic::kernel(&[0.2, 0.1], square(2.0)).unwrap();
        let s = serde_json::to_string(&u).unwrap();
        let back: CanonicalSubharmonic = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
        let bad = s.replace("[0.2,0.1]", "[5.0,0.1]");
        assert!(serde_json::from_str::<CanonicalSubharmonic>(&bad).is_err());
    }

    #[test]
    fn report_conventions() {
        let r = PJReport::new(ExtReal::NegInf, ExtReal::NegInf);
        assert!(r.both_neg_inf && r.residual == 0.0);
        let r = PJReport::new(ExtReal::NegInf, ExtReal::Finite(1.0));
        assert_eq!(r.residual, f64::INFINITY);
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"lhs":"-inf","rhs":1.0,"residual":"+inf","both_neg_inf":false}"#
        );
    }

    #[test]
    fn classical_for_a_log_kernel() {
        let ball = BallDomain::new(vec![0.0, 0.0], 1.0).unwrap();
        let u = CanonicalSubharmonic::kernel(&[0.3, -0.2], square(1.5)).unwrap();
        let r = classical_pj_residual(&u, &ball, &[-0.4, 0.5], 512).unwrap();
        assert!(r.residual < 1e-3, "{r:?}");
    }

    #[test]
    fn classical_for_harmonic_u_is_poisson_reproduction() {
        let ball = BallDomain::new(vec![0.0, 0.0], 1.0).unwrap();
        let src = DiscreteMeasure::from_atoms(d2(), [(vec![2.0, 0.5], 1.0), (vec![-1.0, -1.8], 2.0)]).unwrap();
        let u = CanonicalSubharmonic::harmonic(src, 0.5, square(1.2)).unwrap();
        let r = classical_pj_residual(&u, &ball, &[0.3, 0.3], 512).unwrap();
        assert!(r.residual < 1e-9);
    }

    #[test]
    fn classical_atom_at_the_pole_gives_both_neg_inf() {
        let ball = BallDomain::new(vec![0.0, 0.0], 1.0).unwrap();
        let x = [0.25, 0.1];
        let u = CanonicalSubharmonic::kernel(&x, square(1.5)).unwrap();
        let r = classical_pj_residual(&u, &ball, &x, 256).unwrap();
        assert!(r.both_neg_inf);
        assert_eq!((r.lhs, r.rhs), (ExtReal::NegInf, ExtReal::NegInf));
    }

    #[test]
    fn classical_rejects_straddling_atoms() {
        let ball = BallDomain::new(vec![0.0, 0.0], 1.0).unwrap();
        let u = CanonicalSubharmonic::kernel(&[0.99, 0.0], square(1.5)).unwrap();
        assert!(classical_pj_residual(&u, &ball, &[0.0, 0.0], 512).is_err());
        let v = CanonicalSubharmonic::kernel(&[0.5, 0.0], square(0.9)).unwrap();
        assert!(classical_pj_residual(&v, &ball, &[0.0, 0.0], 512).is_err());
    }

    #[test]
    fn symmetric_with_p_equal_q_is_exact() {
        let g = grid();
        let q = CanonicalSubharmonic::kernel(&[0.02, 0.03], Region::of_grid(&g)).unwrap();
        let s = inward_fill(&g, &rasterize_support(&g, &[q.riesz_measure()]).unwrap()).unwrap();
        let u = CanonicalSubharmonic::kernel(&[0.52, -0.33], Region::of_grid(&g)).unwrap();
        let r = symmetric_pj_residual(&u, &q, &q, &s, &g, 1e-9).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn symmetric_rejects_violated_hypothesis() {
        let g = grid();
        let q = CanonicalSubharmonic::kernel(&[0.02, 0.03], Region::of_grid(&g)).unwrap();
        let p = CanonicalSubharmonic::kernel(&[0.52, 0.03], Region::of_grid(&g)).unwrap();
        let s = rasterize_support(&g, &[q.riesz_measure(), p.riesz_measure()]).unwrap();
        let u = CanonicalSubharmonic::kernel(&[-0.52, -0.33], Region::of_grid(&g)).unwrap();
        assert!(matches!(
            symmetric_pj_residual(&u, &q, &p, &s, &g, 1e-9),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn atoms_on_cell_faces_are_rejected() {
        let g = grid();
        let q = CanonicalSubharmonic::kernel(&[0.02, 0.03], Region::of_grid(&g)).unwrap();
        let s = rasterize_support(&g, &[q.riesz_measure()]).unwrap();
        let u = CanonicalSubharmonic::kernel(&[0.087, 0.5], Region::of_grid(&g)).unwrap();
        assert!(symmetric_pj_residual(&u, &q, &q, &s, &g, 1e-9).is_err());
    }

    #[test]
    fn measure_identity_for_equal_measures_and_bad_b() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mu = DiscreteMeasure::from_atoms(
            d2(),
            (0..5).map(|_| (vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)], 1.0)),
        )
        .unwrap();
        let b = support_infill(&g, &[&mu]).unwrap();
        let u = CanonicalSubharmonic::kernel(&[0.31, 0.22], Region::of_grid(&g)).unwrap();
        assert_eq!(measure_pj_residual(&u, &mu, &mu, &b, &g).unwrap().residual, 0.0);
        let other = DiscreteMeasure::dirac(&[1.2, 1.2]).unwrap();
        assert!(matches!(
            measure_pj_residual(&u, &mu, &other, &b, &g),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn arens_singer_with_dirac_is_exact() {
        let g = grid();
        let x = [0.1, -0.2];
        let dirac = DiscreteMeasure::dirac(&x).unwrap();
        let u = CanonicalSubharmonic::kernel(&[0.61, 0.22], Region::of_grid(&g)).unwrap();
        let r = asj_pj_residual(&u, &dirac, &x, &g, 1e-9).unwrap();
        assert_eq!(r.residual, 0.0);
        let y = DiscreteMeasure::dirac(&[0.5, 0.5]).unwrap();
        assert!(matches!(
            asj_pj_residual(&u, &y, &x, &g, 1e-3),
            Err(Error::PremiseFailed(_))
        ));
    }
}
