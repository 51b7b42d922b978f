//! One runner per scenario kind. Each returns the residual table it asserted.

use std::f64::consts::TAU;
use std::path::PathBuf;

use balayage_core::balayage::{
    check_har_balayage, check_sbh_balayage, main_lemma_harness, BalayageReport, Consistency,
};
use balayage_core::classical_domains::{walk_on_spheres, BallDomain, WosConfig};
use balayage_core::duality::{
    default_ring_radii, default_sources, forward_map, inverse_map, mfs_fit, MFS_SOURCE_FACTOR,
};
use balayage_core::geometry::{components, inward_fill, rasterize_support, CellSet, GridOpenSet};
use balayage_core::poisson_jensen::{
    classical_pj_residual, full_symmetric_pj_residual, measure_pj_residual, symmetric_pj_residual,
    CanonicalSubharmonic, Region,
};
use balayage_core::{Dimension, DiscreteMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::config::{
    ball_of, Config, GridSpec, Kind, MeasureSpec, RandomFamily, Resolver, SubharmonicSpec, Tolerances,
};
use crate::report::Outcome;
use crate::CliError;

const QUADRATURE_TOL: f64 = 1e-3;
const EXACT_TOL: f64 = 1e-9;

pub fn run(config: &Config, resolver: &Resolver) -> Result<Outcome, CliError> {
    match config.kind {
        Kind::PjClassical => pj_classical(config, resolver),
        Kind::PjSymmetric => pj_symmetric(config, resolver),
        Kind::PjMeasure => pj_measure(config, resolver),
        Kind::MainLemma => main_lemma(config, resolver),
        Kind::BalayageHar => balayage(config, resolver, false),
        Kind::BalayageSbh => balayage(config, resolver, true),
        Kind::DualityRoundtrip => duality_roundtrip(config, resolver),
        Kind::MfsFit => mfs(config),
        Kind::InwardFill => inward(config, resolver),
        Kind::WosCompare => wos(config),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PjClassicalParams {
    u: SubharmonicSpec,
    ball: BallDomain,
    pole: Vec<f64>,
    #[serde(default = "default_n_quad")]
    n_quad: usize,
}

fn default_n_quad() -> usize {
    512
}

/// The ball's box doubled about its center.
fn ball_region(ball: &BallDomain) -> Region {
    let lo = ball.center.iter().map(|c| c - 2.0 * ball.radius).collect();
    let hi = ball.center.iter().map(|c| c + 2.0 * ball.radius).collect();
    Region { lo, hi }
}

fn pj_classical(config: &Config, resolver: &Resolver) -> Result<Outcome, CliError> {
    let p: PjClassicalParams = config.params()?;
    let tol = Tolerances::new(&config.tolerances, &[("residual", QUADRATURE_TOL)])?;
    let ball = ball_of(&p.ball)?;
    let u = resolver.subharmonic(&p.u, &ball_region(&ball))?;
    let r = classical_pj_residual(&u, &ball, &p.pole, p.n_quad)?;
    let mut out = Outcome::default();
    out.check("classical_pj", r.residual, tol.get("residual"));
    out.detail("report", r)?;
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PjSymmetricParams {
    u: SubharmonicSpec,
    q: SubharmonicSpec,
    p: SubharmonicSpec,
    grid: GridSpec,
    /// Evaluate the full identity with `B = infill(S)` instead of `B = S`.
    #[serde(default)]
    full: bool,
}

fn pj_symmetric(config: &Config, resolver: &Resolver) -> Result<Outcome, CliError> {
    let params: PjSymmetricParams = config.params()?;
    let tol = Tolerances::new(
        &config.tolerances,
        &[("residual", QUADRATURE_TOL), ("premise", EXACT_TOL)],
    )?;
    let g = resolver.grid(&params.grid)?;
    let region = Region::of_grid(&g);
    let u = resolver.subharmonic(&params.u, &region)?;
    let q = resolver.subharmonic(&params.q, &region)?;
    let p = resolver.subharmonic(&params.p, &region)?;
    let s = rasterize_support(&g, &[q.riesz_measure(), p.riesz_measure()])?;
    let r = if params.full {
        let b = inward_fill(&g, &s)?;
        full_symmetric_pj_residual(&u, &q, &p, &s, &b, &g, tol.get("premise"))?
    } else {
        symmetric_pj_residual(&u, &q, &p, &s, &g, tol.get("premise"))?
    };
    let mut out = Outcome::default();
    out.check("symmetric_pj", r.residual, tol.get("residual"));
    out.detail("s_cells", s.len())?;
    out.detail("report", r)?;
    Ok(out)
}

/// Subharmonic functions on the grid box with atoms away from `avoid`.
fn random_family(
    fam: &RandomFamily,
    g: &GridOpenSet,
    avoid: &[&DiscreteMeasure],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CanonicalSubharmonic>, CliError> {
    let d = g.dim();
    let region = Region::of_grid(g);
    let center: Vec<f64> = region.lo.iter().zip(&region.hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let h = g.spacing();
    let far = |p: &[f64]| {
        avoid.iter().all(|mu| {
            mu.support()
                .all(|a| a.iter().zip(p).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() >= fam.clearance)
        })
    };
    let mut family = Vec::with_capacity(fam.count);
    for _ in 0..fam.count {
        let mut atoms = Vec::new();
        let mut tries = 0;
        while atoms.len() < fam.atoms {
            tries += 1;
            if tries > 100_000 {
                return Err(CliError::Config(
                    "no room for random atoms at the requested clearance".into(),
                ));
            }
            // one cell of margin keeps atoms clear of the array frame
            let p: Vec<f64> = region
                .lo
                .iter()
                .zip(&region.hi)
                .map(|(a, b)| rng.random_range(a + h..b - h))
                .collect();
            if g.cell_of(&p).is_some_and(|c| g.is_inside(c)) && far(&p) {
                atoms.push((p, rng.random_range(0.2..1.0)));
            }
        }
        let radius = 0.75 * g.diameter();
        let sources: Vec<(Vec<f64>, f64)> = (0..fam.sources)
            .map(|_| {
                let dir = random_direction(d, rng);
                (
                    center.iter().zip(&dir).map(|(c, e)| c + radius * e).collect(),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        family.push(CanonicalSubharmonic::new(
            DiscreteMeasure::from_atoms(d, atoms)?,
            DiscreteMeasure::from_atoms(d, sources)?,
            rng.random_range(-1.0..1.0),
            region.clone(),
        )?);
    }
    Ok(family)
}

fn random_direction(d: Dimension, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match d.get() {
        1 => vec![if rng.random_bool(0.5) { 1.0 } else { -1.0 }],
        2 => {
            let t = rng.random_range(0.0..TAU);
            vec![t.cos(), t.sin()]
        }
        _ => {
            let z: f64 = rng.random_range(-1.0..1.0);
            let t = rng.random_range(0.0..TAU);
            let s = (1.0 - z * z).sqrt();
            vec![s * t.cos(), s * t.sin(), z]
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PjMeasureParams {
    #[serde(default)]
    u: Vec<SubharmonicSpec>,
    #[serde(default)]
    random_u: Option<RandomFamily>,
    delta: MeasureSpec,
    omega: MeasureSpec,
    grid: GridSpec,
    /// Extra face-neighbour layers added to `S_O` to form `B`.
    #[serde(default)]
    dilate: usize,
}

fn dilate(g: &GridOpenSet, s: &CellSet, steps: usize) -> Result<CellSet, CliError> {
    let mut cur = s.clone();
    let dd = g.dim().get();
    for _ in 0..steps {
        let mut next = cur.clone();
        for c in cur.iter() {
            let coords = g.coords(c);
            for k in 0..dd {
                for delta in [-1i64, 1] {
                    let v = coords[k] as i64 + delta;
                    if v < 0 || v as usize >= g.shape()[k] {
                        continue;
                    }
                    let mut nb: Vec<usize> = coords[..dd].to_vec();
                    nb[k] = v as usize;
                    let idx = g.index(&nb);
                    if g.is_inside(idx) {
                        next.insert(idx);
                    }
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

fn pj_measure(config: &Config, resolver: &Resolver) -> Result<Outcome, CliError> {
    let p: PjMeasureParams = config.params()?;
    let tol = Tolerances::new(&config.tolerances, &[("residual", QUADRATURE_TOL)])?;
    let g = resolver.grid(&p.grid)?;
    let delta = resolver.measure(&p.delta)?;
    let omega = resolver.measure(&p.omega)?;
    let s_o = balayage_core::geometry::support_infill(&g, &[&delta, &omega])?;
    let b = dilate(&g, &s_o, p.dilate)?;
    let mut us = family(&p.u, p.random_u.as_ref(), &g, &[&delta, &omega], config.seed, resolver)?;
    let mut out = Outcome::default();
    let mut reports = Vec::new();
    for (i, u) in us.drain(..).enumerate() {
        let r = measure_pj_residual(&u, &delta, &omega, &b, &g)?;
        out.check(&format!("measure_pj[{i}]"), r.residual, tol.get("residual"));
        reports.push(r);
    }
    out.detail("b_cells", b.len())?;
    out.detail("reports", reports)?;
    Ok(out)
}

fn family(
    explicit: &[SubharmonicSpec],
    random: Option<&RandomFamily>,
    g: &GridOpenSet,
    avoid: &[&DiscreteMeasure],
    seed: u64,
    resolver: &Resolver,
) -> Result<Vec<CanonicalSubharmonic>, CliError> {
    let region = Region::of_grid(g);
    let mut us: Vec<CanonicalSubharmonic> = explicit
        .iter()
        .map(|s| resolver.subharmonic(s, &region))
        .collect::<Result<_, _>>()?;
    if let Some(fam) = random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        us.extend(random_family(fam, g, avoid, &mut rng)?);
    }
    Ok(us)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BalayageParams {
    delta: MeasureSpec,
    omega: MeasureSpec,
    grid: GridSpec,
}

fn balayage_checks(out: &mut Outcome, r: &BalayageReport, tol: f64) -> Result<(), CliError> {
    out.check("potential_residual", r.potential_residual, tol);
    out.check("mass_gap", r.mass_gap, tol);
    out.detail("points_evaluated", r.points_evaluated)?;
    out.detail("worst", &r.worst)
}

fn balayage(config: &Config, resolver: &Resolver, sbh: bool) -> Result<Outcome, CliError> {
    let p: BalayageParams = config.params()?;
    let tol = Tolerances::new(&config.tolerances, &[("balayage", QUADRATURE_TOL)])?;
    let g = resolver.grid(&p.grid)?;
    let delta = resolver.measure(&p.delta)?;
    let omega = resolver.measure(&p.omega)?;
    let t = tol.get("balayage");
    let r = if sbh {
        check_sbh_balayage(&delta, &omega, &g, t)?
    } else {
        check_har_balayage(&delta, &omega, &g, t)?
    };
    let mut out = Outcome::default();
    balayage_checks(&mut out, &r, t)?;
    if let Some(v) = r.sbh_violation {
        out.check("sbh_violation", v, t);
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MainLemmaParams {
    delta: MeasureSpec,
    omega: MeasureSpec,
    grid: GridSpec,
    #[serde(default)]
    u: Vec<SubharmonicSpec>,
    #[serde(default)]
    random_u: Option<RandomFamily>,
}

fn main_lemma(config: &Config, resolver: &Resolver) -> Result<Outcome, CliError> {
    let p: MainLemmaParams = config.params()?;
    let tol = Tolerances::new(&config.tolerances, &[("balayage", QUADRATURE_TOL)])?;
    let t = tol.get("balayage");
    let g = resolver.grid(&p.grid)?;
    let delta = resolver.measure(&p.delta)?;
    let omega = resolver.measure(&p.omega)?;
    let us = family(&p.u, p.random_u.as_ref(), &g, &[&delta, &omega], config.seed, resolver)?;
    let r = main_lemma_harness(&delta, &omega, &g, &us, t)?;
    let mut out = Outcome::default();
    if let Some(v) = r.har_test_residual {
        out.check("I_II_test_functions", v, t);
    }
    balayage_checks(&mut out, &r, t)?;
    if let Some(v) = r.pj_residual {
        out.check("V_measure_pj", v, t);
    }
    if let Some(v) = r.special_residual {
        out.check("VII_kernel_functions", v, t);
    }
    if us.is_empty() {
        out.warnings
            .push("no subharmonic functions supplied; statement V was not evaluated".into());
    }
    out.detail("consistency", r.consistency)?;
    if r.consistency == Some(Consistency::Mixed) {
        out.check("mixed_verdicts", 1.0, 0.0);
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DualityParams {
    omega: MeasureSpec,
    pole: Vec<f64>,
    grid: GridSpec,
    stencil_h: f64,
    #[serde(default)]
    ring_radii: Option<Vec<f64>>,
    /// Also assert the Jensen positivity property.
    #[serde(default)]
    jensen: bool,
}

fn quadrants(mu: &DiscreteMeasure, c: &[f64]) -> Vec<f64> {
    let d = mu.dim().get();
    let mut bins = vec![0.0; 1 << d];
    for a in mu.atoms() {
        let idx = (0..d).fold(0, |acc, k| acc | (usize::from(a.location[k] < c[k]) << k));
        bins[idx] += a.weight;
    }
    bins
}

fn duality_roundtrip(config: &Config, resolver: &Resolver) -> Result<Outcome, CliError> {
    let p: DualityParams = config.params()?;
    let tol = Tolerances::new(
        &config.tolerances,
        &[
            ("balayage", QUADRATURE_TOL),
            ("vanishing", QUADRATURE_TOL),
            ("positivity", QUADRATURE_TOL),
            ("mass", 1e-2),
            ("quadrant", 5e-2),
            ("pole_weight", 1e-6),
        ],
    )?;
    let g = resolver.grid(&p.grid)?;
    let omega = resolver.measure(&p.omega)?;
    let v = forward_map(&omega, &p.pole, &g, tol.get("balayage"))?;
    let mut out = Outcome::default();
    out.check(
        "vanishing_outside_infill",
        v.max_abs_outside_infill()?,
        tol.get("vanishing"),
    );
    if p.jensen {
        out.check("jensen_positivity", (-v.min_on_grid()?).max(0.0), tol.get("positivity"));
    }
    let radii = p.ring_radii.unwrap_or_else(|| default_ring_radii(p.stencil_h));
    let back = inverse_map(&v, &g, p.stencil_h, &radii)?;
    out.check("mass", (back.mass().total - omega.mass().total).abs(), tol.get("mass"));
    let (lo, hi) = omega.bounding_box().unwrap_or((p.pole.clone(), p.pole.clone()));
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let (qa, qb) = (quadrants(&back, &center), quadrants(&omega, &center));
    let quad = qa.iter().zip(&qb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.check("quadrant_mass", quad, tol.get("quadrant"));
    let weight_at = |mu: &DiscreteMeasure| {
        mu.atoms()
            .iter()
            .find(|a| a.location == p.pole)
            .map_or(0.0, |a| a.weight)
    };
    out.check(
        "pole_weight",
        (weight_at(&back) - weight_at(&omega)).abs(),
        tol.get("pole_weight"),
    );
    out.detail("recovered_atoms", back.len())?;
    out.detail("recovered_pole_weight", weight_at(&back))?;
    Ok(out)
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum SampleSpec {
    Points(Vec<Vec<f64>>),
    /// Concentric circles of the given radii.
    Rings {
        center: Vec<f64>,
        radii: Vec<f64>,
        per_ring: usize,
    },
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum TargetSpec {
    Constant(f64),
    Coordinate(usize),
    /// `x² − y²` about the origin.
    ReZ2,
    Values(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum SourceSpec {
    Points(Vec<Vec<f64>>),
    Circle {
        count: usize,
        #[serde(default = "default_factor")]
        factor: f64,
    },
}

fn default_factor() -> f64 {
    MFS_SOURCE_FACTOR
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MfsParams {
    samples: SampleSpec,
    target: TargetSpec,
    sources: SourceSpec,
    b: f64,
}

fn mfs(config: &Config) -> Result<Outcome, CliError> {
    let p: MfsParams = config.params()?;
    Tolerances::new(&config.tolerances, &[])?;
    let samples: Vec<Vec<f64>> = match p.samples {
        SampleSpec::Points(pts) => pts,
        SampleSpec::Rings {
            center,
            radii,
            per_ring,
        } => radii
            .iter()
            .flat_map(|&r| {
                let c = center.clone();
                (0..per_ring).map(move |k| {
                    let t = TAU * (k as f64 + 0.5) / per_ring as f64;
                    vec![c[0] + r * t.cos(), c[1] + r * t.sin()]
                })
            })
            .collect(),
    };
    let values: Vec<f64> = match p.target {
        TargetSpec::Constant(c) => vec![c; samples.len()],
        TargetSpec::Coordinate(k) => samples
            .iter()
            .map(|s| {
                s.get(k)
                    .copied()
                    .ok_or_else(|| CliError::Config(format!("no coordinate {k}")))
            })
            .collect::<Result<_, _>>()?,
        TargetSpec::ReZ2 => samples.iter().map(|s| s[0] * s[0] - s[1] * s[1]).collect(),
        TargetSpec::Values(v) => v,
    };
    let sources = match p.sources {
        SourceSpec::Points(s) => s,
        SourceSpec::Circle { count, factor } => default_sources(&samples, count, factor)?,
    };
    let fit = mfs_fit(&samples, &values, &sources, p.b)?;
    let mut out = Outcome::default();
    out.check("sup_error", fit.sup_error, p.b);
    if fit.regularized {
        out.warnings
            .push("rank-deficient system solved with a ridge term".into());
    }
    out.detail("fit", &fit)?;
    Ok(out)
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum SetSpec {
    /// Cells containing an atom of any of the measures.
    Measures(Vec<MeasureSpec>),
    Cells(Vec<usize>),
    /// A mask of the same shape; `#` marks members.
    Mask(PathBuf),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InwardParams {
    grid: GridSpec,
    set: SetSpec,
}

fn inward(config: &Config, resolver: &Resolver) -> Result<Outcome, CliError> {
    let p: InwardParams = config.params()?;
    Tolerances::new(&config.tolerances, &[])?;
    let g = resolver.grid(&p.grid)?;
    let s = match &p.set {
        SetSpec::Measures(specs) => {
            let mus: Vec<DiscreteMeasure> = specs.iter().map(|m| resolver.measure(m)).collect::<Result<_, _>>()?;
            let refs: Vec<&DiscreteMeasure> = mus.iter().collect();
            rasterize_support(&g, &refs)?
        }
        SetSpec::Cells(cells) => g.cell_set(cells.iter().copied())?,
        SetSpec::Mask(path) => {
            let m = resolver.grid(&GridSpec::Mask(path.clone()))?;
            if m.shape() != g.shape() {
                return Err(CliError::Config("set mask shape differs from the grid".into()));
            }
            g.cell_set(m.inside_cells().iter())?
        }
    };
    let fill = inward_fill(&g, &s)?;
    let mut out = Outcome::default();
    let violation = |ok: bool| if ok { 0.0 } else { 1.0 };
    out.check("contains_set", violation(s.is_subset_of(&fill)), 0.0);
    out.check("idempotence", violation(inward_fill(&g, &fill)? == fill), 0.0);
    let rest = CellSet::from_cells(
        g.n_cells(),
        (0..g.n_cells()).filter(|&c| g.is_inside(c) && !fill.contains(c)),
    );
    let comps = components(&g, &rest);
    let trapped = comps
        .iter()
        .filter(|c| !c.iter().any(|cell| g.touches_complement(cell)))
        .count();
    out.check("trapped_components", trapped as f64, 0.0);
    out.detail("set_cells", s.len())?;
    out.detail("filled_cells", fill.len())?;
    out.detail("outside_components", comps.len())?;
    let filled_grid = GridOpenSet::new(
        g.origin().to_vec(),
        g.spacing(),
        g.shape().to_vec(),
        (0..g.n_cells()).map(|c| fill.contains(c)).collect(),
    )?;
    out.detail("filled_mask", filled_grid.to_mask_string())?;
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WosParams {
    ball: BallDomain,
    poles: Vec<Vec<f64>>,
    n_samples: usize,
    #[serde(default)]
    epsilon_shell: Option<f64>,
    #[serde(default)]
    max_steps: Option<usize>,
    #[serde(default = "default_wos_quad")]
    n_quad: usize,
}

fn default_wos_quad() -> usize {
    2048
}

fn wos(config: &Config) -> Result<Outcome, CliError> {
    let p: WosParams = config.params()?;
    let tol = Tolerances::new(&config.tolerances, &[("sigma", 4.0)])?;
    let ball = ball_of(&p.ball)?;
    let d = ball.dim().get();
    if p.poles.is_empty() {
        return Err(CliError::Config("no poles given".into()));
    }
    let mut out = Outcome::default();
    let mut moments = Vec::new();
    for (i, x) in p.poles.iter().enumerate() {
        let mut cfg = WosConfig::for_inradius(ball.radius, p.n_samples, config.seed.wrapping_add(i as u64));
        if let Some(eps) = p.epsilon_shell {
            cfg.epsilon_shell = eps;
        }
        if let Some(m) = p.max_steps {
            cfg.max_steps = m;
        }
        let walks = walk_on_spheres(&ball, x, &cfg)?;
        let omega = ball.harmonic_measure_quadrature(x, p.n_quad)?;
        let n = walks.exits.len() as f64;
        // (a, None) is E[y_a], (a, Some(b)) is E[y_a y_b]
        let mut stats: Vec<(usize, Option<usize>)> = Vec::new();
        for a in 0..d {
            stats.push((a, None));
            stats.extend((a..d).map(|b| (a, Some(b))));
        }
        let mut worst = 0.0f64;
        for &(a, b) in &stats {
            let f = |y: &[f64]| y[a] * b.map_or(1.0, |b| y[b]);
            let name = b.map_or(format!("E[y{a}]"), |b| format!("E[y{a}y{b}]"));
            let vals: Vec<f64> = walks.exits.iter().map(|y| f(y)).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            let exact = omega.integrate_finite(f);
            let z = if var > 0.0 {
                (mean - exact).abs() / (var / n).sqrt()
            } else {
                0.0
            };
            worst = worst.max(z);
            moments.push(serde_json::json!({"pole": i, "moment": name, "wos": mean, "quadrature": exact, "z": z}));
        }
        out.check(&format!("moment_z[{i}]"), worst, tol.get("sigma"));
        out.detail(&format!("restarts[{i}]"), walks.restarts)?;
    }
    out.detail("moments", moments)?;
    Ok(out)
}
