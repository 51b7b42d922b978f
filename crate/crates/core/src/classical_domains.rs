//! Balls with closed-form harmonic measure and Green's function, and a
//! walk-on-spheres estimator of harmonic measure for general domains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitCircle, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GridOpenSet;
use crate::kernels::{distance, on_diagonal, Dimension, ExtReal};
use crate::measures::DiscreteMeasure;
use crate::sphere::sphere_nodes;

/// Open ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallDomain {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallDomain {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        Dimension::new(center.len())?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain(format!("ball radius must be positive, got {radius}")));
        }
        Ok(BallDomain { center, radius })
    }

    pub fn dim(&self) -> Dimension {
        Dimension::new(self.center.len()).expect("validated at construction")
    }

    fn offset(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.center).map(|(a, c)| a - c).collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        distance(p, &self.center) < self.radius
    }

    fn check_interior(&self, x: &[f64]) -> Result<()> {
        self.dim().check(x)?;
        if !self.contains(x) {
            return Err(Error::domain(format!("{x:?} is not inside the ball")));
        }
        Ok(())
    }

    /// Density of `ω_B(x, ·)` with respect to normalized surface measure on
    /// `∂B`: `r^{d-2}(r² − |x−c|²) / |x − y|^d`. Identically one at `x = c`.
    pub fn poisson_density(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_interior(x)?;
        self.dim().check(y)?;
        let r = self.radius;
        if (distance(y, &self.center) - r).abs() > 1e-12 * r {
            return Err(Error::domain(format!("{y:?} is not on the sphere")));
        }
        Ok(self.poisson_density_unchecked(x, y))
    }

    fn poisson_density_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.center.len() as i32;
        let r = self.radius;
        let xc = distance(x, &self.center);
        r.powi(d - 2) * (r * r - xc * xc) / distance(x, y).powi(d)
    }

    /// Harmonic measure `ω_B(x, ·)` discretized on `n` sphere nodes (uniform
    /// angles in 2D, Fibonacci lattice in 3D, the two endpoints in 1D), with
    /// weights proportional to the Poisson density and total mass one.
    pub fn harmonic_measure_quadrature(&self, x: &[f64], n: usize) -> Result<DiscreteMeasure> {
        self.check_interior(x)?;
        if n < 8 {
            return Err(Error::domain(format!("need at least 8 quadrature nodes, got {n}")));
        }
        let nodes = sphere_nodes(&self.center, self.radius, n);
        let raw: Vec<f64> = nodes.iter().map(|y| self.poisson_density_unchecked(x, y)).collect();
        let total = crate::kernels::compensated_sum(raw.iter().copied());
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        // absorb the normalization rounding into the heaviest node
        let heaviest = (0..weights.len())
            .max_by(|&a, &b| weights[a].total_cmp(&weights[b]))
            .expect("non-empty");
        weights[heaviest] = 0.0;
        let rest = crate::kernels::compensated_sum(weights.iter().copied());
        weights[heaviest] = 1.0 - rest;
        DiscreteMeasure::from_atoms(self.dim(), nodes.into_iter().zip(weights))
    }

    /// Green's function `g_B(y, x)` with pole `x`: `+inf` at `y = x` (d ≥ 2),
    /// zero outside the closed ball, and `pt_{ω_B(x,·)} − K_{d-2}(·, x)` inside.
    ///
    /// In one dimension the pole value is finite, matching `K_{-1}(x, x) = 0`.
    pub fn green(&self, x: &[f64], y: &[f64]) -> Result<ExtReal> {
        self.check_interior(x)?;
        self.dim().check(y)?;
        let d = self.center.len();
        let r = self.radius;
        let xo = self.offset(x);
        let yo = self.offset(y);
        let ny = crate::kernels::norm(&yo);
        if ny >= r {
            return Ok(ExtReal::ZERO);
        }
        if d >= 2 && on_diagonal(x, y) {
            return Ok(ExtReal::PosInf);
        }
        let g = if d == 1 {
            let (lo, hi) = if xo[0] <= yo[0] { (xo[0], yo[0]) } else { (yo[0], xo[0]) };
            (r - hi) * (r + lo) / r
        } else {
            let nx2: f64 = xo.iter().map(|v| v * v).sum();
            let dot: f64 = xo.iter().zip(&yo).map(|(a, b)| a * b).sum();
            // |x'|²|y'|² − 2r² x'·y' + r⁴ = (|x'|·|y − x*|)², x* the Kelvin image
            let q = nx2 * ny * ny - 2.0 * r * r * dot + r.powi(4);
            let dist = distance(x, y);
            if d == 2 {
                (q.sqrt() / (r * dist)).ln()
            } else {
                let s = (d - 2) as i32;
                dist.powi(-s) - (r / q.sqrt()).powi(s)
            }
        };
        Ok(ExtReal::Finite(g.max(0.0)))
    }

    /// The ball's bounding box.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.center.iter().map(|c| c - self.radius).collect(),
            self.center.iter().map(|c| c + self.radius).collect(),
        )
    }
}

/// Geometry queries needed by walk-on-spheres.
pub trait WosDomain: Sync {
    fn dim(&self) -> usize;
    fn contains(&self, p: &[f64]) -> bool;
    /// Distance from an interior point to the boundary.
    fn distance_to_boundary(&self, p: &[f64]) -> f64;
    /// Nearest boundary point, used to snap the final position of a walk.
    fn closest_boundary_point(&self, p: &[f64]) -> Vec<f64>;
}

impl WosDomain for BallDomain {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        BallDomain::contains(self, p)
    }

    fn distance_to_boundary(&self, p: &[f64]) -> f64 {
        (self.radius - distance(p, &self.center)).max(0.0)
    }

    fn closest_boundary_point(&self, p: &[f64]) -> Vec<f64> {
        let o = self.offset(p);
        let n = crate::kernels::norm(&o);
        if n == 0.0 {
            let mut q = self.center.clone();
            q[0] += self.radius;
            return q;
        }
        self.center
            .iter()
            .zip(&o)
            .map(|(c, v)| c + self.radius * v / n)
            .collect()
    }
}

/// A grid open set prepared for distance queries: the union of the inside
/// cells, with the complement made of outside cells and the exterior of the
/// array box.
#[derive(Debug, Clone)]
pub struct GridDomain {
    grid: GridOpenSet,
    /// Outside cells adjacent to an inside cell, as boxes.
    walls: Vec<(Vec<f64>, Vec<f64>)>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl GridDomain {
    pub fn new(grid: GridOpenSet) -> Self {
        let h = grid.spacing();
        let mut walls = Vec::new();
        for c in 0..grid.n_cells() {
            if grid.is_inside(c) {
                continue;
            }
            let center = grid.cell_center(c);
            let coords = grid.coords(c);
            let touches = (0..grid.shape().len()).any(|k| {
                [-1i64, 1].iter().any(|&s| {
                    let v = coords[k] as i64 + s;
                    if v < 0 || v >= grid.shape()[k] as i64 {
                        return false;
                    }
                    let mut nc = coords;
                    nc[k] = v as usize;
                    grid.is_inside(grid.index(&nc[..grid.shape().len()]))
                })
            });
            if touches {
                let lo = center.iter().map(|v| v - 0.5 * h).collect();
                let hi = center.iter().map(|v| v + 0.5 * h).collect();
                walls.push((lo, hi));
            }
        }
        let (lo, hi) = grid.bounds();
        GridDomain { grid, walls, lo, hi }
    }

    pub fn grid(&self) -> &GridOpenSet {
        &self.grid
    }
}

fn clamp_to_box(p: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    p.iter()
        .zip(lo.iter().zip(hi))
        .map(|(v, (a, b))| v.clamp(*a, *b))
        .collect()
}

impl WosDomain for GridDomain {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        self.grid.cell_of(p).is_some_and(|c| self.grid.is_inside(c))
    }

    fn distance_to_boundary(&self, p: &[f64]) -> f64 {
        let frame = p
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        self.walls
            .iter()
            .map(|(lo, hi)| distance(p, &clamp_to_box(p, lo, hi)))
            .fold(frame, f64::min)
    }

    fn closest_boundary_point(&self, p: &[f64]) -> Vec<f64> {
        let mut best = p.to_vec();
        let mut best_d = f64::INFINITY;
        for k in 0..p.len() {
            for (face, dist) in [(self.lo[k], p[k] - self.lo[k]), (self.hi[k], self.hi[k] - p[k])] {
                if dist < best_d {
                    best_d = dist;
                    best = p.to_vec();
                    best[k] = face;
                }
            }
        }
        for (lo, hi) in &self.walls {
            let q = clamp_to_box(p, lo, hi);
            let dist = distance(p, &q);
            if dist < best_d {
                best_d = dist;
                best = q;
            }
        }
        best
    }
}

/// Walk-on-spheres parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WosConfig {
    pub epsilon_shell: f64,
    pub max_steps: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl WosConfig {
    /// Shell `10^-4 · inradius`, at most `10^4` steps per walk.
    pub fn for_inradius(inradius: f64, n_samples: usize, seed: u64) -> Self {
        WosConfig {
            epsilon_shell: 1e-4 * inradius,
            max_steps: 10_000,
            n_samples,
            seed,
        }
    }
}

/// Result of a walk-on-spheres run.
#[derive(Debug, Clone)]
pub struct WosOutcome {
    /// Empirical exit distribution, each walk weighing `1/n_samples`.
    pub measure: DiscreteMeasure,
    /// Exit points in sample order.
    pub exits: Vec<Vec<f64>>,
    pub restarts: usize,
}

const MAX_RESTARTS_PER_WALK: usize = 64;

/// Samples the harmonic measure of `domain` at `x` by walk-on-spheres.
///
/// Sample `i` draws from its own ChaCha stream `(seed, i)`, so the output does
/// not depend on scheduling. A walk exceeding `max_steps` is restarted; more
/// than 1% restarted walks fail the run.
pub fn walk_on_spheres<D: WosDomain + ?Sized>(domain: &D, x: &[f64], cfg: &WosConfig) -> Result<WosOutcome> {
    let d = domain.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len(),
        });
    }
    if !domain.contains(x) {
        return Err(Error::domain(format!("{x:?} is not inside the domain")));
    }
    if cfg.n_samples == 0 || !(cfg.epsilon_shell > 0.0) || cfg.max_steps == 0 {
        return Err(Error::domain("invalid walk-on-spheres configuration"));
    }
    if cfg.epsilon_shell >= domain.distance_to_boundary(x) {
        return Err(Error::domain(
            "epsilon shell must be smaller than the distance to the boundary",
        ));
    }
    let walks: Vec<(Vec<f64>, usize)> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let mut restarts = 0;
            loop {
                if let Some(exit) = single_walk(domain, x, cfg, &mut rng) {
                    return (exit, restarts);
                }
                restarts += 1;
                if restarts > MAX_RESTARTS_PER_WALK {
                    return (Vec::new(), restarts);
                }
            }
        })
        .collect();
    let restarted = walks.iter().filter(|(_, r)| *r > 0).count();
    let failed = walks.iter().any(|(e, _)| e.is_empty());
    if failed || restarted * 100 > cfg.n_samples {
        return Err(Error::WosRestartOverflow {
            restarts: restarted,
            samples: cfg.n_samples,
        });
    }
    let w = 1.0 / cfg.n_samples as f64;
    let exits: Vec<Vec<f64>> = walks.into_iter().map(|(e, _)| e).collect();
    let measure = DiscreteMeasure::from_atoms(Dimension::new(d)?, exits.iter().map(|e| (e.clone(), w)))?;
    Ok(WosOutcome {
        measure,
        exits,
        restarts: restarted,
    })
}

fn single_walk<D: WosDomain + ?Sized>(
    domain: &D,
    start: &[f64],
    cfg: &WosConfig,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<f64>> {
    let mut p = start.to_vec();
    for _ in 0..cfg.max_steps {
        let r = domain.distance_to_boundary(&p);
        if r <= cfg.epsilon_shell {
            return Some(domain.closest_boundary_point(&p));
        }
        match p.len() {
            1 => p[0] += if rng.random_bool(0.5) { r } else { -r },
            2 => {
                let [a, b]: [f64; 2] = UnitCircle.sample(rng);
                p[0] += r * a;
                p[1] += r * b;
            }
            _ => {
                let u: [f64; 3] = UnitSphere.sample(rng);
                for k in 0..3 {
                    p[k] += r * u[k];
                }
            }
        }
    }
    None
}
