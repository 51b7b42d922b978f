//! Seeded fixture generation. Same kind and seed give identical bytes.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use balayage_core::classical_domains::BallDomain;
use balayage_core::geometry::GridOpenSet;
use balayage_core::poisson_jensen::{CanonicalSubharmonic, Region};
use balayage_core::{Dimension, DiscreteMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

pub const KINDS: [&str; 5] = [
    "grid-annulus",
    "blob",
    "random-subharmonic",
    "random-measure",
    "harmonic-measure",
];

/// Writes the fixture and returns the file path.
pub fn make_fixture(kind: &str, seed: u64, dir: &Path) -> Result<PathBuf, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ext, text) = match kind {
        "grid-annulus" => ("mask", annulus(&mut rng)?.to_mask_string()),
        "blob" => ("mask", blob(&mut rng)?.to_mask_string()),
        "random-subharmonic" => ("json", json(&random_subharmonic(&mut rng)?)?),
        "random-measure" => ("json", json(&random_measure(&mut rng)?)?),
        "harmonic-measure" => ("json", json(&harmonic_measure(&mut rng)?)?),
        other => {
            return Err(CliError::Config(format!(
                "unknown fixture kind {other:?}; expected one of {KINDS:?}"
            )))
        }
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(format!("{kind}-{seed}.{ext}"));
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn dim2() -> Dimension {
    Dimension::new(2).expect("2 is a valid dimension")
}

/// Ring `r_in < |p| < r_out` on a 64² box over `[-1.25, 1.25]²`.
fn annulus(rng: &mut ChaCha8Rng) -> Result<GridOpenSet, CliError> {
    let r_out = rng.random_range(0.9..1.1);
    let r_in = r_out * rng.random_range(0.3..0.6);
    let h = 2.5 / 64.0;
    Ok(GridOpenSet::from_predicate(vec![-1.25, -1.25], h, vec![64, 64], |p| {
        let r = p[0].hypot(p[1]);
        r_in < r && r < r_out
    })?)
}

/// Union of random discs on a 64² unit-spaced box.
fn blob(rng: &mut ChaCha8Rng) -> Result<GridOpenSet, CliError> {
    let discs: Vec<([f64; 2], f64)> = (0..rng.random_range(3..8))
        .map(|_| {
            (
                [rng.random_range(12.0..52.0), rng.random_range(12.0..52.0)],
                rng.random_range(4.0..12.0),
            )
        })
        .collect();
    Ok(GridOpenSet::from_predicate(vec![0.0, 0.0], 1.0, vec![64, 64], |p| {
        discs.iter().any(|(c, r)| (p[0] - c[0]).hypot(p[1] - c[1]) < *r)
    })?)
}

/// Five atoms in `[-1, 1]²` and eight sources on the circle of radius 3.
fn random_subharmonic(rng: &mut ChaCha8Rng) -> Result<CanonicalSubharmonic, CliError> {
    let atoms: Vec<(Vec<f64>, f64)> = (0..5)
        .map(|_| {
            (
                vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                rng.random_range(0.1..1.0),
            )
        })
        .collect();
    let phase = rng.random_range(0.0..TAU);
    let sources: Vec<(Vec<f64>, f64)> = (0..8)
        .map(|k| {
            let t = phase + TAU * k as f64 / 8.0;
            (vec![3.0 * t.cos(), 3.0 * t.sin()], rng.random_range(-1.0..1.0))
        })
        .collect();
    let region = Region::new(vec![-2.0, -2.0], vec![2.0, 2.0])?;
    Ok(CanonicalSubharmonic::new(
        DiscreteMeasure::from_atoms(dim2(), atoms)?,
        DiscreteMeasure::from_atoms(dim2(), sources)?,
        rng.random_range(-1.0..1.0),
        region,
    )?)
}

/// Positive measure with 3 to 10 atoms in `[-1, 1]²`.
fn random_measure(rng: &mut ChaCha8Rng) -> Result<DiscreteMeasure, CliError> {
    let n = rng.random_range(3..=10);
    let atoms: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|_| {
            (
                vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                rng.random_range(0.1..1.0),
            )
        })
        .collect();
    Ok(DiscreteMeasure::from_atoms(dim2(), atoms)?)
}

/// Harmonic measure quadrature of the unit disc at a random interior pole.
fn harmonic_measure(rng: &mut ChaCha8Rng) -> Result<DiscreteMeasure, CliError> {
    let ball = BallDomain::new(vec![0.0, 0.0], 1.0)?;
    let r = 0.8 * rng.random_range(0.0f64..1.0).sqrt();
    let t = rng.random_range(0.0..TAU);
    Ok(ball.harmonic_measure_quadrature(&[r * t.cos(), r * t.sin()], 256)?)
}
