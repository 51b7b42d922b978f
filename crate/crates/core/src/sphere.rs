//! Equal-weight node sets on the unit sphere `S^{d-1}`.
//!
//! d = 1: the two points ±1. d = 2: uniform angles `2πk/n`.
//! d = 3: the Fibonacci lattice `z_k = 1 - (2k+1)/n`, `φ_k = k·(golden angle)`.

use std::f64::consts::PI;

/// `n` nodes on the unit sphere of dimension `d` (for `d = 1`, always two).
pub fn unit_sphere_nodes(d: usize, n: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - (2 * k + 1) as f64 / n as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * k as f64;
                    vec![rho * phi.cos(), rho * phi.sin(), z]
                })
                .collect()
        }
        _ => panic!("sphere nodes implemented for d ≤ 3, got {d}"),
    }
}

/// Nodes on the sphere `|y - center| = radius`.
pub fn sphere_nodes(center: &[f64], radius: f64, n: usize) -> Vec<Vec<f64>> {
    unit_sphere_nodes(center.len(), n)
        .into_iter()
        .map(|u| u.iter().zip(center).map(|(a, c)| c + radius * a).collect())
        .collect()
}

/// Equal-weight mean of `f` over the sphere `|y - center| = radius`.
pub fn spherical_mean<F: FnMut(&[f64]) -> f64>(center: &[f64], radius: f64, n: usize, mut f: F) -> f64 {
    let nodes = sphere_nodes(center, radius, n);
    let k = nodes.len() as f64;
    crate::kernels::compensated_sum(nodes.iter().map(|p| f(p))) / k
}
