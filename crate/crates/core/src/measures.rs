//! Finite signed atomic measures (charges) on `R^d`.

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernels::{compensated_sum, Dimension, ExtReal, ExtSum};

/// A point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub location: Vec<f64>,
    pub weight: f64,
}

/// Total, upper and lower variation masses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mass {
    pub total: f64,
    pub positive_total: f64,
    pub negative_total: f64,
}

/// A finite signed measure `Σ w_i δ_{x_i}`.
///
/// Atoms are kept in canonical form: locations are pairwise distinct under
/// exact coordinate equality (coincident atoms are merged) and no atom has zero
/// weight. Atom order is the order of first insertion.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: Dimension,
    atoms: Vec<Atom>,
}

fn location_key(p: &[f64]) -> Vec<u64> {
    // -0.0 == 0.0, so both must share a key
    p.iter().map(|v| if *v == 0.0 { 0 } else { v.to_bits() }).collect()
}

impl DiscreteMeasure {
    pub fn empty(dim: Dimension) -> Self {
        DiscreteMeasure { dim, atoms: Vec::new() }
    }

    /// Builds a measure from raw `(location, weight)` pairs, merging
    /// coincident locations and dropping zero totals.
    pub fn from_atoms<I>(dim: Dimension, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, f64)>,
    {
        let mut merged: IndexMap<Vec<u64>, (Vec<f64>, ExtSum)> = IndexMap::new();
        for (loc, w) in atoms {
            dim.check(&loc)?;
            if loc.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("atom location {loc:?} is not finite")));
            }
            if !w.is_finite() {
                return Err(Error::domain(format!("atom weight {w} is not finite")));
            }
            let entry = merged.entry(location_key(&loc)).or_insert_with(|| (loc, ExtSum::new()));
            entry.1.add_f64(w);
        }
        let atoms = merged
            .into_values()
            .filter_map(|(location, acc)| {
                let weight = acc.value().ok()?.finite()?;
                (weight != 0.0).then_some(Atom { location, weight })
            })
            .collect();
        Ok(DiscreteMeasure { dim, atoms })
    }

    /// `δ_x`.
    pub fn dirac(x: &[f64]) -> Result<Self> {
        let dim = Dimension::new(x.len())?;
        Self::from_atoms(dim, [(x.to_vec(), 1.0)])
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = &[f64]> {
        self.atoms.iter().map(|a| a.location.as_slice())
    }

    pub fn is_positive(&self) -> bool {
        self.atoms.iter().all(|a| a.weight > 0.0)
    }

    pub fn mass(&self) -> Mass {
        let positive_total = compensated_sum(self.atoms.iter().map(|a| a.weight.max(0.0)));
        let negative_total = compensated_sum(self.atoms.iter().map(|a| (-a.weight).max(0.0)));
        Mass {
            total: compensated_sum(self.atoms.iter().map(|a| a.weight)),
            positive_total,
            negative_total,
        }
    }

    /// `αμ + βν`.
    pub fn combine(alpha: f64, mu: &Self, beta: f64, nu: &Self) -> Result<Self> {
        if mu.dim != nu.dim {
            return Err(Error::DimensionMismatch {
                expected: mu.dim.get(),
                found: nu.dim.get(),
            });
        }
        let scaled = |c: f64, m: &Self| {
            m.atoms
                .iter()
                .map(move |a| (a.location.clone(), c * a.weight))
                .collect::<Vec<_>>()
        };
        let mut all = scaled(alpha, mu);
        all.extend(scaled(beta, nu));
        Self::from_atoms(mu.dim, all)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let atoms = if c == 0.0 {
            Vec::new()
        } else {
            self.atoms
                .iter()
                .map(|a| Atom {
                    location: a.location.clone(),
                    weight: c * a.weight,
                })
                .collect()
        };
        DiscreteMeasure { dim: self.dim, atoms }
    }

    /// Keeps exactly the atoms whose location satisfies `region`.
    pub fn restrict<F: Fn(&[f64]) -> bool>(&self, region: F) -> Self {
        DiscreteMeasure {
            dim: self.dim,
            atoms: self.atoms.iter().filter(|a| region(&a.location)).cloned().collect(),
        }
    }

    /// Upper variation `μ⁺`.
    pub fn positive_part(&self) -> Self {
        DiscreteMeasure {
            dim: self.dim,
            atoms: self.atoms.iter().filter(|a| a.weight > 0.0).cloned().collect(),
        }
    }

    /// Lower variation `μ⁻` (a positive measure).
    pub fn negative_part(&self) -> Self {
        DiscreteMeasure {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .filter(|a| a.weight < 0.0)
                .map(|a| Atom {
                    location: a.location.clone(),
                    weight: -a.weight,
                })
                .collect(),
        }
    }

    /// `∫ f dμ` in extended reals.
    pub fn integrate<F>(&self, mut f: F) -> Result<ExtReal>
    where
        F: FnMut(&[f64]) -> Result<ExtReal>,
    {
        let mut acc = ExtSum::new();
        for a in &self.atoms {
            acc.add(f(&a.location)?.scale(a.weight));
        }
        acc.value()
    }

    /// `∫ f dμ` for a function that is finite on the support.
    pub fn integrate_finite<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.weight * f(&a.location)))
    }

    /// Largest distance of an atom from the origin.
    pub fn support_radius(&self) -> f64 {
        self.support().map(crate::kernels::norm).fold(0.0, f64::max)
    }

    /// Axis-aligned bounding box of the support, if non-empty.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut it = self.support();
        let first = it.next()?;
        let (mut lo, mut hi) = (first.to_vec(), first.to_vec());
        for p in it {
            for k in 0..p.len() {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Some((lo, hi))
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    d: usize,
    atoms: Vec<(Vec<f64>, f64)>,
}

impl Serialize for DiscreteMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureRepr {
            d: self.dim.get(),
            atoms: self.atoms.iter().map(|a| (a.location.clone(), a.weight)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MeasureRepr::deserialize(d)?;
        let dim = Dimension::new(repr.d).map_err(serde::de::Error::custom)?;
        DiscreteMeasure::from_atoms(dim, repr.atoms).map_err(serde::de::Error::custom)
    }
}
