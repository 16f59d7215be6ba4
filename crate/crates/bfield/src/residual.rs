//! Residual reports: named identity residuals with honest accounting of
//! the region they were measured on.

use std::collections::BTreeMap;

use crate::field::{ScalarField, VectorField};
use crate::mask::Region;
use crate::tolerances::SCALE_FLOOR;

/// One identity's residual: relative L2, absolute Linf, and the fraction
/// of the grid excluded from the norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualEntry {
    pub l2_rel: f64,
    pub linf: f64,
    pub masked_fraction: f64,
}

impl ResidualEntry {
    pub fn is_finite(&self) -> bool {
        self.l2_rel.is_finite() && self.linf.is_finite() && self.masked_fraction.is_finite()
    }
}

/// Map of identity tag -> residual entry plus provenance metadata.
///
/// Tags are stable string identifiers matching the equation labels used
/// in the residual tables (`q1A`, `ens13a`, `q-calc2`, ...).
#[derive(Clone, Debug, Default)]
pub struct ResidualReport {
    pub entries: BTreeMap<String, ResidualEntry>,
    pub grid_n: usize,
    /// Free-form provenance: seed, parameters, kind, gauge names.
    pub provenance: BTreeMap<String, String>,
}

impl ResidualReport {
    pub fn new(grid_n: usize) -> ResidualReport {
        ResidualReport {
            entries: BTreeMap::new(),
            grid_n,
            provenance: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, tag: &str, entry: ResidualEntry) {
        self.entries.insert(tag.to_string(), entry);
    }

    pub fn tag(&self, tag: &str) -> Option<&ResidualEntry> {
        self.entries.get(tag)
    }

    /// Entry accessor that panics with the tag name; for tests and suites
    /// where a missing tag is a programming error.
    pub fn expect(&self, tag: &str) -> ResidualEntry {
        *self
            .entries
            .get(tag)
            .unwrap_or_else(|| panic!("residual report has no tag `{tag}`"))
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.provenance.insert(key.to_string(), value.to_string());
    }

    pub fn all_finite(&self) -> bool {
        self.entries.values().all(|e| {
            e.is_finite() && e.l2_rel >= 0.0 && e.linf >= 0.0 && e.masked_fraction >= 0.0
        })
    }

    /// Worst relative L2 over all entries.
    pub fn max_l2_rel(&self) -> f64 {
        self.entries.values().fold(0.0f64, |m, e| m.max(e.l2_rel))
    }
}

/// Build an entry for a scalar residual field measured over `region`.
///
/// The relative L2 is the residual norm divided by the largest L2 norm
/// among the identity's constituent `terms` on the same region, so a
/// residual of size comparable to its own terms reports as O(1).
pub fn scalar_entry(region: &Region, residual: &ScalarField, terms: &[&ScalarField]) -> ResidualEntry {
    let num = region.l2(residual);
    let scale = terms
        .iter()
        .map(|t| region.l2(t))
        .fold(0.0f64, f64::max)
        .max(SCALE_FLOOR);
    ResidualEntry {
        l2_rel: num / scale,
        linf: region.linf(residual),
        masked_fraction: region.excluded_fraction(),
    }
}

/// Vector-field counterpart of [`scalar_entry`].
pub fn vector_entry(region: &Region, residual: &VectorField, terms: &[&VectorField]) -> ResidualEntry {
    let num = region.l2_vec(residual);
    let scale = terms
        .iter()
        .map(|t| region.l2_vec(t))
        .fold(0.0f64, f64::max)
        .max(SCALE_FLOOR);
    ResidualEntry {
        l2_rel: num / scale,
        linf: region.linf_vec(residual),
        masked_fraction: region.excluded_fraction(),
    }
}

/// Entry for a plain scalar pair (value vs scale), used by integral checks.
pub fn value_entry(value: f64, scale: f64) -> ResidualEntry {
    ResidualEntry {
        l2_rel: value.abs() / scale.abs().max(SCALE_FLOOR),
        linf: value.abs(),
        masked_fraction: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn zero_residual_zero_terms_reports_zero() {
        let g = Grid::standard(8).unwrap();
        let region = Region::full(&g);
        let zero = ScalarField::zeros(&g);
        let e = scalar_entry(&region, &zero, &[&zero]);
        assert_eq!(e.l2_rel, 0.0);
        assert_eq!(e.linf, 0.0);
    }

    #[test]
    fn relative_norm_uses_largest_term() {
        let g = Grid::standard(8).unwrap();
        let region = Region::full(&g);
        let r = ScalarField::constant(&g, 0.1);
        let small = ScalarField::constant(&g, 1.0);
        let big = ScalarField::constant(&g, 10.0);
        let e = scalar_entry(&region, &r, &[&small, &big]);
        assert!((e.l2_rel - 0.01).abs() < 1e-15);
        assert!((e.linf - 0.1).abs() < 1e-15);
    }
}
