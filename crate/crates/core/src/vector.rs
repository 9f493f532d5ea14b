//! Dense vectors and the similarity math shared by both search phases.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Document identifier. Assigned by ingestion order when the input has none.
pub type DocId = u64;

/// A unit-length document or query vector.
///
/// Construction normalizes the input, so every `DenseVector` has an L2 norm
/// within `1e-6` of one and only finite features.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    id: DocId,
    values: Vec<f64>,
}

impl DenseVector {
    /// Normalizes `values` and wraps them with `id`.
    pub fn new(id: DocId, values: Vec<f64>) -> Result<Self> {
        let values = normalize_row(values, Some(id))?;
        Ok(Self { id, values })
    }

    /// Wraps values that are already unit length.
    ///
    /// Used when restoring persisted vectors so that the stored bits are kept
    /// exactly; the norm is still checked.
    pub fn from_normalized(id: DocId, values: Vec<f64>) -> Result<Self> {
        check_finite(&values, Some(id))?;
        let norm = l2_norm(&values);
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParams(alloc::format!(
                "vector {id} is not unit length (norm {norm})"
            )));
        }
        Ok(Self { id, values })
    }

    pub fn id(&self) -> DocId {
        self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn with_id(mut self, id: DocId) -> Self {
        self.id = id;
        self
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(values: &[f64]) -> f64 {
    libm::sqrt(dot(values, values))
}

/// Cosine similarity `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let denom = l2_norm(a) * l2_norm(b);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((dot(a, b) / denom).clamp(-1.0, 1.0))
}

/// Scales `values` to unit L2 norm.
pub fn normalize(values: &[f64]) -> Result<Vec<f64>> {
    normalize_row(values.to_vec(), None)
}

fn check_finite(values: &[f64], row: Option<DocId>) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyVector { row });
    }
    match values.iter().position(|v| !v.is_finite()) {
        Some(feature) => Err(Error::NonFinite { row, feature }),
        None => Ok(()),
    }
}

fn normalize_row(mut values: Vec<f64>, row: Option<DocId>) -> Result<Vec<f64>> {
    check_finite(&values, row)?;
    // Rescale by the largest magnitude first so that tiny or huge inputs do
    // not underflow/overflow in the sum of squares.
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Err(Error::ZeroVector { row });
    }
    values.iter_mut().for_each(|v| *v /= max);
    let norm = l2_norm(&values);
    values.iter_mut().for_each(|v| *v /= norm);
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cosine_examples() {
        let v = normalize(&[0.3, -0.2, 0.9]).unwrap();
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), 0.0);
        let c = cosine(&[0.6, 0.8, 0.0], &[0.8, 0.6, 0.0]).unwrap();
        assert!((c - 0.96).abs() < 1e-12);
    }

    #[test]
    fn cosine_rejects_dimension_mismatch() {
        let err = cosine(&[1.0, 0.0], &[1.0, 0.0, 0.0]).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 3 });
    }

    #[test]
    fn normalize_examples() {
        let v = normalize(&[3.0, 4.0]).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-12 && (v[1] - 0.8).abs() < 1e-12);
        assert_eq!(normalize(&[2.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        let err = normalize(&[0.0, 0.0]).unwrap_err();
        assert_eq!(err, Error::ZeroVector { row: None });
        assert!(alloc::format!("{err}").contains("zero vector"));
    }

    #[test]
    fn ingestion_errors_name_the_row() {
        let err = DenseVector::new(7, vec![1.0, f64::NAN]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: Some(7), feature: 1 });
        assert!(alloc::format!("{err}").contains("row 7"));
        let err = DenseVector::new(3, vec![0.0; 4]).unwrap_err();
        assert!(alloc::format!("{err}").contains("zero vector (row 3)"));
        assert!(matches!(DenseVector::new(0, vec![]), Err(Error::EmptyVector { .. })));
    }

    #[test]
    fn tiny_and_huge_inputs_normalize() {
        let v = normalize(&[1e-300, 1e-300]).unwrap();
        assert!((l2_norm(&v) - 1.0).abs() < 1e-12);
        let v = normalize(&[1e300, -1e300, 1e300]).unwrap();
        assert!((l2_norm(&v) - 1.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn raw() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-10.0f64..10.0, 1..32)
                .prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-6))
        }

        proptest! {
            #[test]
            fn normalized_has_unit_norm(v in raw()) {
                let n = normalize(&v).unwrap();
                prop_assert!((l2_norm(&n) - 1.0).abs() <= 1e-6);
            }

            #[test]
            fn normalize_is_idempotent(v in raw()) {
                let once = normalize(&v).unwrap();
                let twice = normalize(&once).unwrap();
                for (a, b) in once.iter().zip(&twice) {
                    prop_assert!((a - b).abs() <= 1e-9);
                }
            }

            #[test]
            fn cosine_symmetric_and_bounded(pair in (1usize..24).prop_flat_map(|n| (
                proptest::collection::vec(-1.0f64..1.0, n),
                proptest::collection::vec(-1.0f64..1.0, n),
            ))) {
                let (a, b) = pair;
                let ab = cosine(&a, &b).unwrap();
                let ba = cosine(&b, &a).unwrap();
                prop_assert!((ab - ba).abs() <= 1e-12);
                prop_assert!(ab.abs() <= 1.0 + 1e-9);
            }
        }
    }
}
