//! Tensor access patterns and the analyses built on top of them.
//!
//! A [`TensorAccessPattern`] (tap) describes an on-the-fly data
//! transformation the way a DMA buffer descriptor does: a tensor shape, a
//! starting offset, and per-dimension iteration sizes and strides. The
//! pattern defines an ordered sequence of linear element offsets and can
//! express reorder, reshape, and repeat transformations without touching
//! the data itself.
//!
//! A [`TensorAccessSequence`] (tase) chains several taps over the same
//! tensor, e.g. one tap per tile of a tiling scheme.
//!
//! Both carry two derived analyses: the *access count map* (how many times
//! each element is touched) and the *access order map* (the last iteration
//! index that touched each element, `-1` for untouched elements). Two
//! patterns with different encodings are *access equivalent* when their
//! order and count maps agree; see [`access_equivalent`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the number of iteration dimensions of a pattern.
///
/// Per-DMA limits are modeled separately in the device profile; this is the
/// library-wide construction cap used by [`TensorAccessPattern::new`].
pub const DEFAULT_MAX_RANK: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TapError {
    #[error("sizes has {sizes} dimensions but strides has {strides}")]
    DimensionMismatch { sizes: usize, strides: usize },
    #[error("tensor dims and sizes must be non-empty")]
    EmptyDims,
    #[error("tensor dims and sizes entries must be positive")]
    ZeroEntry,
    #[error("pattern rank {rank} exceeds the maximum rank {max}")]
    RankOverflow { rank: usize, max: usize },
    #[error("pattern reaches linear offset {offset} but the tensor has only {len} elements")]
    OutOfBounds { offset: usize, len: usize },
    #[error("pattern extents overflow the address computation")]
    Overflow,
    #[error("all patterns in a sequence must share tensor dims: {a:?} vs {b:?}")]
    MismatchedDims { a: Vec<usize>, b: Vec<usize> },
    #[error("a sequence must contain at least one pattern")]
    EmptySequence,
}

/// A tensor access pattern: tensor dims, starting offset, and iteration
/// sizes/strides (dimension 0 outermost). All units are elements; tensors
/// linearize row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TensorAccessPattern {
    tensor_dims: Vec<usize>,
    offset: usize,
    sizes: Vec<usize>,
    strides: Vec<usize>,
}

impl TensorAccessPattern {
    /// Builds a validated pattern with the default rank cap.
    ///
    /// Bounds are checked eagerly against the extreme corner
    /// `offset + sum((size_d - 1) * stride_d)`, which is exact because
    /// strides are non-negative.
    pub fn new(
        tensor_dims: &[usize],
        offset: usize,
        sizes: &[usize],
        strides: &[usize],
    ) -> Result<Self, TapError> {
        Self::with_max_rank(tensor_dims, offset, sizes, strides, DEFAULT_MAX_RANK)
    }

    /// Same as [`Self::new`] with an explicit rank cap.
    pub fn with_max_rank(
        tensor_dims: &[usize],
        offset: usize,
        sizes: &[usize],
        strides: &[usize],
        max_rank: usize,
    ) -> Result<Self, TapError> {
        if sizes.len() != strides.len() {
            return Err(TapError::DimensionMismatch {
                sizes: sizes.len(),
                strides: strides.len(),
            });
        }
        if tensor_dims.is_empty() || sizes.is_empty() {
            return Err(TapError::EmptyDims);
        }
        if sizes.len() > max_rank {
            return Err(TapError::RankOverflow {
                rank: sizes.len(),
                max: max_rank,
            });
        }
        if tensor_dims.contains(&0) || sizes.contains(&0) {
            return Err(TapError::ZeroEntry);
        }
        let len = checked_product(tensor_dims)?;
        checked_product(sizes)?;
        let mut extreme = offset;
        for (&size, &stride) in sizes.iter().zip(strides) {
            let span = (size - 1).checked_mul(stride).ok_or(TapError::Overflow)?;
            extreme = extreme.checked_add(span).ok_or(TapError::Overflow)?;
        }
        if extreme >= len {
            return Err(TapError::OutOfBounds {
                offset: extreme,
                len,
            });
        }
        Ok(Self {
            tensor_dims: tensor_dims.to_vec(),
            offset,
            sizes: sizes.to_vec(),
            strides: strides.to_vec(),
        })
    }

    pub fn tensor_dims(&self) -> &[usize] {
        &self.tensor_dims
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Number of iteration dimensions.
    pub fn rank(&self) -> usize {
        self.sizes.len()
    }

    /// Total element count of the underlying tensor.
    pub fn tensor_len(&self) -> usize {
        self.tensor_dims.iter().product()
    }

    /// Total number of iterations (product of sizes). Repeats count.
    pub fn total_iterations(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Largest linear offset the pattern can generate.
    pub fn max_offset(&self) -> usize {
        self.offset
            + self
                .sizes
                .iter()
                .zip(&self.strides)
                .map(|(&s, &st)| (s - 1) * st)
                .sum::<usize>()
    }

    /// The generated offsets in iteration order: lexicographic over the
    /// index tuple with dimension 0 outermost.
    pub fn offsets(&self) -> Offsets<'_> {
        Offsets {
            tap: self,
            index: vec![0; self.sizes.len()],
            current: self.offset,
            remaining: self.total_iterations(),
        }
    }

    /// Walks every generated offset and re-checks it against the tensor
    /// size. Construction already guarantees this via the corner formula;
    /// the audit exists as an independent check.
    pub fn audit_bounds(&self) -> Result<(), TapError> {
        let len = self.tensor_len();
        for off in self.offsets() {
            if off >= len {
                return Err(TapError::OutOfBounds { offset: off, len });
            }
        }
        Ok(())
    }

    /// Field-wise equality: dims, offset, sizes, and strides all match.
    pub fn strictly_equal(&self, other: &Self) -> bool {
        self == other
    }

    pub fn access_order(&self) -> AccessMap {
        access_order(self)
    }

    pub fn access_count(&self) -> AccessMap {
        access_count(self)
    }
}

fn checked_product(values: &[usize]) -> Result<usize, TapError> {
    values
        .iter()
        .try_fold(1usize, |acc, &v| acc.checked_mul(v))
        .ok_or(TapError::Overflow)
}

/// Iterator over the linear offsets generated by a pattern.
pub struct Offsets<'a> {
    tap: &'a TensorAccessPattern,
    index: Vec<usize>,
    current: usize,
    remaining: usize,
}

impl Iterator for Offsets<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.remaining == 0 {
            return None;
        }
        let out = self.current;
        self.remaining -= 1;
        // Odometer increment, innermost dimension fastest.
        for dim in (0..self.index.len()).rev() {
            self.index[dim] += 1;
            if self.index[dim] < self.tap.sizes[dim] {
                self.current += self.tap.strides[dim];
                break;
            }
            self.index[dim] = 0;
            self.current -= (self.tap.sizes[dim] - 1) * self.tap.strides[dim];
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for Offsets<'_> {}

/// An ordered sequence of patterns over the same tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorAccessSequence {
    taps: Vec<TensorAccessPattern>,
}

impl TensorAccessSequence {
    /// Builds a sequence, requiring at least one pattern and identical
    /// tensor dims throughout.
    pub fn from_taps(taps: Vec<TensorAccessPattern>) -> Result<Self, TapError> {
        let first = taps.first().ok_or(TapError::EmptySequence)?;
        let dims = first.tensor_dims().to_vec();
        for tap in &taps[1..] {
            if tap.tensor_dims() != dims.as_slice() {
                return Err(TapError::MismatchedDims {
                    a: dims,
                    b: tap.tensor_dims().to_vec(),
                });
            }
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[TensorAccessPattern] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TensorAccessPattern> {
        self.taps.iter()
    }

    pub fn access_order(&self) -> AccessMap {
        access_order(self)
    }

    pub fn access_count(&self) -> AccessMap {
        access_count(self)
    }
}

impl std::ops::Index<usize> for TensorAccessSequence {
    type Output = TensorAccessPattern;

    fn index(&self, i: usize) -> &TensorAccessPattern {
        &self.taps[i]
    }
}

impl<'a> IntoIterator for &'a TensorAccessSequence {
    type Item = &'a TensorAccessPattern;
    type IntoIter = std::slice::Iter<'a, TensorAccessPattern>;

    fn into_iter(self) -> Self::IntoIter {
        self.taps.iter()
    }
}

/// Anything that generates an ordered stream of element offsets over a
/// tensor: a single pattern or a sequence of them.
pub trait AccessPattern {
    fn tensor_dims(&self) -> &[usize];

    /// Total iterations across the whole stream.
    fn total_iterations(&self) -> usize;

    /// Calls `visit` once per iteration, in order, with the linear offset.
    fn visit_offsets(&self, visit: &mut dyn FnMut(usize));
}

impl AccessPattern for TensorAccessPattern {
    fn tensor_dims(&self) -> &[usize] {
        &self.tensor_dims
    }

    fn total_iterations(&self) -> usize {
        self.total_iterations()
    }

    fn visit_offsets(&self, visit: &mut dyn FnMut(usize)) {
        for off in self.offsets() {
            visit(off);
        }
    }
}

impl AccessPattern for TensorAccessSequence {
    fn tensor_dims(&self) -> &[usize] {
        self.taps[0].tensor_dims()
    }

    fn total_iterations(&self) -> usize {
        self.taps.iter().map(|t| t.total_iterations()).sum()
    }

    fn visit_offsets(&self, visit: &mut dyn FnMut(usize)) {
        for tap in &self.taps {
            tap.visit_offsets(visit);
        }
    }
}

/// Whether a map records access order or access multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Order,
    Count,
}

/// A per-element analysis grid with the same shape as the tensor.
///
/// Count maps hold access multiplicities. Order maps hold the last
/// iteration index that accessed each element, or `-1` for elements the
/// pattern never touches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessMap {
    kind: MapKind,
    tensor_dims: Vec<usize>,
    values: Vec<i64>,
}

impl AccessMap {
    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn tensor_dims(&self) -> &[usize] {
        &self.tensor_dims
    }

    /// Row-major values, one per tensor element.
    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn rank(&self) -> usize {
        self.tensor_dims.len()
    }

    pub fn max(&self) -> i64 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn sum(&self) -> i64 {
        self.values.iter().sum()
    }
}

/// Computes the order map: each element holds the last iteration index
/// that accessed it, `-1` if never accessed.
pub fn access_order(pattern: &(impl AccessPattern + ?Sized)) -> AccessMap {
    let dims = pattern.tensor_dims().to_vec();
    let mut values = vec![-1i64; dims.iter().product()];
    let mut t: i64 = 0;
    pattern.visit_offsets(&mut |off| {
        values[off] = t;
        t += 1;
    });
    AccessMap {
        kind: MapKind::Order,
        tensor_dims: dims,
        values,
    }
}

/// Computes the count map: per-element access multiplicity.
pub fn access_count(pattern: &(impl AccessPattern + ?Sized)) -> AccessMap {
    let dims = pattern.tensor_dims().to_vec();
    let mut values = vec![0i64; dims.iter().product()];
    pattern.visit_offsets(&mut |off| values[off] += 1);
    AccessMap {
        kind: MapKind::Count,
        tensor_dims: dims,
        values,
    }
}

/// True when both patterns cover the same tensor dims and generate
/// identical access order and count maps, regardless of how the
/// sizes/strides encode the traversal.
pub fn access_equivalent(
    a: &(impl AccessPattern + ?Sized),
    b: &(impl AccessPattern + ?Sized),
) -> bool {
    a.tensor_dims() == b.tensor_dims()
        && access_order(a) == access_order(b)
        && access_count(a) == access_count(b)
}

/// On-disk form of a single pattern:
/// `{"dims":[6,4],"offset":0,"sizes":[1,1,3,2],"strides":[0,0,4,1]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TapSpec {
    pub dims: Vec<usize>,
    #[serde(default)]
    pub offset: usize,
    pub sizes: Vec<usize>,
    pub strides: Vec<usize>,
}

impl TapSpec {
    pub fn build(&self) -> Result<TensorAccessPattern, TapError> {
        TensorAccessPattern::new(&self.dims, self.offset, &self.sizes, &self.strides)
    }
}

impl From<&TensorAccessPattern> for TapSpec {
    fn from(tap: &TensorAccessPattern) -> Self {
        Self {
            dims: tap.tensor_dims().to_vec(),
            offset: tap.offset(),
            sizes: tap.sizes().to_vec(),
            strides: tap.strides().to_vec(),
        }
    }
}

/// On-disk form of a sequence: shared dims plus per-tap offset/sizes/strides.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaseSpec {
    pub dims: Vec<usize>,
    pub taps: Vec<TaseEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaseEntry {
    #[serde(default)]
    pub offset: usize,
    pub sizes: Vec<usize>,
    pub strides: Vec<usize>,
}

impl TaseSpec {
    pub fn build(&self) -> Result<TensorAccessSequence, TapError> {
        let taps = self
            .taps
            .iter()
            .map(|t| TensorAccessPattern::new(&self.dims, t.offset, &t.sizes, &t.strides))
            .collect::<Result<Vec<_>, _>>()?;
        TensorAccessSequence::from_taps(taps)
    }
}

impl From<&TensorAccessSequence> for TaseSpec {
    fn from(tase: &TensorAccessSequence) -> Self {
        Self {
            dims: tase.taps()[0].tensor_dims().to_vec(),
            taps: tase
                .taps()
                .iter()
                .map(|t| TaseEntry {
                    offset: t.offset(),
                    sizes: t.sizes().to_vec(),
                    strides: t.strides().to_vec(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tap00() -> TensorAccessPattern {
        TensorAccessPattern::new(&[6, 4], 0, &[1, 1, 3, 2], &[0, 0, 4, 1]).unwrap()
    }

    fn tap11() -> TensorAccessPattern {
        TensorAccessPattern::new(&[6, 4], 14, &[1, 1, 3, 2], &[0, 0, 4, 1]).unwrap()
    }

    #[test]
    fn constructs_valid_patterns() {
        tap00();
        tap11();
        TensorAccessPattern::new(&[6, 4], 0, &[6, 4], &[4, 1]).unwrap();
    }

    #[test]
    fn rejects_out_of_bounds() {
        let err = TensorAccessPattern::new(&[6, 4], 20, &[1, 1, 3, 2], &[0, 0, 4, 1]).unwrap_err();
        assert_eq!(
            err,
            TapError::OutOfBounds {
                offset: 29,
                len: 24
            }
        );
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert_eq!(
            TensorAccessPattern::new(&[6, 4], 0, &[1, 2], &[1]).unwrap_err(),
            TapError::DimensionMismatch {
                sizes: 2,
                strides: 1
            }
        );
        assert_eq!(
            TensorAccessPattern::new(&[], 0, &[1], &[0]).unwrap_err(),
            TapError::EmptyDims
        );
        assert_eq!(
            TensorAccessPattern::new(&[4], 0, &[], &[]).unwrap_err(),
            TapError::EmptyDims
        );
        assert_eq!(
            TensorAccessPattern::new(&[4, 0], 0, &[1], &[0]).unwrap_err(),
            TapError::ZeroEntry
        );
        assert_eq!(
            TensorAccessPattern::new(&[64], 0, &[1; 5], &[0; 5]).unwrap_err(),
            TapError::RankOverflow { rank: 5, max: 4 }
        );
        // Higher caps admit higher ranks.
        TensorAccessPattern::with_max_rank(&[64], 0, &[1; 5], &[0; 5], 5).unwrap();
    }

    #[test]
    fn enumerates_offsets_in_order() {
        assert_eq!(
            tap00().offsets().collect::<Vec<_>>(),
            vec![0, 1, 4, 5, 8, 9]
        );
        assert_eq!(
            tap11().offsets().collect::<Vec<_>>(),
            vec![14, 15, 18, 19, 22, 23]
        );
        let single = TensorAccessPattern::new(&[3, 4], 7, &[1], &[0]).unwrap();
        assert_eq!(single.offsets().collect::<Vec<_>>(), vec![7]);
        let repeat = TensorAccessPattern::new(&[2, 2], 2, &[3], &[0]).unwrap();
        assert_eq!(repeat.offsets().collect::<Vec<_>>(), vec![2, 2, 2]);
    }

    #[test]
    fn order_and_count_maps() {
        let t = tap00();
        assert_eq!(t.access_order().max(), 5);
        assert_eq!(t.access_count().sum(), 6);

        let seq = TensorAccessSequence::from_taps(vec![tap00(), tap11()]).unwrap();
        assert_eq!(seq.access_order().max(), 11);
        assert_eq!(seq.access_count().max(), 1);

        let sweep = TensorAccessPattern::new(&[6, 4], 0, &[6, 4], &[4, 1]).unwrap();
        let ramp: Vec<i64> = (0..24).collect();
        assert_eq!(sweep.access_order().values(), ramp.as_slice());

        let repeat = TensorAccessPattern::new(&[2, 2], 2, &[3], &[0]).unwrap();
        assert_eq!(repeat.access_count().values(), &[0, 0, 3, 0]);
    }

    #[test]
    fn sequence_construction_rules() {
        let seq = TensorAccessSequence::from_taps(vec![tap00()]).unwrap();
        assert_eq!(seq.access_order(), tap00().access_order());
        assert_eq!(seq.access_count(), tap00().access_count());

        let other = TensorAccessPattern::new(&[4, 6], 0, &[1], &[0]).unwrap();
        assert!(matches!(
            TensorAccessSequence::from_taps(vec![tap00(), other]).unwrap_err(),
            TapError::MismatchedDims { .. }
        ));
        assert_eq!(
            TensorAccessSequence::from_taps(vec![]).unwrap_err(),
            TapError::EmptySequence
        );
    }

    #[test]
    fn strict_vs_access_equivalence() {
        let a = tap00();
        let b = TensorAccessPattern::new(&[6, 4], 0, &[3, 1, 1, 2], &[4, 0, 0, 1]).unwrap();
        assert!(a.strictly_equal(&a));
        assert!(!a.strictly_equal(&b));
        assert!(access_equivalent(&a, &b));
        assert!(access_equivalent(&a, &a));
        assert!(!access_equivalent(&a, &tap11()));
        // Strict equality always implies access equivalence.
        assert!(access_equivalent(&a, &a.clone()));
    }

    #[test]
    fn unit_dim_insertion_preserves_equivalence() {
        let base = tap11();
        for at in 0..=base.rank().min(3) {
            let mut sizes = base.sizes().to_vec();
            let mut strides = base.strides().to_vec();
            if sizes.len() >= DEFAULT_MAX_RANK {
                break;
            }
            sizes.insert(at, 1);
            strides.insert(at, 0);
            let padded =
                TensorAccessPattern::new(base.tensor_dims(), base.offset(), &sizes, &strides)
                    .unwrap();
            assert!(access_equivalent(&base, &padded));
        }
    }

    #[test]
    fn map_invariants_on_samples() {
        for tap in [
            tap00(),
            tap11(),
            TensorAccessPattern::new(&[8, 8], 3, &[2, 2, 2], &[0, 16, 2]).unwrap(),
            TensorAccessPattern::new(&[64], 0, &[4, 4], &[1, 16]).unwrap(),
        ] {
            let order = tap.access_order();
            let count = tap.access_count();
            assert_eq!(count.sum() as usize, tap.total_iterations());
            assert_eq!(order.max() as usize, tap.total_iterations() - 1);
            for (o, c) in order.values().iter().zip(count.values()) {
                assert_eq!(*o == -1, *c == 0);
            }
        }
    }

    #[test]
    fn audit_matches_constructor() {
        assert!(tap00().audit_bounds().is_ok());
        assert!(tap11().audit_bounds().is_ok());
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"dims":[6,4],"offset":0,"sizes":[1,1,3,2],"strides":[0,0,4,1]}"#;
        let spec: TapSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.build().unwrap(), tap00());

        let spec_back = TapSpec::from(&tap00());
        let reparsed: TapSpec =
            serde_json::from_str(&serde_json::to_string(&spec_back).unwrap()).unwrap();
        assert_eq!(reparsed.build().unwrap(), tap00());

        let tase_json = r#"{"dims":[6,4],"taps":[
            {"offset":0,"sizes":[1,1,3,2],"strides":[0,0,4,1]},
            {"offset":14,"sizes":[1,1,3,2],"strides":[0,0,4,1]}]}"#;
        let tase: TaseSpec = serde_json::from_str(tase_json).unwrap();
        let seq = tase.build().unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq[1], tap11());
    }
}
