//! Smooth convex objectives and the [`Problem`] wrapper the solvers consume.
//!
//! A [`SmoothObjective`] provides value and gradient oracles. A [`Problem`]
//! binds an objective to a block partition, the Lipschitz constants the
//! step-size rules need, and the optional ground-truth capabilities (minimum
//! value, arg-min projection, restricted strong convexity constant) used by
//! the diagnostics.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Value/gradient oracle of a differentiable convex function.
pub trait SmoothObjective: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Value and gradient together; implementations share intermediate
    /// products where they can.
    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.value(x), self.gradient(x))
    }

    /// Partial gradient with respect to the coordinates in `block`.
    fn block_gradient(&self, x: &DVector<f64>, block: Range<usize>) -> DVector<f64> {
        self.gradient(x).rows_range(block).into_owned()
    }

    /// Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;

    /// Lipschitz constant of the partial gradient in `block` under
    /// perturbations of that block. `None` falls back to the global constant.
    fn block_lipschitz(&self, _block: Range<usize>) -> Option<f64> {
        None
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// `f(x) − f(x_star)` for a minimizer `x_star`, evaluated without the
    /// cancellation of a plain difference of values.
    fn gap_to(&self, _x: &DVector<f64>, _x_star: &DVector<f64>) -> Option<f64> {
        None
    }

    /// Whether the objective is a quadratic, so its Hessian is constant.
    fn is_quadratic(&self) -> bool {
        false
    }
}

/// Ordered, disjoint, contiguous index ranges covering `0..dimension`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    ranges: Vec<Range<usize>>,
}

impl BlockPartition {
    #[allow(clippy::single_range_in_vec_init)]
    pub fn single(dimension: usize) -> Self {
        Self {
            ranges: vec![0..dimension],
        }
    }

    pub fn coordinates(dimension: usize) -> Self {
        Self {
            ranges: (0..dimension).map(|i| i..i + 1).collect(),
        }
    }

    /// `blocks` nearly equal contiguous blocks; the first `dimension % blocks`
    /// blocks get one extra coordinate.
    pub fn equal(dimension: usize, blocks: usize) -> Result<Self> {
        if blocks == 0 || blocks > dimension {
            return Err(Error::InvalidPartition(format!(
                "cannot split {dimension} coordinates into {blocks} blocks"
            )));
        }
        let base = dimension / blocks;
        let extra = dimension % blocks;
        let mut start = 0;
        let ranges = (0..blocks)
            .map(|b| {
                let len = base + usize::from(b < extra);
                let r = start..start + len;
                start += len;
                r
            })
            .collect();
        Ok(Self { ranges })
    }

    pub fn from_ranges(dimension: usize, ranges: Vec<Range<usize>>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::InvalidPartition("no blocks".into()));
        }
        let mut expected = 0;
        for r in &ranges {
            if r.start != expected || r.end <= r.start {
                return Err(Error::InvalidPartition(format!(
                    "block {r:?} does not continue at {expected} or is empty"
                )));
            }
            expected = r.end;
        }
        if expected != dimension {
            return Err(Error::InvalidPartition(format!(
                "blocks cover 0..{expected}, dimension is {dimension}"
            )));
        }
        Ok(Self { ranges })
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    pub fn range(&self, i: usize) -> Result<Range<usize>> {
        self.ranges.get(i).cloned().ok_or(Error::BlockOutOfRange {
            index: i,
            blocks: self.ranges.len(),
        })
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }
}

/// The solution set `arg min f`, in a form that supports Euclidean
/// projection.
#[derive(Debug, Clone)]
pub enum ArgminSet {
    /// Unique minimizer.
    Point(DVector<f64>),
    /// `anchor + null(A)`, where the columns of `row_basis` are an
    /// orthonormal basis of the row space of `A`.
    Affine {
        anchor: DVector<f64>,
        row_basis: DMatrix<f64>,
    },
}

impl ArgminSet {
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ArgminSet::Point(p) => p.clone(),
            ArgminSet::Affine { anchor, row_basis } => {
                let d = x - anchor;
                x - row_basis * row_basis.tr_mul(&d)
            }
        }
    }

    /// Some minimizer.
    pub fn representative(&self) -> &DVector<f64> {
        match self {
            ArgminSet::Point(p) => p,
            ArgminSet::Affine { anchor, .. } => anchor,
        }
    }

    pub fn is_unique(&self) -> bool {
        match self {
            ArgminSet::Point(_) => true,
            ArgminSet::Affine { row_basis, anchor } => row_basis.ncols() == anchor.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub has_min_value: bool,
    pub has_argmin_projection: bool,
    pub has_rsc_constant: bool,
}

/// An objective bound to a block partition and its Lipschitz metadata.
///
/// Immutable once built; cloning shares the underlying objective.
#[derive(Debug, Clone)]
pub struct Problem {
    objective: Arc<dyn SmoothObjective>,
    partition: BlockPartition,
    lipschitz_global: f64,
    lipschitz_blocks: Vec<f64>,
    min_value: Option<f64>,
    argmin: Option<ArgminSet>,
    rsc_constant: Option<f64>,
}

impl Problem {
    /// Wraps `objective` with a single-block partition.
    pub fn new(objective: Arc<dyn SmoothObjective>) -> Result<Self> {
        let dimension = objective.dimension();
        if dimension == 0 {
            return Err(Error::param("dimension", "must be positive"));
        }
        let lipschitz_global = objective.lipschitz();
        if !(lipschitz_global > 0.0 && lipschitz_global.is_finite()) {
            return Err(Error::param(
                "lipschitz",
                format!("must be positive and finite, got {lipschitz_global}"),
            ));
        }
        Ok(Self {
            objective,
            partition: BlockPartition::single(dimension),
            lipschitz_global,
            lipschitz_blocks: vec![lipschitz_global],
            min_value: None,
            argmin: None,
            rsc_constant: None,
        })
    }

    /// Rebinds the problem to `partition`, recomputing the block constants.
    pub fn with_partition(mut self, partition: BlockPartition) -> Result<Self> {
        if partition.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: partition.dimension(),
            });
        }
        let mut blocks = Vec::with_capacity(partition.len());
        for r in partition.ranges() {
            let li = if partition.len() == 1 {
                self.lipschitz_global
            } else {
                self.objective
                    .block_lipschitz(r.clone())
                    .unwrap_or(self.lipschitz_global)
            };
            if !(li > 0.0 && li.is_finite()) {
                return Err(Error::param(
                    "lipschitz_blocks",
                    format!("block {r:?} has constant {li}"),
                ));
            }
            blocks.push(li);
        }
        self.partition = partition;
        self.lipschitz_blocks = blocks;
        Ok(self)
    }

    pub fn with_blocks(self, blocks: usize) -> Result<Self> {
        let p = BlockPartition::equal(self.dimension(), blocks)?;
        self.with_partition(p)
    }

    pub fn with_min_value(mut self, min_value: f64) -> Self {
        self.min_value = Some(min_value);
        self
    }

    pub fn with_argmin(mut self, argmin: ArgminSet) -> Self {
        self.argmin = Some(argmin);
        self
    }

    pub fn with_rsc_constant(mut self, nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::param(
                "rsc_constant",
                format!("must be positive, got {nu}"),
            ));
        }
        self.rsc_constant = Some(nu);
        Ok(self)
    }

    pub fn objective(&self) -> &dyn SmoothObjective {
        self.objective.as_ref()
    }

    pub fn dimension(&self) -> usize {
        self.objective.dimension()
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn block_count(&self) -> usize {
        self.partition.len()
    }

    pub fn lipschitz_global(&self) -> f64 {
        self.lipschitz_global
    }

    pub fn lipschitz_blocks(&self) -> &[f64] {
        &self.lipschitz_blocks
    }

    pub fn capabilities(&self) -> Capabilities {
        Capabilities {
            has_min_value: self.min_value.is_some(),
            has_argmin_projection: self.argmin.is_some(),
            has_rsc_constant: self.rsc_constant.is_some(),
        }
    }

    pub fn min_value(&self) -> Option<f64> {
        self.min_value
    }

    pub fn rsc_constant(&self) -> Option<f64> {
        self.rsc_constant
    }

    pub fn argmin(&self) -> Option<&ArgminSet> {
        self.argmin.as_ref()
    }

    pub fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "point" });
        }
        Ok(())
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.objective.value(x))
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(x)?;
        Ok(self.objective.gradient(x))
    }

    pub fn block_gradient(&self, x: &DVector<f64>, block: usize) -> Result<DVector<f64>> {
        let range = self.partition.range(block)?;
        self.check_point(x)?;
        Ok(self.objective.block_gradient(x, range))
    }

    pub fn project_to_argmin(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let set = self
            .argmin
            .as_ref()
            .ok_or(Error::Unsupported("arg-min projection"))?;
        self.check_point(x)?;
        Ok(set.project(x))
    }

    /// `f(x) − min f`, when the minimum is known. Uses the objective's
    /// cancellation-free form when a minimizer is available.
    pub fn optimality_gap(&self, x: &DVector<f64>) -> Option<f64> {
        if let Some(set) = &self.argmin {
            if let Some(gap) = self.objective.gap_to(x, set.representative()) {
                return Some(gap);
            }
        }
        self.min_value.map(|m| self.objective.value(x) - m)
    }

    /// Squared distance from `x` to `arg min f`.
    pub fn distance_sq_to_argmin(&self, x: &DVector<f64>) -> Option<f64> {
        self.argmin
            .as_ref()
            .map(|set| (x - set.project(x)).norm_squared())
    }
}

/// `f(x) = ½ (x − x₀)ᵀ Q (x − x₀)` for a symmetric PSD `Q`; minimum 0.
#[derive(Debug, Clone)]
pub struct Quadratic {
    q: DMatrix<f64>,
    center: DVector<f64>,
    lipschitz: f64,
}

impl Quadratic {
    pub fn new(q: DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        if q.nrows() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: q.nrows(),
                found: center.len(),
            });
        }
        let lipschitz = crate::linalg::max_eigenvalue(&q, 1e-12)?;
        Ok(Self { q, center, lipschitz })
    }

    /// `½‖x‖²` in `dimension` coordinates.
    pub fn isotropic(dimension: usize) -> Self {
        Self {
            q: DMatrix::identity(dimension, dimension),
            center: DVector::zeros(dimension),
            lipschitz: 1.0,
        }
    }

    pub fn hessian_matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Wraps into a [`Problem`] with min value, arg-min set and RSC constant
    /// `λ_min+(Q)/2`.
    pub fn into_problem(self) -> Result<Problem> {
        let (basis, smallest) = {
            let (values, vectors) = crate::linalg::sorted_symmetric_eigen(&self.q);
            let thresh = crate::linalg::rank_threshold(values[0].max(0.0), values.len());
            let rank = values.iter().take_while(|&&v| v > thresh).count();
            (vectors.columns(0, rank).into_owned(), values[rank.max(1) - 1])
        };
        let argmin = if basis.ncols() == self.center.len() {
            ArgminSet::Point(self.center.clone())
        } else {
            ArgminSet::Affine {
                anchor: self.center.clone(),
                row_basis: basis,
            }
        };
        Problem::new(Arc::new(self))?
            .with_min_value(0.0)
            .with_argmin(argmin)
            .with_rsc_constant(smallest / 2.0)
    }
}

impl SmoothObjective for Quadratic {
    fn dimension(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.center;
        0.5 * d.dot(&(&self.q * &d))
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * (x - &self.center)
    }

    fn block_gradient(&self, x: &DVector<f64>, block: Range<usize>) -> DVector<f64> {
        let d = x - &self.center;
        self.q.rows_range(block) * d
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn block_lipschitz(&self, block: Range<usize>) -> Option<f64> {
        let sub = self.q.view_range(block.clone(), block).into_owned();
        crate::linalg::max_eigenvalue(&sub, 1e-12).ok()
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.q.clone())
    }

    fn gap_to(&self, x: &DVector<f64>, x_star: &DVector<f64>) -> Option<f64> {
        let d = x - x_star;
        Some(0.5 * d.dot(&(&self.q * &d)))
    }

    fn is_quadratic(&self) -> bool {
        true
    }
}
