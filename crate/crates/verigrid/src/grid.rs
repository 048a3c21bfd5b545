//! Parameter-space primitives: points, boxes, and the finite evaluation grid.
//!
//! Every run works over a fixed rectangular discretization of the uncertainty
//! box. Grid locations are addressed by a single flat index (first dimension
//! varies fastest) so training sets, pools, truth masks, and region estimates
//! can all share plain vectors.

use crate::error::{Error, Result};

/// A point in parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    coords: Vec<f64>,
}

impl ParamPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

impl std::ops::Index<usize> for ParamPoint {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

impl From<Vec<f64>> for ParamPoint {
    fn from(coords: Vec<f64>) -> Self {
        Self::new(coords)
    }
}

/// Axis-aligned rectangular bounds, one `(lo, hi)` pair per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    bounds: Vec<(f64, f64)>,
}

impl ParamBox {
    /// Bounds must satisfy `lo < hi` in every dimension.
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidSimConfig(format!(
                    "degenerate bounds [{lo}, {hi}] in dimension {d}"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn lo(&self, d: usize) -> f64 {
        self.bounds[d].0
    }

    pub fn hi(&self, d: usize) -> f64 {
        self.bounds[d].1
    }

    pub fn span(&self, d: usize) -> f64 {
        self.bounds[d].1 - self.bounds[d].0
    }

    pub fn contains(&self, p: &ParamPoint) -> bool {
        p.dim() == self.dim()
            && self
                .bounds
                .iter()
                .zip(p.coords())
                .all(|(&(lo, hi), &x)| lo <= x && x <= hi)
    }
}

/// Finite rectangular grid over a [`ParamBox`].
///
/// Axis `d` holds `resolution[d]` evenly spaced values including both
/// endpoints. Flat index `i` maps to multi-index by peeling dimension 0
/// fastest: `i = i0 + n0 * (i1 + n1 * i2 ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    bounds: ParamBox,
    axes: Vec<Vec<f64>>,
}

impl ParamGrid {
    /// Every dimension needs at least two points (the box endpoints).
    pub fn new(bounds: ParamBox, resolution: &[usize]) -> Result<Self> {
        if resolution.len() != bounds.dim() {
            return Err(Error::DimensionMismatch {
                expected: bounds.dim(),
                got: resolution.len(),
            });
        }
        let mut axes = Vec::with_capacity(resolution.len());
        for (d, &n) in resolution.iter().enumerate() {
            if n < 2 {
                return Err(Error::InvalidSimConfig(format!(
                    "grid resolution must be >= 2, got {n} in dimension {d}"
                )));
            }
            let (lo, hi) = (bounds.lo(d), bounds.hi(d));
            let step = (hi - lo) / (n - 1) as f64;
            let axis: Vec<f64> = (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
                .collect();
            axes.push(axis);
        }
        Ok(Self { bounds, axes })
    }

    pub fn bounds(&self) -> &ParamBox {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn resolution(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn axis(&self, d: usize) -> &[f64] {
        &self.axes[d]
    }

    /// Total number of grid locations.
    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut mi = Vec::with_capacity(self.dim());
        for axis in &self.axes {
            mi.push(index % axis.len());
            index /= axis.len();
        }
        debug_assert_eq!(index, 0, "flat index out of range");
        mi
    }

    pub fn flat_index(&self, mi: &[usize]) -> usize {
        debug_assert_eq!(mi.len(), self.dim());
        let mut index = 0;
        for (axis, &i) in self.axes.iter().zip(mi).rev() {
            debug_assert!(i < axis.len());
            index = index * axis.len() + i;
        }
        index
    }

    pub fn point(&self, index: usize) -> ParamPoint {
        let mi = self.multi_index(index);
        ParamPoint::new(
            mi.iter()
                .zip(&self.axes)
                .map(|(&i, axis)| axis[i])
                .collect(),
        )
    }

    /// Grid location scaled to the unit cube, dimension-wise
    /// `(x - lo) / (hi - lo)`. Used by the diversity kernel so its bandwidth
    /// is expressed in normalized grid units.
    pub fn unit_point(&self, index: usize) -> Vec<f64> {
        self.point(index)
            .coords()
            .iter()
            .enumerate()
            .map(|(d, &x)| (x - self.bounds.lo(d)) / self.bounds.span(d))
            .collect()
    }

    pub fn iter_points(&self) -> impl Iterator<Item = ParamPoint> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_rejects_degenerate_bounds() {
        assert!(ParamBox::new(vec![(0.0, 0.0)]).is_err());
        assert!(ParamBox::new(vec![(1.0, -1.0)]).is_err());
        assert!(ParamBox::new(vec![(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn grid_axes_include_endpoints() {
        let b = ParamBox::new(vec![(-10.0, 10.0), (0.0, 1.0)]).unwrap();
        let g = ParamGrid::new(b, &[5, 3]).unwrap();
        assert_eq!(g.axis(0), &[-10.0, -5.0, 0.0, 5.0, 10.0]);
        assert_eq!(g.axis(1), &[0.0, 0.5, 1.0]);
        assert_eq!(g.len(), 15);
    }

    #[test]
    fn flat_index_round_trip() {
        let b = ParamBox::new(vec![(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]).unwrap();
        let g = ParamGrid::new(b, &[4, 3, 5]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        // first dimension varies fastest
        assert_eq!(g.multi_index(1), vec![1, 0, 0]);
        assert_eq!(g.multi_index(4), vec![0, 1, 0]);
    }

    #[test]
    fn unit_point_normalizes_to_unit_cube() {
        let b = ParamBox::new(vec![(-10.0, 10.0), (5.0, 15.0)]).unwrap();
        let g = ParamGrid::new(b, &[3, 3]).unwrap();
        let u = g.unit_point(g.flat_index(&[2, 1]));
        assert_eq!(u, vec![1.0, 0.5]);
        for i in 0..g.len() {
            assert!(g.unit_point(i).iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }
}
