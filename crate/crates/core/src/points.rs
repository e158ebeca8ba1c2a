//! Collocation node sets on the unit square.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::{Point2, Real};

const BOUNDARY_TOL: f64 = 1e-14;

/// Default probe resolution for [`fill_distance`].
pub const DEFAULT_PROBE_SIDE: usize = 201;

/// Nodes in `[0,1]^2` split into interior and boundary index sets.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet<T> {
    points: Vec<Point2<T>>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    is_boundary: Vec<bool>,
}

impl<T: Real> NodeSet<T> {
    /// Classifies each point by whether a coordinate sits on 0 or 1.
    pub fn from_points(points: Vec<Point2<T>>) -> Result<Self> {
        let tol = T::lit(BOUNDARY_TOL);
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut is_boundary = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.iter().any(|&c| !c.is_finite() || c < -tol || c > T::one() + tol) {
                return Err(Error::InvalidConfig(format!(
                    "node {i} = ({}, {}) is outside the unit square",
                    p[0], p[1]
                )));
            }
            let on_edge = p.iter().any(|&c| c.abs() <= tol || (c - T::one()).abs() <= tol);
            if on_edge {
                boundary.push(i);
            } else {
                interior.push(i);
            }
            is_boundary.push(on_edge);
        }
        Ok(Self {
            points,
            interior,
            boundary,
            is_boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Point2<T> {
        self.points[i]
    }

    pub fn interior_idx(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_idx(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    /// Boolean mask that is true on interior rows.
    pub fn interior_mask(&self) -> Vec<bool> {
        self.is_boundary.iter().map(|b| !b).collect()
    }

    /// CSV with header `x,y,is_boundary`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "y", "is_boundary"])?;
        for (p, &b) in self.points.iter().zip(&self.is_boundary) {
            out.write_record([
                p[0].to_string(),
                p[1].to_string(),
                (b as u8).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_side(n_side: usize) -> Result<()> {
    if n_side < 2 {
        return Err(Error::InvalidConfig(format!(
            "n_side must be at least 2, got {n_side}"
        )));
    }
    Ok(())
}

/// Tensor grid with spacing `1/(n_side-1)`; node `i * n_side + j` is `(i h, j h)`.
pub fn uniform_grid<T: Real>(n_side: usize) -> Result<NodeSet<T>> {
    check_side(n_side)?;
    let den = T::from_usize_lossy(n_side - 1);
    let mut pts = Vec::with_capacity(n_side * n_side);
    for i in 0..n_side {
        for j in 0..n_side {
            pts.push([T::from_usize_lossy(i) / den, T::from_usize_lossy(j) / den]);
        }
    }
    NodeSet::from_points(pts)
}

/// Van der Corput radical inverse of `k` in the given base.
pub fn radical_inverse<T: Real>(mut k: u64, base: u64) -> T {
    let b = T::lit(base as f64);
    let mut inv = T::one() / b;
    let mut out = T::zero();
    while k > 0 {
        out += T::lit((k % base) as f64) * inv;
        k /= base;
        inv = inv / b;
    }
    out
}

/// Halton points `k = 1..=count` in bases 2 and 3.
pub fn halton_2d<T: Real>(count: usize) -> Vec<Point2<T>> {
    (1..=count as u64)
        .map(|k| [radical_inverse(k, 2), radical_inverse(k, 3)])
        .collect()
}

/// `4(n_side-1)` equally spaced perimeter nodes plus Halton points filling the
/// interior up to `n_side^2` nodes in total.
pub fn halton_node_set<T: Real>(n_side: usize) -> Result<NodeSet<T>> {
    check_side(n_side)?;
    let grid = uniform_grid::<T>(n_side)?;
    let mut pts: Vec<Point2<T>> = grid.boundary_idx().iter().map(|&i| grid.point(i)).collect();
    let want = n_side * n_side - pts.len();
    let inside = |c: T| c > T::zero() && c < T::one();
    let mut k = 1u64;
    while pts.len() < n_side * n_side {
        let p = [radical_inverse(k, 2), radical_inverse(k, 3)];
        if inside(p[0]) && inside(p[1]) {
            pts.push(p);
        }
        k += 1;
    }
    let set = NodeSet::from_points(pts)?;
    debug_assert_eq!(set.interior_idx().len(), want);
    Ok(set)
}

/// Largest distance from a `probe_side^2` probe grid to the nearest node.
pub fn fill_distance<T: Real>(x: &NodeSet<T>, probe_side: usize) -> Result<T> {
    if x.is_empty() {
        return Err(Error::InvalidConfig("fill distance of an empty node set".into()));
    }
    if probe_side < 2 {
        return Err(Error::InvalidConfig("probe grid needs at least 2 points per side".into()));
    }
    let den = T::from_usize_lossy(probe_side - 1);
    let mut worst = T::zero();
    for i in 0..probe_side {
        for j in 0..probe_side {
            let q = [T::from_usize_lossy(i) / den, T::from_usize_lossy(j) / den];
            let nearest = x
                .points()
                .iter()
                .map(|p| {
                    let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
                    dx * dx + dy * dy
                })
                .fold(T::infinity(), T::min);
            worst = worst.max(nearest);
        }
    }
    Ok(worst.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_grid_is_all_corners() {
        let g = uniform_grid::<f64>(2).unwrap();
        assert_eq!(g.points(), &[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]);
        assert!(g.interior_idx().is_empty());
        assert_eq!(g.boundary_idx().len(), 4);
    }

    #[test]
    fn three_by_three_has_center() {
        let g = uniform_grid::<f64>(3).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.interior_idx(), &[4]);
        assert_eq!(g.point(4), [0.5, 0.5]);
    }

    #[test]
    fn sixteen_counts() {
        let g = uniform_grid::<f64>(16).unwrap();
        assert_eq!((g.len(), g.boundary_idx().len(), g.interior_idx().len()), (256, 60, 196));
        let h = halton_node_set::<f64>(16).unwrap();
        assert_eq!((h.len(), h.boundary_idx().len(), h.interior_idx().len()), (256, 60, 196));
    }

    #[test]
    fn halton_prefix() {
        let h = halton_2d::<f64>(4);
        let close = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15;
        assert!(close(h[0], [0.5, 1.0 / 3.0]));
        assert!(close(h[1], [0.25, 2.0 / 3.0]));
        assert!(close(h[3], [0.125, 4.0 / 9.0]));
    }

    #[test]
    fn rejects_small_side() {
        assert!(uniform_grid::<f64>(1).is_err());
        assert!(halton_node_set::<f64>(0).is_err());
    }

    #[test]
    fn fill_distance_examples() {
        let g = uniform_grid::<f64>(3).unwrap();
        let h = fill_distance(&g, 101).unwrap();
        assert!((h - 2f64.sqrt() / 4.0).abs() < 1e-12);
        let one = NodeSet::from_points(vec![[0.5, 0.5]]).unwrap();
        assert!((fill_distance(&one, 3).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn csv_export() {
        let g = uniform_grid::<f64>(2).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("x,y,is_boundary\n0,0,1\n"));
        assert_eq!(s.lines().count(), 5);
    }
}
