//! Circular patch coverings of the unit square and Shepard partition-of-unity weights.

use std::io::Write;

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::points::NodeSet;
use crate::scalar::{Point2, Real};

/// Smallest number of collocation nodes a patch may hold.
pub const MIN_LOCAL_NODES: usize = 5;

/// Default relative enlargement of the minimal covering radius.
pub const DEFAULT_OVERLAP: f64 = 0.2;

const COVERAGE_PROBE_SIDE: usize = 101;

/// Value, gradient and Laplacian of one weight function at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WeightEval<T> {
    pub w: T,
    pub grad_w: [T; 2],
    pub lap_w: T,
}

/// `m_side x m_side` circular patches centred on a grid that includes the corners.
#[derive(Clone, Debug)]
pub struct Covering<T> {
    m_side: usize,
    centers: Vec<Point2<T>>,
    radius: T,
    spacing: T,
    generator: KernelSpec<T>,
}

impl<T: Real> Covering<T> {
    pub fn new(m_side: usize, overlap: T) -> Result<Self> {
        if m_side == 0 {
            return Err(Error::InvalidConfig("m_side must be at least 1".into()));
        }
        if !(overlap > T::zero()) || !overlap.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "overlap must be positive, got {overlap}"
            )));
        }
        let half_diag = T::FRAC_1_SQRT_2();
        let (centers, spacing) = if m_side == 1 {
            (vec![[T::lit(0.5), T::lit(0.5)]], T::one())
        } else {
            let h = T::one() / T::from_usize_lossy(m_side - 1);
            let mut c = Vec::with_capacity(m_side * m_side);
            for a in 0..m_side {
                for b in 0..m_side {
                    c.push([T::from_usize_lossy(a) * h, T::from_usize_lossy(b) * h]);
                }
            }
            (c, h)
        };
        let radius = half_diag * spacing * (T::one() + overlap);
        let generator = KernelSpec::new(KernelFamily::Wendland2, T::one() / radius)?;
        let cov = Self {
            m_side,
            centers,
            radius,
            spacing,
            generator,
        };
        cov.check_coverage()?;
        Ok(cov)
    }

    pub fn m_side(&self) -> usize {
        self.m_side
    }

    pub fn n_patches(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[Point2<T>] {
        &self.centers
    }

    pub fn center(&self, j: usize) -> Point2<T> {
        self.centers[j]
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    /// Weight shape parameter `1 / radius`.
    pub fn gamma(&self) -> T {
        self.generator.epsilon()
    }

    fn check_coverage(&self) -> Result<()> {
        let den = T::from_usize_lossy(COVERAGE_PROBE_SIDE - 1);
        let mut buf = Vec::new();
        for i in 0..COVERAGE_PROBE_SIDE {
            for k in 0..COVERAGE_PROBE_SIDE {
                let x = [T::from_usize_lossy(i) / den, T::from_usize_lossy(k) / den];
                self.patches_into(x, &mut buf);
                if buf.is_empty() {
                    return Err(Error::Coverage {
                        x: x[0].to_f64_lossy(),
                        y: x[1].to_f64_lossy(),
                    });
                }
            }
        }
        Ok(())
    }

    fn sq_dist(&self, j: usize, x: Point2<T>) -> T {
        let c = self.centers[j];
        let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
        dx * dx + dy * dy
    }

    /// Whether `x` lies strictly inside patch `j`.
    pub fn contains(&self, j: usize, x: Point2<T>) -> bool {
        self.sq_dist(j, x) < self.radius * self.radius
    }

    /// Patches containing `x`, in ascending index order.
    pub fn patches_containing(&self, x: Point2<T>) -> Vec<usize> {
        let mut out = Vec::with_capacity(4);
        self.patches_into(x, &mut out);
        out
    }

    fn patches_into(&self, x: Point2<T>, out: &mut Vec<usize>) {
        out.clear();
        if self.m_side == 1 {
            if self.contains(0, x) {
                out.push(0);
            }
            return;
        }
        let last = (self.m_side - 1) as i64;
        let range = |c: T| {
            let lo = ((c - self.radius) / self.spacing).floor().to_i64().unwrap_or(0);
            let hi = ((c + self.radius) / self.spacing).ceil().to_i64().unwrap_or(last);
            (lo.clamp(0, last) as usize, hi.clamp(0, last) as usize)
        };
        let (a0, a1) = range(x[0]);
        let (b0, b1) = range(x[1]);
        for a in a0..=a1 {
            for b in b0..=b1 {
                let j = a * self.m_side + b;
                if self.contains(j, x) {
                    out.push(j);
                }
            }
        }
    }

    fn generator_parts(&self, j: usize, x: Point2<T>) -> (T, [T; 2], T) {
        let c = self.centers[j];
        let d = [x[0] - c[0], x[1] - c[1]];
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let (phi, g, lap) = self
            .generator
            .eval_planar(r)
            .expect("Wendland generator is defined everywhere");
        (phi, [g * d[0], g * d[1]], lap)
    }

    /// Shepard weights of every patch containing `x`, in ascending patch order.
    pub fn weights_at(&self, x: Point2<T>) -> Vec<(usize, WeightEval<T>)> {
        let patches = self.patches_containing(x);
        let parts: Vec<_> = patches.iter().map(|&j| self.generator_parts(j, x)).collect();
        let mut s = T::zero();
        let mut gs = [T::zero(); 2];
        let mut ls = T::zero();
        for (phi, g, lap) in &parts {
            s += *phi;
            gs[0] += g[0];
            gs[1] += g[1];
            ls += *lap;
        }
        assert!(
            patches.is_empty() || s > T::zero(),
            "Shepard denominator vanished inside the covering"
        );
        let gs2 = gs[0] * gs[0] + gs[1] * gs[1];
        let two = T::lit(2.0);
        patches
            .into_iter()
            .zip(parts)
            .map(|(j, (phi, g, lap))| {
                let w = phi / s;
                let grad_w = [
                    (g[0] * s - phi * gs[0]) / (s * s),
                    (g[1] * s - phi * gs[1]) / (s * s),
                ];
                let g_dot = g[0] * gs[0] + g[1] * gs[1];
                let lap_w = lap / s - two * g_dot / (s * s) - phi * ls / (s * s)
                    + two * phi * gs2 / (s * s * s);
                (j, WeightEval { w, grad_w, lap_w })
            })
            .collect()
    }

    /// Weight of patch `j` at `x`; all zero when `x` is outside the patch.
    pub fn shepard_weight(&self, j: usize, x: Point2<T>) -> WeightEval<T> {
        self.weights_at(x)
            .into_iter()
            .find(|(k, _)| *k == j)
            .map(|(_, w)| w)
            .unwrap_or_default()
    }

    /// Node lists per patch and patch lists per node.
    pub fn memberships(&self, nodes: &NodeSet<T>) -> Result<Memberships> {
        let mut patch_nodes = vec![Vec::new(); self.n_patches()];
        let mut node_patches = Vec::with_capacity(nodes.len());
        let mut buf = Vec::new();
        for (i, &p) in nodes.points().iter().enumerate() {
            self.patches_into(p, &mut buf);
            for &j in &buf {
                patch_nodes[j].push(i);
            }
            node_patches.push(buf.clone());
        }
        if let Some((j, list)) = patch_nodes
            .iter()
            .enumerate()
            .find(|(_, l)| l.len() < MIN_LOCAL_NODES)
        {
            return Err(Error::NodeStarved {
                patch: j,
                count: list.len(),
                required: MIN_LOCAL_NODES,
            });
        }
        Ok(Memberships {
            patch_nodes,
            node_patches,
        })
    }

    /// CSV with header `cx,cy,radius`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["cx", "cy", "radius"])?;
        for c in &self.centers {
            out.write_record([c[0].to_string(), c[1].to_string(), self.radius.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Patch/node incidence of a covering over a node set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Memberships {
    /// Nodes inside each patch, ascending.
    pub patch_nodes: Vec<Vec<usize>>,
    /// Patches containing each node, ascending.
    pub node_patches: Vec<Vec<usize>>,
}
