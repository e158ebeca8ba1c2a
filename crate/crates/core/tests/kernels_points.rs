use proptest::prelude::*;

use pumc::covering::Covering;
use pumc::kernels::{KernelFamily, KernelSpec};
use pumc::linalg::{Cholesky, DenseMatrix};
use pumc::points::{halton_2d, halton_node_set, uniform_grid, NodeSet};

const SMOOTH: [KernelFamily; 4] = [
    KernelFamily::Gaussian,
    KernelFamily::Multiquadric,
    KernelFamily::InverseMultiquadric,
    KernelFamily::Matern4,
];

fn central(f: impl Fn(f64) -> f64, r: f64, h: f64) -> f64 {
    (f(r + h) - f(r - h)) / (2.0 * h)
}

proptest! {
    #[test]
    fn radial_derivatives_match_differences(k in 0usize..4, eps in 0.3f64..4.0, r in 0.05f64..1.5) {
        let spec = KernelSpec::new(SMOOTH[k], eps).unwrap();
        let h = 1e-5;
        let d1 = spec.radial_d1(r).unwrap();
        let d2 = spec.radial_d2(r).unwrap();
        let fd1 = central(|s| spec.eval(s), r, h);
        let fd2 = central(|s| spec.radial_d1(s).unwrap(), r, h);
        prop_assert!((d1 - fd1).abs() <= 1e-6 * (1.0 + d1.abs()), "d1 {d1} vs {fd1}");
        prop_assert!((d2 - fd2).abs() <= 1e-6 * (1.0 + d2.abs()), "d2 {d2} vs {fd2}");
        let lap = spec.laplacian(r, 2).unwrap();
        prop_assert!((lap - (d2 + d1 / r)).abs() <= 1e-10 * (1.0 + lap.abs()));
    }

    #[test]
    fn wendland_vanishes_outside_support(eps in 0.2f64..5.0, t in 1.0f64..3.0) {
        for f in [KernelFamily::Wendland2, KernelFamily::Wendland4] {
            let spec = KernelSpec::new(f, eps).unwrap();
            let rho = spec.support_radius().unwrap();
            prop_assert_eq!(spec.eval(rho * t), 0.0);
            prop_assert_eq!(spec.radial_d1(rho * t).unwrap(), 0.0);
        }
    }

    #[test]
    fn positive_definite_gram_matrices_factor(
        jitter in prop::collection::vec(-0.05f64..0.05, 32),
        eps in 2.0f64..6.0,
    ) {
        let pts: Vec<[f64; 2]> = (0..16)
            .map(|i| [0.25 * (i % 4) as f64 + jitter[2 * i], 0.25 * (i / 4) as f64 + jitter[2 * i + 1]])
            .collect();
        for f in [KernelFamily::Gaussian, KernelFamily::InverseMultiquadric, KernelFamily::Matern4, KernelFamily::Wendland2] {
            let spec = KernelSpec::new(f, eps).unwrap();
            let g = DenseMatrix::from_fn(16, 16, |i, j| {
                let (a, b) = (pts[i], pts[j]);
                spec.eval(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
            });
            prop_assert!(Cholesky::factor(&g).is_ok(), "{f:?} eps {eps}");
        }
    }

    #[test]
    fn shepard_weights_sum_to_one_with_consistent_derivatives(
        m in 2usize..6,
        x in 0.0f64..1.0,
        y in 0.0f64..1.0,
    ) {
        let cov = Covering::<f64>::new(m, 0.2).unwrap();
        let ws = cov.weights_at([x, y]);
        prop_assert!(!ws.is_empty());
        let sum: f64 = ws.iter().map(|(_, w)| w.w).sum();
        let gx: f64 = ws.iter().map(|(_, w)| w.grad_w[0]).sum();
        let lap: f64 = ws.iter().map(|(_, w)| w.lap_w).sum();
        prop_assert!((sum - 1.0).abs() < 1e-13);
        prop_assert!(gx.abs() < 1e-9 && lap.abs() < 1e-6, "gx {gx} lap {lap}");
        let h = 1e-6;
        for (j, w) in &ws {
            let fx = central(|s| cov.shepard_weight(*j, [s, y]).w, x, h);
            let fy = central(|s| cov.shepard_weight(*j, [x, s]).w, y, h);
            let tol = 1e-4 * (1.0 + w.grad_w[0].abs() + w.grad_w[1].abs());
            prop_assert!((fx - w.grad_w[0]).abs() < tol && (fy - w.grad_w[1]).abs() < tol);
        }
    }
}

#[test]
fn halton_sequences_are_prefix_stable() {
    let short = halton_2d::<f64>(50);
    let long = halton_2d::<f64>(400);
    assert_eq!(&long[..50], &short[..]);
    assert_eq!(short[0], [0.5, 1.0 / 3.0]);
    assert_eq!(short[1], [0.25, 2.0 / 3.0]);
}

fn check_partition(set: &NodeSet<f64>) {
    let mut all: Vec<usize> = set.interior_idx().iter().chain(set.boundary_idx()).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..set.len()).collect::<Vec<_>>());
    for &i in set.boundary_idx() {
        let p = set.point(i);
        assert!(p.iter().any(|&c| c == 0.0 || c == 1.0));
    }
    for &i in set.interior_idx() {
        assert!(set.point(i).iter().all(|&c| c > 0.0 && c < 1.0));
    }
}

#[test]
fn node_sets_split_into_interior_and_boundary() {
    for n in [2, 5, 16] {
        let g = uniform_grid::<f64>(n).unwrap();
        assert_eq!(g.len(), n * n);
        assert_eq!(g.boundary_idx().len(), 4 * (n - 1));
        check_partition(&g);
        let h = halton_node_set::<f64>(n).unwrap();
        assert_eq!(h.len(), n * n);
        check_partition(&h);
    }
}

#[test]
fn every_node_lies_in_some_patch() {
    let nodes = uniform_grid::<f64>(12).unwrap();
    for m in 1..6 {
        let cov = Covering::<f64>::new(m, 0.2).unwrap();
        for &p in nodes.points() {
            assert!(!cov.patches_containing(p).is_empty(), "m {m} point {p:?}");
        }
    }
}
