use num_complex::Complex;
use proptest::prelude::*;

use pumc::assembly::Discretization;
use pumc::covering::Covering;
use pumc::kernels::{KernelFamily, KernelSpec};
use pumc::pde::{self, build_system, Operators, ProblemKind, StepOptions, TimeScheme};
use pumc::points::{halton_node_set, uniform_grid, NodeSet};
use pumc::stability::{
    amplification_convdiff, amplification_pseudo, compute_m_eigs, propagator_spectral_radius,
};
use pumc::{DiscretizationF32, Op, Precision, ProblemF32, TimeSchemeF32};

fn disc(nodes: NodeSet<f64>, m: usize, eps: f64, precision: Precision) -> Discretization<f64> {
    let k = KernelSpec::new(KernelFamily::InverseMultiquadric, eps).unwrap();
    Discretization::with_precision(k, nodes, Covering::new(m, 0.2).unwrap(), precision).unwrap()
}

#[test]
fn identity_assembles_to_identity_on_scattered_nodes() {
    let d = disc(halton_node_set(10).unwrap(), 3, 4.0, Precision::Working);
    let a = d.assemble(Op::Id).unwrap().matrix;
    let n = a.n_rows();
    let dev = a.to_dense().sub(&pumc::linalg::DenseMatrix::identity(n)).max_abs();
    assert!(dev < 1e-10, "{dev}");
}

#[test]
fn extended_and_working_precision_agree_when_well_conditioned() {
    let w = disc(uniform_grid(10).unwrap(), 2, 4.0, Precision::Working);
    let e = disc(uniform_grid(10).unwrap(), 2, 4.0, Precision::Extended);
    let lw = w.assemble(Op::Lap).unwrap().matrix;
    let le = e.assemble(Op::Lap).unwrap().matrix;
    let rel = lw.to_dense().sub(&le.to_dense()).max_abs() / le.max_abs();
    assert!(rel < 1e-8, "{rel}");
}

fn sorted(mut v: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

#[test]
fn spectrum_is_invariant_under_node_reordering() {
    let problem = ProblemKind::ConvDiff.with_defaults::<f64>();
    let nodes = uniform_grid::<f64>(8).unwrap();
    let mut pts = nodes.points().to_vec();
    pts.reverse();
    pts.rotate_left(7);
    let eigs = |n: NodeSet<f64>| {
        let ops = Operators::assemble(&disc(n, 2, 3.0, Precision::Extended), &problem).unwrap();
        sorted(compute_m_eigs(&problem.spatial_operator(&ops).unwrap(), &ops.a).unwrap())
    };
    let a = eigs(nodes);
    let b = eigs(NodeSet::from_points(pts).unwrap());
    let scale = a.iter().fold(1.0f64, |m, l| m.max(l.norm()));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() < 1e-8 * scale, "{x} vs {y}");
    }
}

#[test]
fn implicit_propagator_does_not_amplify() {
    for kind in [ProblemKind::ConvDiff, ProblemKind::Pseudo] {
        let problem = kind.with_defaults::<f64>();
        let ops = Operators::assemble(&disc(uniform_grid(8).unwrap(), 2, 3.0, Precision::Extended), &problem)
            .unwrap();
        let sys = build_system(&problem, 1.0, 0.01, &ops).unwrap();
        let rho = propagator_spectral_radius(&sys).unwrap();
        assert!(rho <= 1.0 + 1e-10, "{kind:?}: {rho}");
    }
}

#[test]
fn short_solves_track_the_exact_solution() {
    for kind in [ProblemKind::ConvDiff, ProblemKind::Pseudo] {
        let problem = kind.with_defaults::<f64>();
        let d = disc(uniform_grid(12).unwrap(), 2, 3.0, Precision::Working);
        let ops = Operators::assemble(&d, &problem).unwrap();
        let scheme = TimeScheme::new(0.5, 0.005, 0.1).unwrap();
        let run = pde::run(&problem, &scheme, d.nodes(), &ops, StepOptions::default()).unwrap();
        assert_eq!(run.steps, 20);
        assert!(run.mae < 1e-2, "{kind:?}: {}", run.mae);
        for &i in d.nodes().boundary_idx() {
            assert!((run.approx[i] - run.exact[i]).abs() < 1e-10);
        }
    }
}

#[test]
fn last_step_is_shortened_to_hit_the_final_time() {
    let scheme = TimeScheme::<f64>::new(0.5, 0.03, 0.1).unwrap();
    let (full, rest) = scheme.step_plan();
    assert_eq!(full, 3);
    assert!((rest.unwrap() - 0.01).abs() < 1e-15);
    let problem = ProblemKind::ConvDiff.with_defaults::<f64>();
    let d = disc(uniform_grid(8).unwrap(), 2, 3.0, Precision::Working);
    let ops = Operators::assemble(&d, &problem).unwrap();
    let run = pde::run(&problem, &scheme, d.nodes(), &ops, StepOptions::default()).unwrap();
    assert_eq!(run.steps, 4);
    let exact_end = problem.exact(d.nodes().point(0), 0.1);
    assert_eq!(run.exact[0], exact_end);
}

#[test]
fn runs_are_bitwise_reproducible() {
    let cfg = pumc::experiment::ExperimentConfig {
        n_side: 10,
        t_final: 0.05,
        ..Default::default()
    };
    let a = pumc::experiment::run_single(&cfg).unwrap();
    let b = pumc::experiment::run_single(&cfg).unwrap();
    assert_eq!(a.run.u, b.run.u);
    assert_eq!(a.record.mae.to_bits(), b.record.mae.to_bits());
}

#[test]
fn single_precision_pipeline_runs() {
    let k = KernelSpec::<f32>::new(KernelFamily::InverseMultiquadric, 4.0).unwrap();
    let d: DiscretizationF32 =
        Discretization::new(k, uniform_grid(8).unwrap(), Covering::new(2, 0.2).unwrap()).unwrap();
    let problem: ProblemF32 = ProblemKind::ConvDiff.with_defaults();
    let ops = Operators::assemble(&d, &problem).unwrap();
    let scheme: TimeSchemeF32 = TimeScheme::new(0.5, 0.01, 0.05).unwrap();
    let run = pde::run(&problem, &scheme, d.nodes(), &ops, StepOptions::default()).unwrap();
    assert!(run.mae.is_finite() && run.mae < 0.05, "{}", run.mae);
}

proptest! {
    #[test]
    fn implicit_weighting_never_amplifies_decaying_modes(
        re in -1e4f64..0.0,
        im in -1e4f64..1e4,
        theta in 0.5f64..=1.0,
        dt in 1e-5f64..1.0,
        alpha in 0.01f64..10.0,
        beta in 0.0f64..1.0,
    ) {
        let lam = Complex::new(re, im);
        prop_assert!(amplification_convdiff(lam, theta, dt).unwrap() <= 1.0 + 1e-12);
        prop_assert!(amplification_pseudo(lam, theta, dt, alpha, beta).unwrap() <= 1.0 + 1e-12);
    }
}
