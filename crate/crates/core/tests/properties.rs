use ndarray::{array, Array1, Array2};
use proptest::prelude::*;
use vbpg_core::bregman::{bregman_distance, solve_subproblem, BregmanKernel, BregmanStep};
use vbpg_core::corpus::load_corpus;
use vbpg_core::diagnostics::{
    certify_kl, trend, Direction, GridSublevel, LogLogFit, SampleSource, Sampler,
};
use vbpg_core::problem::{soft_threshold, BoxDomain, CompositeProblem, Quadratic, L1};
use vbpg_core::solver::{run_vbpg, EpsSchedule, KernelSchedule, VbpgConfig};

fn vec2() -> impl Strategy<Value = Array1<f64>> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| array![a, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spd_distance_is_sandwiched(x in vec2(), y in vec2(), a in 0.5..4.0f64, c in -0.4..0.4f64) {
        let q = Array2::from_shape_vec((2, 2), vec![a, c, c, 1.0]).unwrap();
        let k = BregmanKernel::spd(q).unwrap();
        let d = bregman_distance(&k, x.view(), y.view()).unwrap();
        let r2 = (&x - &y).mapv(|v| v * v).sum();
        prop_assert!(d >= 0.5 * k.m() * r2 - 1e-10 * (1.0 + r2));
        prop_assert!(d <= 0.5 * k.big_m() * r2 + 1e-10 * (1.0 + r2));
    }

    #[test]
    fn euclidean_l1_step_is_soft_thresholding(x in vec2(), lam in 0.0..2.0f64, eps in 0.05..0.9f64) {
        let p = CompositeProblem::new(Quadratic::diagonal(array![1.0, 1.0], array![0.0, 0.0]).unwrap(), L1::new(lam).unwrap());
        let step = BregmanStep::new(BregmanKernel::euclidean(), eps).unwrap();
        let t = solve_subproblem(&p, &step, x.view(), None).unwrap().point;
        for i in 0..2 {
            let expected = soft_threshold(x[i] - eps * x[i], eps * lam);
            prop_assert!((t[i] - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn vbpg_decreases_on_quad_l1(seed in 0u64..1000) {
        let entry = load_corpus("QUAD_L1").unwrap();
        let p = entry.composite().unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let x0 = entry.working_box.sample(&mut rng);
        let cfg = VbpgConfig::new(
            KernelSchedule::Constant(BregmanKernel::euclidean()),
            EpsSchedule::constant(entry.eps.unwrap()).unwrap(),
        )
        .max_iters(50);
        let trace = run_vbpg(p, &cfg, x0.view()).unwrap();
        prop_assert!(trace.descent_violations().is_empty());
    }

    #[test]
    fn power_laws_fit_exactly(c in 0.1..10.0f64, k in 0.2..3.0f64) {
        let fit = LogLogFit::fit((1..20).map(|i| {
            let u = i as f64 / 7.0;
            (u, c * u.powf(k))
        }))
        .unwrap();
        prop_assert!((fit.slope - k).abs() < 1e-9);
        prop_assert!((fit.r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn growing_sequences_trip_the_trend_rule(r in 1.3..3.0f64) {
        let ratios: Vec<f64> = (0..12).map(|i| r.powi(i)).collect();
        prop_assert_eq!(trend(&ratios, Direction::Upper).is_some(), r.powi(11) > 10.0);
        let flat = vec![1.0; 12];
        prop_assert!(trend(&flat, Direction::Upper).is_none());
    }

    #[test]
    fn grid_distance_never_undershoots_the_finer_grid(a in -0.4..0.4f64, b in 0.0..0.4f64) {
        let entry = load_corpus("EX_5_1").unwrap();
        let bx = BoxDomain::uniform(2, -0.5, 0.5).unwrap();
        let coarse = GridSublevel::new(entry.objective(), &bx, 1e-2, 0.0).unwrap();
        let fine = GridSublevel::new(entry.objective(), &bx, 5e-3, 0.0).unwrap();
        let x = array![a, b];
        prop_assert!(coarse.distance(x.view()) >= fine.distance(x.view()) - coarse.cell_diagonal());
    }
}

#[test]
fn certificates_are_reproducible_from_the_seed() {
    let entry = load_corpus("QUAD_SC").unwrap();
    let region = entry.recommended_regions[0].clone();
    let run = |seed| {
        let cert = certify_kl(entry.objective(), &SampleSource::region(region.clone(), Sampler::new(200, seed)), 0.5, None)
            .unwrap();
        serde_json::to_string(&cert).unwrap()
    };
    assert_eq!(run(4), run(4));
    assert_ne!(run(4), run(5));
}
