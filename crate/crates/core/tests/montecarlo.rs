mod common;

use cgmy_eds::inversion::EulerInversionParams;
use cgmy_eds::levymodel::HyperExpLevyModel;
use cgmy_eds::mcoracle::{
    simulate_passage, simulate_passage_times, simulate_terminal, Estimate, SimConfig,
};
use cgmy_eds::pipeline::RunConfig;
use cgmy_eds::validate::passage_probability;
use common::brownian_hit_below;

fn small(paths: usize, dt: f64) -> SimConfig {
    SimConfig {
        paths,
        dt,
        ..SimConfig::default()
    }
}

fn default_model() -> HyperExpLevyModel {
    RunConfig::default().build_model().unwrap().1
}

#[test]
fn identical_seeds_give_identical_paths() {
    let m = default_model();
    let cfg = small(2_000, 1.0 / 360.0);
    let a = simulate_passage_times(&m, 0.6, 1.0, &cfg).unwrap();
    let b = simulate_passage_times(&m, 0.6, 1.0, &cfg).unwrap();
    assert_eq!(a, b);
    let other = SimConfig { seed: 7, ..cfg };
    assert_ne!(a, simulate_passage_times(&m, 0.6, 1.0, &other).unwrap());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let m = default_model();
    let cfg = small(3_000, 1.0 / 360.0);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_terminal(&m, 1.0, &cfg).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn bridge_corrected_brownian_passage_is_unbiased() {
    let (mu, s2) = (0.05, 0.09);
    let m = HyperExpLevyModel::brownian(mu, s2).unwrap();
    // a coarse grid is fine: the bridge test is exact for Brownian motion
    let est = simulate_passage(&m, 0.7, 1.0, &small(50_000, 1.0 / 12.0)).unwrap();
    let exact = brownian_hit_below(mu, s2, -(0.7f64).ln(), 1.0);
    assert!(est.agrees_with(exact, 3.0, 0.0), "{est:?} vs {exact}");
}

#[test]
fn without_bridge_finer_grids_see_more_crossings() {
    let m = HyperExpLevyModel::brownian(0.0, 0.09).unwrap();
    let p = |dt: f64| {
        let cfg = SimConfig {
            bridge: false,
            ..small(20_000, dt)
        };
        simulate_passage(&m, 0.7, 1.0, &cfg).unwrap()
    };
    let (coarse, mid, fine) = (p(1.0 / 12.0), p(1.0 / 96.0), p(1.0 / 768.0));
    let exact = brownian_hit_below(0.0, 0.09, -(0.7f64).ln(), 1.0);
    let slack =
        |a: &Estimate, b: &Estimate| 3.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!(coarse.mean <= mid.mean + slack(&coarse, &mid));
    assert!(mid.mean <= fine.mean + slack(&mid, &fine));
    assert!(fine.mean <= exact + 3.0 * fine.std_error);
    assert!(coarse.mean < exact - 3.0 * coarse.std_error);
}

#[test]
fn terminal_law_moments() {
    let (mu, s2, t) = (-0.02, 0.04, 2.0);
    let m = HyperExpLevyModel::brownian(mu, s2).unwrap();
    let xs = simulate_terminal(&m, t, &small(100_000, 1.0)).unwrap();
    let mean = Estimate::from_samples(&xs);
    assert!(mean.agrees_with(mu * t, 3.0, 0.0));
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean.mean).powi(2)).collect();
    let var = Estimate::from_samples(&sq);
    assert!(var.agrees_with(s2 * t, 3.0, 0.0), "{var:?}");

    let jm = default_model();
    let ys = simulate_terminal(&jm, t, &small(200_000, 1.0)).unwrap();
    let growth = Estimate::from_samples(&ys.iter().map(|y| y.exp()).collect::<Vec<_>>());
    assert!(growth.agrees_with((0.05 * t).exp(), 3.0, 0.0), "{growth:?}");
}

#[test]
fn jump_model_passage_matches_inversion() {
    let m = default_model();
    let est = simulate_passage(&m, 0.6, 0.5, &small(20_000, 1.0 / 1440.0)).unwrap();
    let analytic = passage_probability(&m, 0.6, 0.5, &EulerInversionParams::default()).unwrap();
    assert!(
        est.agrees_with(analytic, 3.0, 0.005),
        "{est:?} vs {analytic}"
    );
}

#[test]
fn rejects_bad_configs() {
    let m = default_model();
    assert!(simulate_passage(&m, 0.5, 1.0, &small(0, 0.01)).is_err());
    assert!(simulate_passage(&m, 0.5, 1.0, &small(10, 0.0)).is_err());
    assert!(simulate_passage(&m, 1.5, 1.0, &small(10, 0.01)).is_err());
    assert!(simulate_terminal(&m, -1.0, &small(10, 0.01)).is_err());
}
