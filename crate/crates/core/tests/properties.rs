//! Seeded randomized properties across modules.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use penrose_core::analysis::decay_certificate;
use penrose_core::compat::NonlinearitySpec;
use penrose_core::geometry::{to_einstein, to_minkowski, EinsteinEvent, MinkowskiEvent};
use penrose_core::solver::{run, SolverConfig};

fn linear(t_max: f64, dr: f64) -> SolverConfig {
    let mut cfg = SolverConfig { nonlinearity: NonlinearitySpec::zero(), t_max, dr, ..SolverConfig::default() };
    cfg.r_max = cfg.min_r_max();
    cfg
}

#[test]
fn einstein_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let time: f64 = rng.gen_range(-3.0..3.0);
        let polar: f64 = rng.gen_range(0.0..PI);
        if time.abs() + polar >= PI - 1e-3 {
            continue;
        }
        let ev = EinsteinEvent { time, polar, omega: [0.0, 0.0, 1.0] };
        let m = to_minkowski(&ev).unwrap();
        let back = to_einstein(&MinkowskiEvent { t: m.t, r: m.r, omega: [0.0, 0.0, 1.0] });
        assert!((back.einstein.time - time).abs() < 1e-9);
        assert!((back.einstein.polar - polar).abs() < 1e-9);
    }
}

#[test]
fn dirichlet_and_no_reflection() {
    let traj = run(&linear(20.0, 1e-2)).unwrap();
    assert!(traj.frames.iter().all(|f| f.u[0] == 0.0));
    let peak = traj.monitors.e_total.iter().fold(0.0f64, |a, b| a.max(*b));
    let outer = traj.monitors.e_outer.iter().fold(0.0f64, |a, b| a.max(*b));
    assert!(outer < 1e-12 * peak);
}

#[test]
fn second_order_convergence_at_shared_nodes() {
    // t = 1.8 is a whole number of steps on every grid; the probe radii are shared nodes
    let probe = |dr: f64| {
        let mut cfg = linear(2.0, dr);
        cfg.snapshot_stride = 1;
        let traj = run(&cfg).unwrap();
        (0..40).map(|k| traj.evaluate(1.8, cfg.obstacle.radius() + 0.1 * k as f64).unwrap().0).collect::<Vec<f64>>()
    };
    let (a, b, c) = (probe(0.02), probe(0.01), probe(0.005));
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let ratio = diff(&a, &b) / diff(&b, &c);
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn certificate_monotone_in_sigma_on_a_run() {
    let mut cfg = SolverConfig { t_max: 12.0, ..SolverConfig::default() };
    cfg.r_max = cfg.min_r_max();
    let traj = run(&cfg).unwrap();
    let mut last = 0.0;
    for sigma in [1.0, 0.8, 0.5, 0.25, 0.05] {
        let c = decay_certificate(&traj, sigma).unwrap().c_sup;
        assert!(c >= last);
        last = c;
    }
}
