use blowup_core::solver::{
    blowup_curve, estimate_blowup_time, init_scenario, simulate, EstimateSource, InitialData, Scenario, StopReason,
};
use blowup_core::{Error, Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::SQRT_2;

fn cubic() -> Params {
    Params::new(3.0, 3).unwrap()
}

fn constant_sqrt2(r_max: f64, nodes: usize) -> Scenario {
    let s = 2f64.sqrt();
    Scenario::new(cubic(), r_max, nodes, InitialData::Constant { u0: s, u1: s })
}

fn ode(t: f64) -> f64 {
    2f64.sqrt() / (1.0 - t)
}

#[test]
fn constant_data_is_sampled_exactly() {
    let state = init_scenario(&constant_sqrt2(1.0, 11)).unwrap();
    assert!(state.u().iter().all(|&u| (u - SQRT_2).abs() < 1e-6));
    assert!(state.v().iter().all(|&v| (v - SQRT_2).abs() < 1e-6));
    assert!(state.alive().iter().all(|&a| a));
    assert_eq!(state.t(), 0.0);
}

#[test]
fn fixed_step_above_cfl_is_rejected() {
    let mut sc = constant_sqrt2(1.0, 11);
    sc.dt = Some(0.9 * sc.spacing());
    assert!(matches!(init_scenario(&sc), Err(Error::Cfl { .. })));
}

#[test]
fn constant_data_follows_the_ode_solution() {
    let mut sc = constant_sqrt2(1.0, 201);
    sc.stop.max_time = 0.9;
    let hist = simulate(&sc).unwrap();
    assert_eq!(hist.stop_reason(), StopReason::MaxTime);
    let last = hist.snapshots().last().unwrap();
    assert!((last.t - 0.9).abs() < 1e-12);
    let exact = ode(0.9);
    for &u in &last.u {
        assert!((u / exact - 1.0).abs() <= 1e-3, "u = {u}, exact {exact}");
    }
}

#[test]
fn ode_error_converges_at_second_order() {
    let errors: Vec<f64> = [41, 81, 161]
        .iter()
        .map(|&nodes| {
            let mut sc = constant_sqrt2(1.0, nodes);
            sc.amplitude_step = None;
            sc.dt = Some(0.4 * sc.spacing());
            sc.stop.max_time = 0.9;
            // Snapshots every 0.1 so that every step has the fixed size.
            sc.snapshots.base_interval = 0.1;
            sc.snapshots.divisions = 1e-6;
            let hist = simulate(&sc).unwrap();
            let last = hist.snapshots().last().unwrap();
            last.u.iter().map(|u| (u - ode(0.9)).abs()).fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "order {order} from errors {errors:?}");
    }
}

#[test]
fn constant_data_blows_up_at_one_everywhere() {
    let hist = simulate(&constant_sqrt2(1.0, 201)).unwrap();
    assert_eq!(hist.stop_reason(), StopReason::AllDead);
    for d in hist.deaths() {
        let d = d.unwrap();
        assert!(d.time < 1.0 + 1e-3);
    }
    let curve = blowup_curve(&hist).unwrap();
    for k in 0..curve.len() {
        assert!((curve.t[k] - 1.0).abs() <= 1e-3, "T = {} at r = {}", curve.t[k], curve.r[k]);
        assert!(curve.slope[k].abs() <= 1e-2);
    }
    assert!(curve.lipschitz.passes);
    assert!(curve.light_cone_report(0.05).unwrap().passes);
}

#[test]
fn zero_data_never_blows_up() {
    let mut sc = Scenario::new(cubic(), 1.0, 51, InitialData::Zero);
    sc.stop.max_time = 2.0;
    let hist = simulate(&sc).unwrap();
    assert_eq!(hist.stop_reason(), StopReason::MaxTime);
    assert!(!hist.any_death());
    assert!(hist.snapshots().iter().all(|s| s.u.iter().all(|&u| u == 0.0)));
    assert!(matches!(blowup_curve(&hist), Err(Error::NoBlowup)));
}

#[test]
fn bump_stays_inside_its_light_cone() {
    // Support [1, 2]; after t = 0.5 the physical cone is [0.5, 2.5].
    let run = |nodes| {
        let mut sc = Scenario::new(
            cubic(),
            4.0,
            nodes,
            InitialData::Bump { center: 1.5, width: 0.5, amplitude: 0.5, velocity: 0.0 },
        );
        sc.stop.max_time = 0.5;
        let hist = simulate(&sc).unwrap();
        let last = hist.snapshots().last().unwrap().clone();
        let h = hist.spacing();
        let outside = last
            .u
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let r = *i as f64 * h;
                !(0.4..=2.6).contains(&r)
            })
            .map(|(_, u)| u.abs())
            .fold(0.0, f64::max);
        let inside = last.u.iter().map(|u| u.abs()).fold(0.0, f64::max);
        (outside, inside)
    };
    let (coarse, amp) = run(201);
    let (fine, _) = run(401);
    assert!(amp > 0.1);
    assert!(coarse < 1e-3 * amp, "leak {coarse} vs amplitude {amp}");
    assert!(fine < coarse || fine < 1e-12, "leak does not shrink: {coarse} -> {fine}");
}

#[test]
fn far_modifications_do_not_reach_the_protected_interval() {
    // Constant data on [0.5, 3.5]; nodes in [1.5, 2.5] only see it before t = 1.
    let s = 2f64.sqrt();
    let r: Vec<f64> = (0..=80).map(|k| k as f64 * 0.05).collect();
    let u0: Vec<f64> = r
        .iter()
        .map(|&x| if (0.5..=3.5).contains(&x) { s } else { s * (1.0 + 0.3 * (x - 2.0).abs().min(2.0)) })
        .collect();
    let u1 = u0.clone();
    let sc = Scenario::new(cubic(), 4.0, 401, InitialData::CustomTable { r, u0, u1 });
    let hist = simulate(&sc).unwrap();
    let curve = blowup_curve(&hist).unwrap();
    let mut checked = 0;
    for k in 0..curve.len() {
        if (1.5..=2.5).contains(&curve.r[k]) {
            assert!((curve.t[k] - 1.0).abs() <= 1e-3, "T = {} at r = {}", curve.t[k], curve.r[k]);
            checked += 1;
        }
    }
    assert!(checked > 90);
    assert!(curve.lipschitz.passes);
}

#[test]
fn boosted_blowup_curve_is_a_straight_line() {
    // For N = 1 the boosted profile u = (T-t)^{-a} κ(d, (r-r0)/(T-t)) blows up on
    // t = T + d (r - r0); its source region stays causally clear of both ends.
    let params = Params::new(3.0, 1).unwrap();
    for d in [0.6, -0.6] {
        let (r0, tb) = (3.0, 2.3);
        let mut sc = Scenario::new(
            params,
            6.0,
            601,
            InitialData::SelfsimilarPerturbed {
                d_star: d,
                blowup_time: tb,
                center: r0,
                epsilon: 0.0,
                bump_center: r0,
                bump_width: 0.5,
            },
        );
        sc.stop.max_time = 10.0;
        let hist = simulate(&sc).unwrap();
        let curve = blowup_curve(&hist).unwrap();
        for k in 0..curve.len() {
            if (curve.r[k] - r0).abs() <= 0.5 {
                let exact = tb + d * (curve.r[k] - r0);
                assert!((curve.t[k] - exact).abs() <= 1e-3, "d = {d}: T = {} vs {exact}", curve.t[k]);
                assert!((curve.slope[k] - d).abs() <= 1e-2);
                assert_eq!(curve.source[k], EstimateSource::DenseTrace);
            }
        }
        assert!(curve.lipschitz.passes);
    }
}

#[test]
fn centred_bump_respects_the_light_cone_bound() {
    let sc =
        Scenario::new(cubic(), 2.0, 401, InitialData::Bump { center: 0.0, width: 1.0, amplitude: 5.0, velocity: 0.0 });
    let hist = simulate(&sc).unwrap();
    let curve = blowup_curve(&hist).unwrap();
    let report = curve.light_cone_report(0.05).unwrap();
    assert!(report.checked > 0);
    assert!(report.passes, "{report:?}");
    assert!(curve.lipschitz.passes, "{:?}", curve.lipschitz);
    assert!(curve.t.iter().all(|&t| t > 0.0));
}

#[test]
fn plateau_pair_blows_up_in_two_separated_regions() {
    let sc = Scenario::new(
        cubic(),
        3.0,
        751,
        InitialData::PlateauPair {
            centers: [0.6, 2.4],
            half_widths: [0.6, 0.6],
            heights: [4.0, -4.0],
            join_width: 0.2,
            velocities: [0.0, 0.0],
        },
    );
    let hist = simulate(&sc).unwrap();
    let curve = blowup_curve(&hist).unwrap();
    let t_min = curve.t.iter().cloned().fold(f64::INFINITY, f64::min);
    let early: Vec<f64> = (0..curve.len()).filter(|&k| curve.t[k] < t_min + 1e-3).map(|k| curve.r[k]).collect();
    assert!(early.iter().any(|&r| r < 0.7) && early.iter().any(|&r| r > 2.3));
    assert!(early.iter().all(|&r| !(1.2..=1.8).contains(&r)));
    let (k_max, t_max) = curve
        .t
        .iter()
        .enumerate()
        .filter(|(k, _)| (0.6..2.4).contains(&curve.r[*k]))
        .fold((0, f64::MIN), |acc, (k, &t)| if t > acc.1 { (k, t) } else { acc });
    assert!(curve.r[k_max] > 1.2 && curve.r[k_max] < 1.8);
    assert!(t_max > t_min + 0.2);
    assert!(curve.lipschitz.passes);
}

fn ode_trace(scale: f64, samples: usize) -> Vec<(f64, f64)> {
    (0..samples)
        .map(|k| {
            let t = 0.5 + 0.4 * k as f64 / (samples - 1) as f64;
            (t, scale * ode(t))
        })
        .collect()
}

#[test]
fn blowup_time_is_exact_on_ode_traces() {
    let p = cubic();
    let est = estimate_blowup_time(&ode_trace(1.0, 50), &p).unwrap();
    assert!((est.blowup_time - 1.0).abs() <= 1e-6);
    let scaled = estimate_blowup_time(&ode_trace(2.0, 50), &p).unwrap();
    assert!((scaled.blowup_time - 1.0).abs() <= 1e-6);
}

#[test]
fn blowup_time_tolerates_multiplicative_noise() {
    let p = cubic();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let trace: Vec<(f64, f64)> =
            ode_trace(1.0, 200).into_iter().map(|(t, u)| (t, u * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))).collect();
        let est = estimate_blowup_time(&trace, &p).unwrap();
        assert!((est.blowup_time - 1.0).abs() <= 1e-3, "T = {}", est.blowup_time);
    }
}

#[test]
fn short_or_decaying_traces_have_no_estimate() {
    let p = cubic();
    assert!(estimate_blowup_time(&ode_trace(1.0, 5), &p).is_err());
    let decaying: Vec<(f64, f64)> = (0..20).map(|k| (k as f64 * 0.1, 1.0 / (1.0 + k as f64))).collect();
    assert!(estimate_blowup_time(&decaying, &p).is_err());
}
