use blowup_core::model::{h_norm, kappa, kappa_dy, YGrid, DEFAULT_ETA};
use blowup_core::numeric::argth;
use blowup_core::solitons::{
    fit_multi, fit_multi_relaxed, fit_single, select_k, soliton_frame, write_fit_csv, zeta_trace, MultiSolitonFit,
    SpacingVerdict, K_THRESHOLD,
};
use blowup_core::{Error, Params, SimilarityFrame, SolitonParams};

fn cubic() -> Params {
    Params::new(3.0, 3).unwrap()
}

fn grid() -> YGrid {
    YGrid::uniform(201, DEFAULT_ETA).unwrap()
}

fn single(theta: f64, d: f64) -> SimilarityFrame {
    soliton_frame(cubic(), 1.0, 2.0, grid(), &[SolitonParams::new(theta, d, 0.0).unwrap()]).unwrap()
}

/// Alternating sum with angles `zeta` and shifts `nu`, first sign `e1`.
fn multi(e1: f64, zeta: &[f64], nu: &[f64]) -> SimilarityFrame {
    let sols: Vec<SolitonParams> = zeta
        .iter()
        .zip(nu)
        .enumerate()
        .map(|(i, (&z, &n))| {
            let theta = if i % 2 == 0 { e1 } else { -e1 };
            SolitonParams::new(theta, -z.tanh(), n).unwrap()
        })
        .collect();
    soliton_frame(cubic(), 1.0, 2.0, grid(), &sols).unwrap()
}

#[test]
fn single_fit_recovers_a_soliton() {
    let fit = fit_single(&single(1.0, 0.3)).unwrap();
    assert_eq!(fit.theta, 1.0);
    assert!((fit.d - 0.3).abs() <= 1e-6, "d = {}", fit.d);
    assert!(fit.residual < 1e-8);
    assert!(fit.converged);
}

#[test]
fn single_fit_finds_the_negative_branch() {
    let fit = fit_single(&single(-1.0, -0.7)).unwrap();
    assert_eq!(fit.theta, -1.0);
    assert!((fit.d + 0.7).abs() <= 1e-6, "d = {}", fit.d);
}

#[test]
fn single_fit_round_trips_over_the_velocity_grid() {
    for theta in [1.0, -1.0] {
        for i in -9..=9 {
            let d = 0.1 * i as f64;
            let fit = fit_single(&single(theta, d)).unwrap();
            assert_eq!(fit.theta, theta);
            assert!((argth(fit.d) - argth(d)).abs() <= 1e-4, "θ = {theta}, d = {d}: {}", fit.d);
        }
    }
}

#[test]
fn perturbed_soliton_is_fitted_within_the_perturbation() {
    let params = cubic();
    let eps = 1e-2;
    let frame = SimilarityFrame::stationary(
        params,
        1.0,
        2.0,
        grid(),
        |y| kappa(0.3, y, &params).unwrap() + eps * (1.0 + y * y),
        |y| kappa_dy(0.3, y, &params).unwrap() + eps * 2.0 * y,
    )
    .unwrap();
    let pert =
        SimilarityFrame::stationary(params, 1.0, 2.0, grid(), |y| eps * (1.0 + y * y), |y| eps * 2.0 * y).unwrap();
    let fit = fit_single(&frame).unwrap();
    assert!((fit.d - 0.3).abs() <= 5.0 * eps, "d = {}", fit.d);
    assert!(fit.residual <= h_norm(&pert));
}

#[test]
fn fit_residual_is_the_distance_of_the_difference_frame() {
    let params = cubic();
    let frame = SimilarityFrame::stationary(
        params,
        1.0,
        2.0,
        grid(),
        |y| kappa(-0.2, y, &params).unwrap() * (1.0 + 0.1 * y),
        |y| kappa_dy(-0.2, y, &params).unwrap() * (1.0 + 0.1 * y) + 0.1 * kappa(-0.2, y, &params).unwrap(),
    )
    .unwrap();
    let fit = fit_single(&frame).unwrap();
    let y = frame.y();
    let diff = frame
        .with_fields(
            (0..y.len()).map(|j| frame.w()[j] - fit.theta * kappa(fit.d, y[j], &params).unwrap()).collect(),
            frame.ws().to_vec(),
            (0..y.len()).map(|j| frame.wy()[j] - fit.theta * kappa_dy(fit.d, y[j], &params).unwrap()).collect(),
        )
        .unwrap();
    assert!((h_norm(&diff) - fit.residual).abs() <= 1e-12 * h_norm(&frame));
}

#[test]
fn two_soliton_round_trip() {
    let fit = fit_multi(&multi(1.0, &[-1.0, 1.0], &[0.0, 0.0]), 2, None).unwrap();
    assert_eq!(fit.e1, 1.0);
    assert!((fit.zeta[0] + 1.0).abs() <= 1e-4 && (fit.zeta[1] - 1.0).abs() <= 1e-4, "{:?}", fit.zeta);
    assert!(fit.nu.iter().all(|n| n.abs() < 1e-6));
    assert!(!fit.degenerate);
}

#[test]
fn multi_soliton_round_trips_with_shifts() {
    let cases: [(f64, Vec<f64>, Vec<f64>); 4] = [
        (1.0, vec![-0.8, 0.6], vec![0.1, -0.05]),
        (-1.0, vec![-0.3, 1.2], vec![0.0, 0.2]),
        (1.0, vec![-1.5, 0.0, 1.5], vec![0.1, -0.05, 0.2]),
        (-1.0, vec![-1.2, 0.1, 1.3], vec![0.0, 0.0, 0.0]),
    ];
    for (e1, zeta, nu) in cases {
        let frame = multi(e1, &zeta, &nu);
        let fit = fit_multi(&frame, zeta.len(), None).unwrap();
        assert_eq!(fit.e1, e1);
        for i in 0..zeta.len() {
            assert!((fit.zeta[i] - zeta[i]).abs() <= 1e-3, "{zeta:?} -> {:?}", fit.zeta);
        }
        assert!(fit.residual <= 1e-6 * h_norm(&frame), "residual {}", fit.residual);
    }
}

#[test]
fn one_soliton_multi_fit_nests_the_single_fit() {
    let params = cubic();
    let frame = SimilarityFrame::stationary(
        params,
        1.0,
        2.0,
        grid(),
        |y| kappa(0.4, y, &params).unwrap() + 0.05 * y,
        |y| kappa_dy(0.4, y, &params).unwrap() + 0.05,
    )
    .unwrap();
    let single = fit_single(&frame).unwrap();
    let multi = fit_multi(&frame, 1, None).unwrap();
    assert_eq!(multi.e1, single.theta);
    assert!(multi.residual <= single.residual + 1e-12);
}

#[test]
fn k_is_selected_from_the_residual_drop() {
    let one = select_k(&single(1.0, 0.0), 4, K_THRESHOLD).unwrap();
    assert_eq!(one.k, 1);
    assert!(one.below_threshold);

    let zero = SimilarityFrame::stationary(cubic(), 1.0, 2.0, grid(), |_| 0.0, |_| 0.0).unwrap();
    let none = select_k(&zero, 4, K_THRESHOLD).unwrap();
    assert_eq!(none.k, 0);
    assert_eq!(none.residuals[0], 0.0);
    assert!(none.fit().is_none());

    let pair = multi(1.0, &[-1.0, 1.0], &[0.0, 0.0]);
    let two = select_k(&pair, 4, K_THRESHOLD).unwrap();
    assert_eq!(two.k, 2);
    assert!(two.residuals[1] > K_THRESHOLD * two.norm);
    for w in two.residuals.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{:?}", two.residuals);
    }
    assert_eq!(two.fit().unwrap().k, 2);
}

#[test]
fn relaxed_signs_prefer_alternation() {
    let fit = fit_multi_relaxed(&multi(-1.0, &[-1.0, 0.8], &[0.0, 0.0]), 2).unwrap();
    assert!(fit.alternating);
    assert_eq!(fit.signs, vec![-1.0, 1.0]);
    assert!(matches!(fit_multi_relaxed(&single(1.0, 0.0), 0), Err(Error::Domain(_))));
}

#[test]
fn zero_solitons_is_not_a_multi_fit() {
    assert!(matches!(fit_multi(&single(1.0, 0.0), 0, None), Err(Error::Domain(_))));
}

fn synthetic_fits(zeta: impl Fn(usize, f64) -> f64, k: usize, s: &[f64]) -> Vec<MultiSolitonFit> {
    s.iter()
        .map(|&sv| MultiSolitonFit {
            k,
            e1: 1.0,
            zeta: (0..k).map(|i| zeta(i, sv)).collect(),
            nu: vec![0.0; k],
            residual: 0.0,
            converged: true,
            degenerate: false,
            iterations: 0,
        })
        .collect()
}

#[test]
fn zeta_trace_recovers_logarithmic_spreading() {
    let s: Vec<f64> = (0..10).map(|i| 2.0 + i as f64).collect();
    // (i - 3/2) log s is the predicted law for k = 2, p = 3
    let fits = synthetic_fits(|i, sv| (i as f64 + 1.0 - 1.5) * sv.ln(), 2, &s);
    let report = zeta_trace(&s, &fits, &cubic()).unwrap();
    assert_eq!(report.predicted, vec![-0.5, 0.5]);
    for i in 0..2 {
        assert!((report.slopes[i] - report.predicted[i]).abs() < 1e-10, "{:?}", report.slopes);
    }
    let quintic = zeta_trace(&s, &fits, &Params::new(5.0, 1).unwrap()).unwrap();
    assert_eq!(quintic.predicted, vec![-1.0, 1.0]);
    assert_eq!(report.verdict, SpacingVerdict::Growing);
    assert!(report.gaps_nondecreasing);

    let flat = synthetic_fits(|i, _| i as f64, 2, &s);
    let report = zeta_trace(&s, &flat, &cubic()).unwrap();
    assert!(report.slopes.iter().all(|v| v.abs() < 1e-10));
    assert_eq!(report.verdict, SpacingVerdict::NonGrowing);

    assert!(matches!(zeta_trace(&s[..3], &fits[..3], &cubic()), Err(Error::InsufficientData(_))));
}

#[test]
fn fit_csv_pads_to_the_largest_k() {
    let s = [1.0, 2.0];
    let mut rows: Vec<(f64, MultiSolitonFit)> = s.iter().copied().zip(synthetic_fits(|i, _| i as f64, 2, &s)).collect();
    rows[0].1.k = 1;
    rows[0].1.zeta.truncate(1);
    rows[0].1.nu.truncate(1);
    let mut out = Vec::new();
    write_fit_csv(&mut out, &rows).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], "s,k,e1,zeta_1,zeta_2,nu_1,nu_2,residual,converged");
    assert!(lines.iter().all(|l| l.split(',').count() == 9));
}

#[test]
fn k_stops_growing_once_the_gain_is_small() {
    let frame = SimilarityFrame::stationary(
        cubic(),
        1.0,
        2.0,
        grid(),
        |y| 1.4 + 0.3 * (3.0 * y).sin(),
        |y| 0.9 * (3.0 * y).cos(),
    )
    .unwrap();
    let sel = select_k(&frame, 4, K_THRESHOLD).unwrap();
    assert!(!sel.below_threshold);
    assert!(sel.residuals.iter().all(|&r| r > K_THRESHOLD * sel.norm));
    assert_eq!(sel.k, 2, "{:?}", sel.residuals);
    assert!(sel.residuals[2] - sel.residuals[3] <= K_THRESHOLD * sel.norm);
    assert!(sel.residuals[4] < sel.residuals[2]);
}
