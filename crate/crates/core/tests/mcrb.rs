use std::sync::Arc;

use nalgebra::DMatrix;
use sgrb::linalg::{sparse_solve, CsrMatrix};
use sgrb::mcrb::{
    build_mcrb_offline, mcfe_outputs, mcfe_statistics, mcrb_h_prefactors, mcrb_statistics,
    output_with_bound, solve_mcrb_chain, McrbOfflineOptions, McrbRom,
};
use sgrb::model::{coercivity_factor_point, solve_mcfe, FieldParameters, FullOrderModel};
use sgrb::pod::{orthonormality_defect, PodBasis, Weighting};
use sgrb::stats::mc_estimators;
use sgrb::stochastic::{draw_mc_samples, draw_parameter_points, SampleSet};

fn params(k: usize) -> FieldParameters {
    FieldParameters {
        k,
        ..FieldParameters::default()
    }
}

fn small_rom(n_xi: usize, train: &[[f64; 2]]) -> McrbRom {
    let model = Arc::new(FullOrderModel::build(8, params(3)).unwrap());
    let samples = Arc::new(draw_mc_samples(n_xi, 3, 11).unwrap());
    let options = McrbOfflineOptions {
        dual_snapshot_rank: 8,
        snapshot_samples: None,
        verify_pods: true,
    };
    let (rom, reports) = build_mcrb_offline(model, samples, train, options).unwrap();
    for r in &reports {
        assert!(r.optimality_defect.unwrap() < 1e-10, "{r:?}");
        assert!(r.orthonormality_defect.unwrap() < 1e-10, "{r:?}");
    }
    rom
}

fn affine_terms(model: &FullOrderModel) -> Vec<&CsrMatrix> {
    let ops = &model.ops;
    std::iter::once(&ops.a0).chain(&ops.ay).chain(&ops.amu).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn mc_estimator_examples() {
    let m = mc_estimators(&[1.0, 2.0, 3.0]).unwrap();
    assert_eq!((m.mean, m.underline_mean, m.variance), (2.0, 3.0, 1.0));
    let c = mc_estimators(&[4.5; 7]).unwrap();
    assert_eq!(c.mean, 4.5);
    assert!(c.variance.abs() < 1e-14);
    assert!(mc_estimators(&[1.0]).unwrap_err().is_config());
}

#[test]
fn variance_estimator_is_shift_invariant() {
    let g: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 3.0 + 0.1 * i as f64).collect();
    let base = mc_estimators(&g).unwrap().variance;
    for c in [-10.0, 0.5, 1e3] {
        let shifted: Vec<f64> = g.iter().map(|v| v + c).collect();
        let v = mc_estimators(&shifted).unwrap().variance;
        assert!((v - base).abs() <= 1e-10 * base.max(c * c), "{c}: {v} vs {base}");
    }
    // Matches the textbook unbiased sample variance.
    let mean = g.iter().sum::<f64>() / 50.0;
    let textbook = g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 49.0;
    assert!(rel(base, textbook) < 1e-12);
}

#[test]
fn full_order_solve_examples() {
    let model = FullOrderModel::build(8, FieldParameters { sigma: 0.0, ..params(5) }).unwrap();
    let y = [1.2, -0.3, 0.8, -1.5, 0.4];
    let u = solve_mcfe(&model, &y, &[0.0, 0.0]).unwrap();
    assert!(model.output(&u) > 0.0);
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    assert_eq!(u, solve_mcfe(&model, &neg, &[0.0, 0.0]).unwrap());

    let a = model.ops.operator(&y, &[30.0, -70.0]).unwrap();
    let u1 = sparse_solve(&a, &model.ops.f_vec).unwrap();
    let f2: Vec<f64> = model.ops.f_vec.iter().map(|v| 2.0 * v).collect();
    let u2 = sparse_solve(&a, &f2).unwrap();
    for (p, q) in u1.iter().zip(&u2) {
        assert!((2.0 * p - q).abs() <= 1e-12 * q.abs().max(1e-12));
    }
}

#[test]
fn coercivity_examples() {
    let model = FullOrderModel::build(8, params(5)).unwrap();
    let y = [1.0, -1.7, 0.3, 1.7, -0.9];
    let a0 = coercivity_factor_point(&model, &y, &[0.0, 0.0]).unwrap();
    let a1 = coercivity_factor_point(&model, &y, &[200.0, 0.0]).unwrap();
    assert!(rel(a1, a0) < 1e-10);
    assert_eq!(model.coercivity(&y).unwrap(), model.coercivity(&y).unwrap());
    assert!(rel(model.coercivity(&y).unwrap(), a0) < 1e-10);

    let det = FullOrderModel::build(8, FieldParameters { sigma: 0.0, ..params(5) }).unwrap();
    assert!(det.coercivity(&y).unwrap() >= 1.0 - 1e-10);
}

#[test]
fn offline_bases_and_reduced_terms() {
    let train = draw_parameter_points(3, [-200.0; 2], [200.0; 2], 5).unwrap();
    let rom = small_rom(10, &train);
    let s = Weighting::banded(Arc::new(rom.model.ops.gram_x.clone())).unwrap();
    for space in &rom.spaces {
        let basis = PodBasis {
            phi: space.basis.clone(),
            singular_values: space.singular_values.clone(),
            all_singular_values: space.singular_values.clone(),
        };
        assert!(orthonormality_defect(&basis, &s) < 1e-10);
        assert!(space.singular_values.windows(2).all(|w| w[0] >= w[1]));
        for (q, a) in affine_terms(&rom.model).iter().enumerate() {
            let direct = space.basis.transpose() * a.to_dense() * &space.basis;
            let scale = direct.amax().max(1e-300);
            assert!((&space.terms[q] - &direct).amax() <= 1e-12 * scale, "term {q}");
        }
    }
}

#[test]
fn pointwise_bounds_and_galerkin_orthogonality() {
    let train = draw_parameter_points(4, [-200.0; 2], [200.0; 2], 5).unwrap();
    let rom = small_rom(12, &train);
    let model = &rom.model;
    let tests = draw_parameter_points(20, [-200.0; 2], [200.0; 2], 99).unwrap();
    let ys = draw_mc_samples(20, 3, 1234).unwrap();
    for (i, mu) in tests.iter().enumerate() {
        let y = ys.sample(i);
        let r = 1 + i % rom.r_max();
        let est = output_with_bound(&rom, y, mu, r).unwrap();
        let exact = model.output(&model.solve(y, mu).unwrap());
        assert!(est.bound >= 0.0);
        assert!((exact - est.corrected_value).abs() <= est.bound + 1e-12, "i={i} R={r}");

        let (eh, euh) = mcrb_h_prefactors(&rom, mu, r).unwrap();
        let chain = solve_mcrb_chain(&rom, y, mu, r, eh, euh).unwrap();
        let a = model.ops.operator(y, mu).unwrap();
        let u = rom.spaces[0].lift(&chain.u);
        let res: Vec<f64> = model.ops.f_vec.iter().zip(a.mul_vec(&u)).map(|(f, v)| f - v).collect();
        let proj = rom.spaces[0].basis.columns(0, chain.u.len()).transpose() * nalgebra::DVector::from_vec(res);
        assert!(proj.amax() <= 1e-10 * model.ops.f_vec.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        // Each dual is Galerkin orthogonal against its own right-hand side.
        let scales = [1.0, 2.0 * chain.h, eh, euh];
        for (k, c) in chain.duals.iter().enumerate() {
            let z = rom.spaces[k + 1].lift(c);
            let atz = a.tr_mul_vec(&z);
            let dres: Vec<f64> = model.ops.l_vec.iter().zip(&atz).map(|(l, v)| -scales[k] * l - v).collect();
            let p = rom.spaces[k + 1].basis.columns(0, c.len()).transpose() * nalgebra::DVector::from_vec(dres);
            let lmax = model.ops.l_vec.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(p.amax() <= 1e-10 * lmax * scales[k].abs().max(1.0), "dual {k}");
        }
    }
}

#[test]
fn statistics_bounds_hold_and_reproduce_at_training_points() {
    let train = draw_parameter_points(3, [-200.0; 2], [200.0; 2], 5).unwrap();
    let rom = small_rom(10, &train);
    assert!(rom.r_max() < rom.model.m_fe());
    let mut mus = train.clone();
    mus.extend(draw_parameter_points(2, [-200.0; 2], [200.0; 2], 6).unwrap());
    for mu in &mus {
        let fe = mcfe_statistics(&rom.model, &rom.samples, mu).unwrap();
        for r in [1, 2, 4, 8, rom.r_max()] {
            let st = mcrb_statistics(&rom, mu, r).unwrap();
            let (e, v) = (&st.expectation, &st.variance);
            assert!((fe.mean - e.corrected_value).abs() <= e.bound + 1e-12, "E mu={mu:?} R={r}");
            assert!((fe.variance - v.corrected_value).abs() <= v.bound + 1e-12, "V mu={mu:?} R={r}");
            assert_eq!(v.components.len(), 3);
            // The expectation bound is the mean of the pointwise bounds.
            let pointwise: f64 = rom
                .samples
                .iter()
                .map(|y| output_with_bound(&rom, y, mu, r).unwrap().bound)
                .sum::<f64>()
                / rom.samples.n_xi as f64;
            assert!(rel(e.bound, pointwise) < 1e-10);
        }
    }
    for mu in &train {
        let r = rom.r_max();
        let fe = mcfe_statistics(&rom.model, &rom.samples, mu).unwrap();
        let st = mcrb_statistics(&rom, mu, r).unwrap();
        assert!(rel(st.expectation.corrected_value, fe.mean) < 1e-8);
        assert!((st.variance.corrected_value - fe.variance).abs() <= 1e-10 * fe.mean.powi(2));
        assert!(st.expectation.bound <= 1e-12 * fe.mean.abs());
        assert!(st.variance.bound <= 1e-14 * fe.mean.powi(2));
    }
}

#[test]
fn single_snapshot_gives_rank_one_and_exact_output() {
    let model = Arc::new(FullOrderModel::build(6, params(3)).unwrap());
    let y = [0.9, -1.1, 0.2];
    let samples = Arc::new(SampleSet {
        samples: [y, y].concat(),
        seed: 0,
        n_xi: 2,
        k: 3,
    });
    let mu = [-120.0, 45.0];
    let (rom, _) = build_mcrb_offline(model.clone(), samples, &[mu], McrbOfflineOptions::default()).unwrap();
    assert!(rom.spaces.iter().all(|s| s.r_max() == 1));
    let est = output_with_bound(&rom, &y, &mu, 1).unwrap();
    let exact = model.output(&model.solve(&y, &mu).unwrap());
    assert!(rel(est.value, exact) < 1e-10, "{est:?} {exact}");
    assert!(est.bound <= 1e-12 * exact.abs());
}

#[test]
fn exact_dual_space_recovers_the_output() {
    let model = Arc::new(FullOrderModel::build(6, params(3)).unwrap());
    let y = [-0.4, 1.3, 0.6];
    let samples = Arc::new(SampleSet {
        samples: [y, y].concat(),
        seed: 0,
        n_xi: 2,
        k: 3,
    });
    let mu = [80.0, -150.0];
    let opts = McrbOfflineOptions::default();
    let (other, _) = build_mcrb_offline(model.clone(), samples.clone(), &[[-190.0, 170.0]], opts).unwrap();
    let (mut rom, _) = build_mcrb_offline(model.clone(), samples, &[mu], opts).unwrap();
    rom.spaces[0] = other.spaces[0].clone();
    let est = output_with_bound(&rom, &y, &mu, 1).unwrap();
    let exact = model.output(&model.solve(&y, &mu).unwrap());
    assert!(rel(est.value, exact) > 1e-6, "primal space should be inexact");
    assert!(rel(est.corrected_value, exact) < 1e-10);
    assert!(est.bound <= 1e-10 * exact.abs());
}

#[test]
fn zero_output_functional_gives_zero_duals() {
    let train = draw_parameter_points(2, [-200.0; 2], [200.0; 2], 5).unwrap();
    let mut rom = small_rom(8, &train);
    let mut model = (*rom.model).clone();
    model.ops.l_vec.iter_mut().for_each(|v| *v = 0.0);
    rom.model = Arc::new(model);
    for s in rom.spaces.iter_mut() {
        s.l_red.iter_mut().for_each(|v| *v = 0.0);
    }
    let mu = [10.0, 20.0];
    let (eh, euh) = mcrb_h_prefactors(&rom, &mu, 3).unwrap();
    assert_eq!((eh, euh), (0.0, 0.0));
    let chain = solve_mcrb_chain(&rom, rom.samples.sample(0), &mu, 3, eh, euh).unwrap();
    assert!(chain.duals.iter().flatten().all(|v| *v == 0.0));
    let st = mcrb_statistics(&rom, &mu, 3).unwrap();
    assert_eq!(st.expectation.corrected_value, 0.0);
    assert_eq!(st.variance.corrected_value, 0.0);
    assert_eq!(st.expectation.bound, 0.0);
    assert_eq!(st.variance.bound, 0.0);
}

#[test]
fn rank_out_of_range() {
    let rom = small_rom(4, &[[0.0, 0.0]]);
    assert!(mcrb_statistics(&rom, &[0.0, 0.0], 0).is_err());
    assert!(mcrb_statistics(&rom, &[0.0, 0.0], rom.r_max() + 1).is_err());
}

#[test]
fn mcfe_outputs_match_direct_solves() {
    let model = FullOrderModel::build(6, params(3)).unwrap();
    let samples = draw_mc_samples(5, 3, 2).unwrap();
    let mu = [3.0, 4.0];
    let out = mcfe_outputs(&model, &samples, &mu).unwrap();
    for (y, o) in samples.iter().zip(&out) {
        let a = model.ops.operator(y, &mu).unwrap().to_dense();
        let u = a.lu().solve(&nalgebra::DVector::from_vec(model.ops.f_vec.clone())).unwrap();
        let l = DMatrix::from_column_slice(1, model.m_fe(), &model.ops.l_vec);
        assert!(rel(*o, (l * u)[(0, 0)]) < 1e-10);
    }
}
