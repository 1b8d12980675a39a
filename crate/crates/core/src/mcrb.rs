//! Monte Carlo reduced basis model: one primal and four dual reduced spaces,
//! evaluated sample by sample over the fixed Monte Carlo set.
//!
//! For fixed (y, μ) the full-order dual problems 2–4 have right-hand sides
//! proportional to l, so their solutions are scalar multiples of the first
//! dual solution. Snapshots of duals 2–4 are therefore rescaled dual-1
//! snapshots, and online the reduced duals 2–4 are solved once with the
//! unit right-hand side −l and rescaled once the Monte Carlo prefactors
//! E[h] and E̲[h] (h = l(u^R) − r(u^R₍₁₎)) are known.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use log::{debug, info};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{dot, CsrMatrix};
use crate::model::FullOrderModel;
use crate::pod::{optimality_defect, orthonormality_defect, pod_of_weighted, Weighting};
use crate::rom::{head, solve_reduced, ReducedSpace};
use crate::stats::{mc_estimators, McEstimate, McMoments};
use crate::stochastic::SampleSet;

pub const MCRB_SPACE_NAMES: [&str; 5] = ["primal", "dual1", "dual2", "dual3", "dual4"];

/// Outcome of one POD, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct PodReport {
    pub name: String,
    pub n_snapshots: usize,
    pub r_max: usize,
    /// max_R |e(R) − Σ_{r>R} σ_r²| relative to the total snapshot energy.
    pub optimality_defect: Option<f64>,
    pub orthonormality_defect: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct McrbRom {
    pub model: Arc<FullOrderModel>,
    pub samples: Arc<SampleSet>,
    /// Primal space followed by the four dual spaces.
    pub spaces: Vec<ReducedSpace>,
    /// α(y) at every Monte Carlo sample.
    pub alpha: Vec<f64>,
    pub train_mu: Vec<[f64; 2]>,
    /// Reduced dimension used to form the dual 2–4 snapshot weights.
    pub snapshot_rank: usize,
}

impl McrbRom {
    pub fn r_max(&self) -> usize {
        self.spaces.iter().map(|s| s.r_max()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct McrbOfflineOptions {
    pub dual_snapshot_rank: usize,
    /// Use only the first this many Monte Carlo samples for snapshots.
    pub snapshot_samples: Option<usize>,
    /// Check POD optimality and orthonormality on every snapshot set.
    pub verify_pods: bool,
}

impl Default for McrbOfflineOptions {
    fn default() -> Self {
        McrbOfflineOptions {
            dual_snapshot_rank: 64,
            snapshot_samples: None,
            verify_pods: false,
        }
    }
}

/// θ = (1, y_1..y_K, μ_1, μ_2), the coefficients of the affine terms.
pub fn affine_coefficients(y: &[f64], mu: &[f64; 2]) -> Vec<f64> {
    let mut theta = Vec::with_capacity(y.len() + 3);
    theta.push(1.0);
    theta.extend_from_slice(y);
    theta.extend_from_slice(mu);
    theta
}

fn affine_terms(model: &FullOrderModel) -> Vec<&CsrMatrix> {
    let ops = &model.ops;
    std::iter::once(&ops.a0)
        .chain(ops.ay.iter())
        .chain(ops.amu.iter())
        .collect()
}

pub(crate) fn gram_weighting(model: &FullOrderModel, blocks: usize) -> Weighting {
    Weighting::from_factor(
        Arc::new(model.riesz.gram().clone()),
        Arc::new(model.riesz.factor().clone()),
        blocks,
    )
}

/// Weights the snapshots in place, runs the POD and projects the operators.
fn build_space(
    model: &FullOrderModel,
    name: &str,
    mut snapshots: DMatrix<f64>,
    verify: bool,
) -> Result<(ReducedSpace, PodReport)> {
    let n = snapshots.ncols();
    let s = gram_weighting(model, 1);
    let w = Weighting::uniform(n);
    s.apply_factor(&mut snapshots);
    w.apply_factor_right(&mut snapshots);
    let pod = pod_of_weighted(&snapshots, &s)?;
    let mut report = PodReport {
        name: format!("mcrb {name}"),
        n_snapshots: n,
        r_max: pod.r_max(),
        optimality_defect: None,
        orthonormality_defect: None,
    };
    if verify {
        report.optimality_defect = Some(optimality_defect(&snapshots, &s, &pod));
        report.orthonormality_defect = Some(orthonormality_defect(&pod, &s));
    }
    drop(snapshots);
    info!("{}: R_max = {}", report.name, report.r_max);
    let applied: Vec<DMatrix<f64>> = affine_terms(model)
        .iter()
        .map(|a| a.mul_dense(&pod.phi))
        .collect();
    let space = ReducedSpace::new(pod, &applied, &model.ops.f_vec, &model.ops.l_vec);
    Ok((space, report))
}

static SAMPLE_SOLVES: AtomicU64 = AtomicU64::new(0);

/// Number of per-sample reduced solves performed so far in this process.
pub fn reduced_sample_solves() -> u64 {
    SAMPLE_SOLVES.load(Ordering::Relaxed)
}

/// Reduced primal and first dual solution at one sample, with the
/// full-order residual vectors.
struct PrimalDual {
    c: Vec<f64>,
    c1: Vec<f64>,
    residual: Vec<f64>,
    residual1: Vec<f64>,
    l_r: f64,
    r_u1: f64,
}

fn primal_dual(
    model: &FullOrderModel,
    spaces: &[ReducedSpace],
    a: &CsrMatrix,
    theta: &[f64],
    r: usize,
) -> Result<PrimalDual> {
    SAMPLE_SOLVES.fetch_add(1, Ordering::Relaxed);
    let (s0, s1) = (&spaces[0], &spaces[1]);
    let r0 = s0.dim(r);
    let c = solve_reduced(s0.assemble(theta, r0, false), head(&s0.f_red, r0))?;
    let u = s0.lift(&c);
    let au = a.mul_vec(&u);
    let residual: Vec<f64> = model.ops.f_vec.iter().zip(&au).map(|(f, v)| f - v).collect();

    let r1 = s1.dim(r);
    let rhs1: Vec<f64> = head(&s1.l_red, r1).iter().map(|v| -v).collect();
    let c1 = solve_reduced(s1.assemble(theta, r1, true), &rhs1)?;
    let u1 = s1.lift(&c1);
    let residual1 = dual_residual(model, a, &u1, 1.0);
    Ok(PrimalDual {
        l_r: dot(&model.ops.l_vec, &u),
        r_u1: dot(&residual, &u1),
        c,
        c1,
        residual,
        residual1,
    })
}

/// −s·l − Aᵀ z.
fn dual_residual(model: &FullOrderModel, a: &CsrMatrix, z: &[f64], s: f64) -> Vec<f64> {
    let atz = a.tr_mul_vec(z);
    model.ops.l_vec.iter().zip(&atz).map(|(l, v)| -s * l - v).collect()
}

/// Reduced dual coefficients for the unit right-hand side −l in space i.
fn unit_dual(space: &ReducedSpace, theta: &[f64], r: usize) -> Result<Vec<f64>> {
    let ri = space.dim(r);
    let rhs: Vec<f64> = head(&space.l_red, ri).iter().map(|v| -v).collect();
    solve_reduced(space.assemble(theta, ri, true), &rhs)
}

/// Builds the five reduced spaces from N_ξ · N_train full-order solves.
pub fn build_mcrb_offline(
    model: Arc<FullOrderModel>,
    samples: Arc<SampleSet>,
    train_mu: &[[f64; 2]],
    options: McrbOfflineOptions,
) -> Result<(McrbRom, Vec<PodReport>)> {
    if train_mu.is_empty() {
        return Err(Error::config("the training set must contain at least one parameter"));
    }
    if samples.k != model.k() {
        return Err(Error::Dimension {
            context: "sample dimension vs. KL modes",
            expected: model.k(),
            actual: samples.k,
        });
    }
    let m = model.m_fe();
    let n_xi = options.snapshot_samples.unwrap_or(samples.n_xi).min(samples.n_xi);
    if n_xi < 2 {
        return Err(Error::config("snapshot generation needs at least 2 Monte Carlo samples"));
    }
    let n = n_xi * train_mu.len();

    let alpha = samples
        .iter()
        .map(|y| model.coercivity(y))
        .collect::<Result<Vec<f64>>>()?;
    debug!(
        "coercivity over samples: min {:e}",
        alpha.iter().copied().fold(f64::INFINITY, f64::min)
    );

    let mut primal = DMatrix::<f64>::zeros(m, n);
    let mut dual1 = DMatrix::<f64>::zeros(m, n);
    for (j, mu) in train_mu.iter().enumerate() {
        for (i, y) in samples.iter().take(n_xi).enumerate() {
            let (u, z) = model.solve_primal_dual(y, mu)?;
            let col = j * n_xi + i;
            primal.column_mut(col).copy_from_slice(&u);
            dual1.column_mut(col).copy_from_slice(&z);
        }
    }
    info!("mcrb: {n} primal and dual snapshots computed");

    let mut reports = Vec::with_capacity(5);
    let mut spaces = Vec::with_capacity(5);
    let (space, report) = build_space(&model, MCRB_SPACE_NAMES[0], primal, options.verify_pods)?;
    spaces.push(space);
    reports.push(report);
    let (space, report) = build_space(&model, MCRB_SPACE_NAMES[1], dual1.clone(), options.verify_pods)?;
    spaces.push(space);
    reports.push(report);

    // h = l(u^R) − r(u^R₍₁₎) at every snapshot point.
    let r_snap = options.dual_snapshot_rank.max(1);
    let mut h = vec![0.0; n];
    for (j, mu) in train_mu.iter().enumerate() {
        for (i, y) in samples.iter().take(n_xi).enumerate() {
            let a = model.ops.operator(y, mu)?;
            let pd = primal_dual(&model, &spaces, &a, &affine_coefficients(y, mu), r_snap)?;
            h[j * n_xi + i] = pd.l_r - pd.r_u1;
        }
    }
    let prefactors: Vec<McMoments> = h
        .chunks(n_xi)
        .map(mc_estimators)
        .collect::<Result<Vec<_>>>()?;

    let scalings: [Box<dyn Fn(usize) -> f64>; 3] = [
        Box::new(|col| 2.0 * h[col]),
        Box::new(|col| prefactors[col / n_xi].mean),
        Box::new(|col| prefactors[col / n_xi].underline_mean),
    ];
    for (idx, scale) in scalings.iter().enumerate() {
        let mut snaps = dual1.clone();
        for (col, mut c) in snaps.column_iter_mut().enumerate() {
            c *= scale(col);
        }
        let (space, report) = build_space(&model, MCRB_SPACE_NAMES[idx + 2], snaps, options.verify_pods)?;
        spaces.push(space);
        reports.push(report);
    }

    Ok((
        McrbRom {
            model,
            samples,
            spaces,
            alpha,
            train_mu: train_mu.to_vec(),
            snapshot_rank: r_snap,
        },
        reports,
    ))
}

/// Reduced coefficient vectors of the primal and the four dual solutions.
#[derive(Debug, Clone)]
pub struct McrbChain {
    pub u: Vec<f64>,
    pub duals: [Vec<f64>; 4],
    /// h = l(u^R) − r(u^R₍₁₎).
    pub h: f64,
}

/// Solves the primal and dual reduced problems at one sample. Duals 3 and 4
/// need the Monte Carlo prefactors E[h] and E̲[h] over the whole sample set
/// (see [`mcrb_h_prefactors`]).
pub fn solve_mcrb_chain(
    rom: &McrbRom,
    y: &[f64],
    mu: &[f64; 2],
    r: usize,
    mean_h: f64,
    underline_mean_h: f64,
) -> Result<McrbChain> {
    check_rank(rom, r)?;
    let model = &rom.model;
    let a = model.ops.operator(y, mu)?;
    let theta = affine_coefficients(y, mu);
    let pd = primal_dual(model, &rom.spaces, &a, &theta, r)?;
    let h = pd.l_r - pd.r_u1;
    let scales = [2.0 * h, mean_h, underline_mean_h];
    let mut duals: [Vec<f64>; 4] = Default::default();
    duals[0] = pd.c1;
    for i in 0..3 {
        let rho = unit_dual(&rom.spaces[i + 2], &theta, r)?;
        duals[i + 1] = rho.iter().map(|v| scales[i] * v).collect();
    }
    Ok(McrbChain { u: pd.c, duals, h })
}

fn check_rank(rom: &McrbRom, r: usize) -> Result<()> {
    if r == 0 || r > rom.r_max() {
        return Err(Error::Index {
            index: r,
            valid: format!("1..={}", rom.r_max()),
        });
    }
    Ok(())
}

/// (E[h], E̲[h]) over the sample set at μ for reduced dimension R.
pub fn mcrb_h_prefactors(rom: &McrbRom, mu: &[f64; 2], r: usize) -> Result<(f64, f64)> {
    check_rank(rom, r)?;
    let mut h = Vec::with_capacity(rom.samples.n_xi);
    for y in rom.samples.iter() {
        let a = rom.model.ops.operator(y, mu)?;
        let pd = primal_dual(&rom.model, &rom.spaces, &a, &affine_coefficients(y, mu), r)?;
        h.push(pd.l_r - pd.r_u1);
    }
    let m = mc_estimators(&h)?;
    Ok((m.mean, m.underline_mean))
}

/// Residual-corrected output at one (y, μ) with its bound ‖r‖‖r₍₁₎‖/α.
pub fn output_with_bound(rom: &McrbRom, y: &[f64], mu: &[f64; 2], r: usize) -> Result<McEstimate> {
    check_rank(rom, r)?;
    let model = &rom.model;
    let a = model.ops.operator(y, mu)?;
    let pd = primal_dual(model, &rom.spaces, &a, &affine_coefficients(y, mu), r)?;
    let alpha = model.coercivity(y)?;
    let bound = model.riesz.dual_norm(&pd.residual)? * model.riesz.dual_norm(&pd.residual1)? / alpha;
    Ok(McEstimate::new(
        pd.l_r,
        pd.l_r - pd.r_u1,
        vec![("residual_product".into(), bound)],
    ))
}

/// Expectation and variance estimates with bounds at one (μ, R).
#[derive(Debug, Clone)]
pub struct McrbStatistics {
    pub expectation: McEstimate,
    pub variance: McEstimate,
}

struct PassOne {
    l_r: f64,
    r_u1: f64,
    product: f64,
    res_norm: f64,
    unit_residuals: [Vec<f64>; 3],
    unit_corrections: [f64; 3],
}

/// Two passes over the sample set: the first solves primal, dual 1 and the
/// unit duals 2–4; the second combines them once E[h] and E̲[h] are known.
pub fn mcrb_statistics(rom: &McrbRom, mu: &[f64; 2], r: usize) -> Result<McrbStatistics> {
    check_rank(rom, r)?;
    let model = &rom.model;
    let n_xi = rom.samples.n_xi;
    let mut pass = Vec::with_capacity(n_xi);
    for (i, y) in rom.samples.iter().enumerate() {
        let a = model.ops.operator(y, mu)?;
        let theta = affine_coefficients(y, mu);
        let pd = primal_dual(model, &rom.spaces, &a, &theta, r)?;
        let res_norm = model.riesz.dual_norm(&pd.residual)?;
        let res1_norm = model.riesz.dual_norm(&pd.residual1)?;
        let mut unit_residuals: [Vec<f64>; 3] = Default::default();
        let mut unit_corrections = [0.0; 3];
        for k in 0..3 {
            let rho = unit_dual(&rom.spaces[k + 2], &theta, r)?;
            let z = rom.spaces[k + 2].lift(&rho);
            unit_corrections[k] = dot(&pd.residual, &z);
            unit_residuals[k] = dual_residual(model, &a, &z, 1.0);
        }
        pass.push(PassOne {
            l_r: pd.l_r,
            r_u1: pd.r_u1,
            product: res_norm * res1_norm / rom.alpha[i],
            res_norm,
            unit_residuals,
            unit_corrections,
        });
    }

    let h: Vec<f64> = pass.iter().map(|p| p.l_r - p.r_u1).collect();
    let hm = mc_estimators(&h)?;
    let l_r: Vec<f64> = pass.iter().map(|p| p.l_r).collect();
    let r_u1: Vec<f64> = pass.iter().map(|p| p.r_u1).collect();
    let products: Vec<f64> = pass.iter().map(|p| p.product).collect();
    let lm = mc_estimators(&l_r)?;
    let rm = mc_estimators(&r_u1)?;
    let pm = mc_estimators(&products)?;
    let sq_products: Vec<f64> = products.iter().map(|p| p * p).collect();
    let sqm = mc_estimators(&sq_products)?;

    let factor = (n_xi as f64 - 1.0) / n_xi as f64;
    let mut r_u2 = Vec::with_capacity(n_xi);
    let mut r_u3 = Vec::with_capacity(n_xi);
    let mut r_u4 = Vec::with_capacity(n_xi);
    let mut combo_terms = Vec::with_capacity(n_xi);
    for (i, p) in pass.iter().enumerate() {
        let (c2, c3, c4) = (2.0 * h[i], hm.mean, hm.underline_mean);
        r_u2.push(c2 * p.unit_corrections[0]);
        r_u3.push(c3 * p.unit_corrections[1]);
        r_u4.push(c4 * p.unit_corrections[2]);
        let combo: Vec<f64> = (0..p.unit_residuals[0].len())
            .map(|k| {
                c2 * p.unit_residuals[0][k]
                    - c3 * p.unit_residuals[1][k]
                    - factor * c4 * p.unit_residuals[2][k]
            })
            .collect();
        combo_terms.push(model.riesz.dual_norm(&combo)? * p.res_norm / rom.alpha[i]);
    }
    let m2 = mc_estimators(&r_u2)?;
    let m3 = mc_estimators(&r_u3)?;
    let m4 = mc_estimators(&r_u4)?;
    let m_combo = mc_estimators(&combo_terms)?;

    let expectation = McEstimate::new(
        lm.mean,
        lm.mean - rm.mean,
        vec![("residual_product".into(), pm.mean)],
    );
    let variance = McEstimate::new(
        lm.variance,
        lm.variance - rm.variance - m2.underline_mean + m3.underline_mean + m4.mean,
        vec![
            ("squared_product".into(), sqm.underline_mean),
            ("mean_product".into(), pm.mean * pm.underline_mean),
            ("dual_combination".into(), m_combo.underline_mean),
        ],
    );
    Ok(McrbStatistics {
        expectation,
        variance,
    })
}

pub fn expectation_with_bound(rom: &McrbRom, mu: &[f64; 2], r: usize) -> Result<McEstimate> {
    Ok(mcrb_statistics(rom, mu, r)?.expectation)
}

pub fn variance_with_bound(rom: &McrbRom, mu: &[f64; 2], r: usize) -> Result<McEstimate> {
    Ok(mcrb_statistics(rom, mu, r)?.variance)
}

/// Full-order outputs l(u(y, μ)) over the sample set.
pub fn mcfe_outputs(model: &FullOrderModel, samples: &SampleSet, mu: &[f64; 2]) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|y| Ok(model.output(&model.solve(y, mu)?)))
        .collect()
}

/// Full-order Monte Carlo moments of the output at μ.
pub fn mcfe_statistics(model: &FullOrderModel, samples: &SampleSet, mu: &[f64; 2]) -> Result<McMoments> {
    mc_estimators(&mcfe_outputs(model, samples, mu)?)
}
