//! Stochastic Galerkin full-order and reduced basis models.
//!
//! In the double-orthogonal basis the stochastic Galerkin operator is block
//! diagonal: block m is A_m(μ) = A0 + Σ_k d_k^{(m)} Ay[k] + Σ_p μ_p Amu[p]
//! and the load of block m is E_m f. Vectors of the tensor space are stored
//! mode by mode, each block holding M_FE spatial coefficients.

use std::sync::Arc;

use log::info;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{dot, sparse_solve_pair, CsrMatrix};
use crate::mcrb::{gram_weighting, PodReport};
use crate::model::FullOrderModel;
use crate::pod::{optimality_defect, orthonormality_defect, pod_of_weighted, Weighting};
use crate::rom::{head, solve_reduced, ReducedSpace};
use crate::stats::McEstimate;
use crate::stochastic::{
    gauss_uniform, sg_expectation_vector, sg_mode_reaction_coefficients, DoubleOrthogonalBasis,
};

pub const SGRB_SPACE_NAMES: [&str; 4] = ["primal", "dual1", "dual2", "dual3"];

#[derive(Debug, Clone)]
pub struct SgSystem {
    pub model: Arc<FullOrderModel>,
    pub basis: DoubleOrthogonalBasis,
    /// E_m = E[Ψ_m].
    pub expectation: Vec<f64>,
    /// Reaction coefficients d^{(m)} of every block.
    pub mode_coefficients: Vec<Vec<f64>>,
    /// A_m(0) for every block.
    pub base_blocks: Vec<CsrMatrix>,
}

impl SgSystem {
    pub fn new(model: Arc<FullOrderModel>, basis: DoubleOrthogonalBasis) -> Result<Self> {
        if basis.k != model.k() {
            return Err(Error::Dimension {
                context: "stochastic basis dimension vs. KL modes",
                expected: model.k(),
                actual: basis.k,
            });
        }
        let expectation = sg_expectation_vector(&basis);
        let mode_coefficients = (0..basis.m_sg())
            .map(|m| sg_mode_reaction_coefficients(&basis, m))
            .collect::<Result<Vec<_>>>()?;
        let base_blocks = mode_coefficients
            .iter()
            .map(|d| model.ops.symmetric_operator(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(SgSystem {
            model,
            basis,
            expectation,
            mode_coefficients,
            base_blocks,
        })
    }

    pub fn m_sg(&self) -> usize {
        self.basis.m_sg()
    }

    pub fn m_fe(&self) -> usize {
        self.model.m_fe()
    }

    pub fn m_total(&self) -> usize {
        self.m_sg() * self.m_fe()
    }

    /// A_m(μ).
    pub fn block_operator(&self, m: usize, mu: &[f64; 2]) -> Result<CsrMatrix> {
        let mut a = self.base_blocks[m].clone();
        for (p, amu) in mu.iter().zip(&self.model.ops.amu) {
            a.axpy(*p, amu)?;
        }
        Ok(a)
    }

    /// E ⊗ v: a deterministic spatial vector spread over the modes.
    pub fn spread(&self, v: &[f64]) -> Vec<f64> {
        self.spread_with(&self.expectation, v)
    }

    fn spread_with(&self, weights: &[f64], v: &[f64]) -> Vec<f64> {
        weights
            .iter()
            .flat_map(|e| v.iter().map(move |x| e * x))
            .collect()
    }

    /// f̄ = E ⊗ f.
    pub fn load(&self) -> Vec<f64> {
        self.spread(&self.model.ops.f_vec)
    }

    /// l̄ = E ⊗ l, so that l̄ᵀ v = E[l(v)].
    pub fn output_vector(&self) -> Vec<f64> {
        self.spread(&self.model.ops.l_vec)
    }

    /// o_m = l(v_m) for every block.
    pub fn mode_outputs(&self, v: &[f64]) -> Vec<f64> {
        v.chunks(self.m_fe()).map(|b| self.model.output(b)).collect()
    }

    /// Applies the affine term q ∈ {0: blockdiag A_m(0), 1: I⊗Amu[0], 2: I⊗Amu[1]}.
    pub fn apply_term(&self, q: usize, x: &[f64], transpose: bool) -> Vec<f64> {
        let m_fe = self.m_fe();
        let mut out = vec![0.0; x.len()];
        for (m, (xb, ob)) in x.chunks(m_fe).zip(out.chunks_mut(m_fe)).enumerate() {
            let a = if q == 0 {
                &self.base_blocks[m]
            } else {
                &self.model.ops.amu[q - 1]
            };
            if transpose {
                a.tr_mul_vec_into(xb, ob);
            } else {
                a.mul_vec_into(xb, ob);
            }
        }
        out
    }

    /// Ā(μ) x (or Āᵀ x).
    pub fn apply(&self, mu: &[f64; 2], x: &[f64], transpose: bool) -> Vec<f64> {
        let mut out = self.apply_term(0, x, transpose);
        for (p, mp) in mu.iter().enumerate() {
            if *mp != 0.0 {
                let t = self.apply_term(p + 1, x, transpose);
                out.iter_mut().zip(&t).for_each(|(o, v)| *o += mp * v);
            }
        }
        out
    }

    /// Ā_q V column by column.
    pub fn apply_term_dense(&self, q: usize, v: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::<f64>::zeros(v.nrows(), v.ncols());
        for c in 0..v.ncols() {
            let col = self.apply_term(q, v.column(c).as_slice(), false);
            out.column_mut(c).copy_from_slice(&col);
        }
        out
    }
}

/// Mode-wise solutions ū and w with A_mᵀ w_m = −l for every block.
pub fn solve_sgfe_with_dual(sg: &SgSystem, mu: &[f64; 2]) -> Result<(Vec<f64>, Vec<f64>)> {
    let ops = &sg.model.ops;
    let neg_l: Vec<f64> = ops.l_vec.iter().map(|v| -v).collect();
    let mut u = Vec::with_capacity(sg.m_total());
    let mut w = Vec::with_capacity(sg.m_total());
    for (m, e) in sg.expectation.iter().enumerate() {
        let a = sg.block_operator(m, mu)?;
        let rhs: Vec<f64> = ops.f_vec.iter().map(|f| e * f).collect();
        let (um, wm) = sparse_solve_pair(&a, &rhs, &neg_l).map_err(|err| {
            Error::solver(format!("stochastic Galerkin block {m}: {err}"))
        })?;
        u.extend(um);
        w.extend(wm);
    }
    Ok((u, w))
}

/// ū(μ) from the M_SG independent block systems.
pub fn solve_sgfe(sg: &SgSystem, mu: &[f64; 2]) -> Result<Vec<f64>> {
    let ops = &sg.model.ops;
    let mut u = Vec::with_capacity(sg.m_total());
    for (m, e) in sg.expectation.iter().enumerate() {
        let a = sg.block_operator(m, mu)?;
        let rhs: Vec<f64> = ops.f_vec.iter().map(|f| e * f).collect();
        let um = crate::linalg::sparse_solve(&a, &rhs)
            .map_err(|err| Error::solver(format!("stochastic Galerkin block {m}: {err}")))?;
        u.extend(um);
    }
    Ok(u)
}

/// Largest tensor dimension accepted by [`kronecker_system`].
pub const KRONECKER_MAX_DIM: usize = 4000;

/// The coupled system Σ_q G_q ⊗ A_q(μ) written out densely, with
/// G_0[m, n] = E[Ψ_m Ψ_n], G_k[m, n] = E[y_k Ψ_m Ψ_n] integrated by tensor
/// Gauss quadrature, and load E[Ψ_m] f. Only meant for tiny instances.
pub fn kronecker_system(sg: &SgSystem, mu: &[f64; 2]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (m_sg, m_fe, k) = (sg.m_sg(), sg.m_fe(), sg.basis.k);
    if sg.m_total() > KRONECKER_MAX_DIM {
        return Err(Error::config(format!(
            "the dense coupled system is limited to {KRONECKER_MAX_DIM} unknowns, got {}",
            sg.m_total()
        )));
    }
    let (nodes, weights) = gauss_uniform(sg.basis.degree + 2);
    let nq = nodes.len();
    let mut g = vec![DMatrix::<f64>::zeros(m_sg, m_sg); k + 1];
    let mut e = vec![0.0; m_sg];
    let mut idx = vec![0usize; k];
    for _ in 0..nq.pow(k as u32) {
        let y: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
        let w: f64 = idx.iter().map(|&i| weights[i]).product();
        let psi = sg.basis.eval_tensor(&y);
        for m in 0..m_sg {
            e[m] += w * psi[m];
            for n in 0..m_sg {
                let p = w * psi[m] * psi[n];
                g[0][(m, n)] += p;
                for (kk, yk) in y.iter().enumerate() {
                    g[kk + 1][(m, n)] += p * yk;
                }
            }
        }
        for d in idx.iter_mut().rev() {
            *d += 1;
            if *d < nq {
                break;
            }
            *d = 0;
        }
    }
    let mut mean_op = sg.model.ops.a0.clone();
    for (p, amu) in mu.iter().zip(&sg.model.ops.amu) {
        mean_op.axpy(*p, amu)?;
    }
    let blocks: Vec<DMatrix<f64>> = std::iter::once(mean_op.to_dense())
        .chain(sg.model.ops.ay.iter().map(|a| a.to_dense()))
        .collect();
    let mut a = DMatrix::<f64>::zeros(sg.m_total(), sg.m_total());
    for m in 0..m_sg {
        for n in 0..m_sg {
            let mut view = a.view_mut((m * m_fe, n * m_fe), (m_fe, m_fe));
            for (gq, bq) in g.iter().zip(&blocks) {
                if gq[(m, n)] != 0.0 {
                    view += bq * gq[(m, n)];
                }
            }
        }
    }
    let f = DVector::from_vec(sg.spread_with(&e, &sg.model.ops.f_vec));
    Ok((a, f))
}

/// (E[l(v)], V[l(v)]) = (Σ E_m o_m, Σ o_m² − mean²) for v in the tensor space.
pub fn sg_output_moments(expectation: &[f64], l_vec: &[f64], v: &[f64]) -> Result<(f64, f64)> {
    if v.len() != expectation.len() * l_vec.len() {
        return Err(Error::Dimension {
            context: "stochastic Galerkin vector",
            expected: expectation.len() * l_vec.len(),
            actual: v.len(),
        });
    }
    let o: Vec<f64> = v.chunks(l_vec.len()).map(|b| dot(l_vec, b)).collect();
    let mean = dot(expectation, &o);
    let second: f64 = o.iter().map(|x| x * x).sum();
    Ok((mean, second - mean * mean))
}

/// Full-order SG moments of the output at μ.
pub fn sgfe_statistics(sg: &SgSystem, mu: &[f64; 2]) -> Result<(f64, f64)> {
    let u = solve_sgfe(sg, mu)?;
    sg_output_moments(&sg.expectation, &sg.model.ops.l_vec, &u)
}

/// ᾱ = min_m λ_min(sym A_m, gram_X); independent of μ.
pub fn coercivity_factor_sg(sg: &SgSystem) -> Result<f64> {
    let mut alpha = f64::INFINITY;
    for d in &sg.mode_coefficients {
        alpha = alpha.min(sg.model.coercivity(d)?);
    }
    Ok(alpha)
}

/// γ̄₍₂₎ = ‖l‖²_{X′} = lᵀ gram_X⁻¹ l for a deterministic output functional.
pub fn continuity_factor_gamma2(model: &FullOrderModel) -> Result<f64> {
    model.riesz.dual_norm_sq(&model.ops.l_vec)
}

#[derive(Debug, Clone)]
pub struct SgrbRom {
    pub sg: Arc<SgSystem>,
    /// Primal space followed by the three dual spaces.
    pub spaces: Vec<ReducedSpace>,
    /// cross[i][q] = V̄_{i+1}ᵀ Ā_q V̄_0 for the dual spaces.
    pub cross: Vec<Vec<DMatrix<f64>>>,
    /// V̄_{i+1}ᵀ f̄ for the dual spaces.
    pub cross_load: Vec<Vec<f64>>,
    /// mode_maps[i][(m, r)] = l(block m of column r of V̄_i).
    pub mode_maps: Vec<DMatrix<f64>>,
    pub alpha_bar: f64,
    pub gamma2: f64,
    pub train_mu: Vec<[f64; 2]>,
}

impl SgrbRom {
    pub fn r_max(&self) -> usize {
        self.spaces.iter().map(|s| s.r_max()).max().unwrap_or(0)
    }
}

fn mode_map(sg: &SgSystem, basis: &DMatrix<f64>) -> DMatrix<f64> {
    let mut map = DMatrix::<f64>::zeros(sg.m_sg(), basis.ncols());
    for r in 0..basis.ncols() {
        let o = sg.mode_outputs(basis.column(r).as_slice());
        map.column_mut(r).copy_from_slice(&o);
    }
    map
}

fn build_sg_space(
    sg: &SgSystem,
    name: &str,
    mut snapshots: DMatrix<f64>,
    verify: bool,
) -> Result<(ReducedSpace, PodReport)> {
    let n = snapshots.ncols();
    let s = gram_weighting(&sg.model, sg.m_sg());
    let w = Weighting::uniform(n);
    s.apply_factor(&mut snapshots);
    w.apply_factor_right(&mut snapshots);
    let pod = pod_of_weighted(&snapshots, &s)?;
    let mut report = PodReport {
        name: format!("sgrb {name}"),
        n_snapshots: n,
        r_max: pod.r_max(),
        optimality_defect: None,
        orthonormality_defect: None,
    };
    if verify {
        report.optimality_defect = Some(optimality_defect(&snapshots, &s, &pod));
        report.orthonormality_defect = Some(orthonormality_defect(&pod, &s));
    }
    info!("{}: R_max = {}", report.name, report.r_max);
    let applied: Vec<DMatrix<f64>> = (0..3).map(|q| sg.apply_term_dense(q, &pod.phi)).collect();
    let space = ReducedSpace::new(pod, &applied, &sg.load(), &sg.output_vector());
    Ok((space, report))
}

/// Builds the primal and three dual SGRB spaces from N_train SGFE solves.
pub fn build_sgrb_offline(
    sg: Arc<SgSystem>,
    train_mu: &[[f64; 2]],
    verify_pods: bool,
) -> Result<(SgrbRom, Vec<PodReport>)> {
    if train_mu.is_empty() {
        return Err(Error::config("the training set must contain at least one parameter"));
    }
    let nt = train_mu.len();
    let mt = sg.m_total();
    let mut primal = DMatrix::<f64>::zeros(mt, nt);
    let mut unit_dual = DMatrix::<f64>::zeros(mt, nt);
    for (j, mu) in train_mu.iter().enumerate() {
        let (u, w) = solve_sgfe_with_dual(&sg, mu)?;
        primal.column_mut(j).copy_from_slice(&u);
        unit_dual.column_mut(j).copy_from_slice(&w);
    }
    let m_fe = sg.m_fe();
    let mut dual1 = unit_dual.clone();
    for mut col in dual1.column_iter_mut() {
        for (blk, e) in col.as_mut_slice().chunks_mut(m_fe).zip(&sg.expectation) {
            blk.iter_mut().for_each(|v| *v *= e);
        }
    }
    info!("sgrb: {nt} primal and dual snapshots computed");

    let mut spaces = Vec::with_capacity(4);
    let mut reports = Vec::with_capacity(4);
    for (name, snaps) in [("primal", primal.clone()), ("dual1", dual1.clone())] {
        let (space, report) = build_sg_space(&sg, name, snaps, verify_pods)?;
        spaces.push(space);
        reports.push(report);
    }

    // Dual 2 and 3 snapshots use the reduced primal and dual-1 solutions
    // at full reduced dimension.
    let l_bar = sg.output_vector();
    let f_bar = sg.load();
    let mut dual2 = DMatrix::<f64>::zeros(mt, nt);
    let mut dual3 = DMatrix::<f64>::zeros(mt, nt);
    for (j, mu) in train_mu.iter().enumerate() {
        let theta = [1.0, mu[0], mu[1]];
        let (s0, s1) = (&spaces[0], &spaces[1]);
        let c = solve_reduced(s0.assemble(&theta, s0.r_max(), false), &s0.f_red)?;
        let neg: Vec<f64> = s1.l_red.iter().map(|v| -v).collect();
        let c1 = solve_reduced(s1.assemble(&theta, s1.r_max(), true), &neg)?;
        let u_r = s0.lift(&c);
        let u1_r = s1.lift(&c1);
        let au = sg.apply(mu, &u_r, false);
        let r_u1: f64 = f_bar.iter().zip(&au).zip(&u1_r).map(|((f, a), z)| (f - a) * z).sum();
        let u_full = primal.column(j);
        let o_full = sg.mode_outputs(u_full.as_slice());
        let o_r = sg.mode_outputs(&u_r);
        let w = unit_dual.column(j);
        let mut col2 = dual2.column_mut(j);
        for m in 0..sg.m_sg() {
            let s = o_full[m] + o_r[m];
            for k in 0..m_fe {
                col2[m * m_fe + k] = s * w[m * m_fe + k];
            }
        }
        let c3 = dot(&l_bar, u_full.as_slice()) + dot(&l_bar, &u_r) - 2.0 * r_u1;
        let d1 = dual1.column(j).clone_owned() * c3;
        dual3.column_mut(j).copy_from(&d1);
    }
    drop(unit_dual);
    for (name, snaps) in [("dual2", dual2), ("dual3", dual3)] {
        let (space, report) = build_sg_space(&sg, name, snaps, verify_pods)?;
        spaces.push(space);
        reports.push(report);
    }

    let applied0: Vec<DMatrix<f64>> = (0..3).map(|q| sg.apply_term_dense(q, &spaces[0].basis)).collect();
    let mut cross = Vec::with_capacity(3);
    let mut cross_load = Vec::with_capacity(3);
    let f_vec = DVector::from_column_slice(&f_bar);
    for s in &spaces[1..] {
        let vt = s.basis.transpose();
        cross.push(applied0.iter().map(|a| &vt * a).collect());
        cross_load.push((&vt * &f_vec).as_slice().to_vec());
    }
    let mode_maps = spaces.iter().map(|s| mode_map(&sg, &s.basis)).collect();
    let alpha_bar = coercivity_factor_sg(&sg)?;
    let gamma2 = continuity_factor_gamma2(&sg.model)?;
    Ok((
        SgrbRom {
            sg,
            spaces,
            cross,
            cross_load,
            mode_maps,
            alpha_bar,
            gamma2,
            train_mu: train_mu.to_vec(),
        },
        reports,
    ))
}

/// Reduced solutions and the reduced-only quantities of one SGRB evaluation.
#[derive(Debug, Clone)]
pub struct SgrbChain {
    pub u: Vec<f64>,
    pub duals: [Vec<f64>; 3],
    /// l̄(ū^R) and V[l(ū^R)].
    pub mean: f64,
    pub variance: f64,
    /// Per-mode outputs of ū^R.
    pub mode_outputs: Vec<f64>,
    /// r̄(ū^R₍ᵢ₎), i = 1, 2, 3.
    pub corrections: [f64; 3],
}

impl SgrbChain {
    pub fn corrected_mean(&self) -> f64 {
        self.mean - self.corrections[0]
    }

    pub fn corrected_variance(&self) -> f64 {
        self.variance + self.corrections[0].powi(2) - self.corrections[1] + self.corrections[2]
    }
}

fn check_rank(rom: &SgrbRom, r: usize) -> Result<()> {
    if r == 0 || r > rom.r_max() {
        return Err(Error::Index {
            index: r,
            valid: format!("1..={}", rom.r_max()),
        });
    }
    Ok(())
}

/// r̄(ū^R₍ᵢ₎) = c_iᵀ (V̄_iᵀ f̄ − V̄_iᵀ Ā(μ) V̄_0 c) from reduced data only.
fn reduced_correction(rom: &SgrbRom, i: usize, theta: &[f64], c: &[f64], ci: &[f64]) -> f64 {
    let ri = ci.len();
    let r0 = c.len();
    let cv = DVector::from_column_slice(c);
    let mut acc = 0.0;
    let mut ax = DVector::<f64>::zeros(ri);
    for (t, x) in theta.iter().zip(&rom.cross[i - 1]) {
        ax += x.view((0, 0), (ri, r0)) * &cv * *t;
    }
    for k in 0..ri {
        acc += ci[k] * (rom.cross_load[i - 1][k] - ax[k]);
    }
    acc
}

/// The online SGRB solve: four R × R systems and no sampling.
pub fn solve_sgrb_chain(rom: &SgrbRom, mu: &[f64; 2], r: usize) -> Result<SgrbChain> {
    check_rank(rom, r)?;
    let theta = [1.0, mu[0], mu[1]];
    let s = &rom.spaces;
    let r0 = s[0].dim(r);
    let c = solve_reduced(s[0].assemble(&theta, r0, false), head(&s[0].f_red, r0))?;
    let r1 = s[1].dim(r);
    let rhs1: Vec<f64> = head(&s[1].l_red, r1).iter().map(|v| -v).collect();
    let c1 = solve_reduced(s[1].assemble(&theta, r1, true), &rhs1)?;
    let corr1 = reduced_correction(rom, 1, &theta, &c, &c1);

    let o = (rom.mode_maps[0].columns(0, r0) * DVector::from_column_slice(&c))
        .as_slice()
        .to_vec();
    let mean = dot(head(&s[0].l_red, r0), &c);
    let variance = o.iter().map(|x| x * x).sum::<f64>() - mean * mean;

    let r2 = s[2].dim(r);
    let rhs2 = (rom.mode_maps[2].columns(0, r2).transpose() * DVector::from_column_slice(&o)) * -2.0;
    let c2 = solve_reduced(s[2].assemble(&theta, r2, true), rhs2.as_slice())?;
    let r3 = s[3].dim(r);
    let scale3 = -2.0 * (mean - corr1);
    let rhs3: Vec<f64> = head(&s[3].l_red, r3).iter().map(|v| scale3 * v).collect();
    let c3 = solve_reduced(s[3].assemble(&theta, r3, true), &rhs3)?;
    let corr2 = reduced_correction(rom, 2, &theta, &c, &c2);
    let corr3 = reduced_correction(rom, 3, &theta, &c, &c3);
    Ok(SgrbChain {
        u: c,
        duals: [c1, c2, c3],
        mean,
        variance,
        mode_outputs: o,
        corrections: [corr1, corr2, corr3],
    })
}

/// Full-order residual vectors of the four SGRB problems.
#[derive(Debug, Clone)]
pub struct SgrbResiduals {
    pub primal: Vec<f64>,
    pub duals: [Vec<f64>; 3],
}

pub fn sgrb_residuals(rom: &SgrbRom, mu: &[f64; 2], chain: &SgrbChain) -> SgrbResiduals {
    let sg = &rom.sg;
    let u = rom.spaces[0].lift(&chain.u);
    let au = sg.apply(mu, &u, false);
    let primal: Vec<f64> = sg.load().iter().zip(&au).map(|(f, a)| f - a).collect();
    let l_bar = sg.output_vector();
    let l = &sg.model.ops.l_vec;
    let m_fe = sg.m_fe();
    let mut duals: [Vec<f64>; 3] = Default::default();
    for i in 0..3 {
        let z = rom.spaces[i + 1].lift(&chain.duals[i]);
        let atz = sg.apply(mu, &z, true);
        let mut rhs = match i {
            0 => l_bar.iter().map(|v| -v).collect::<Vec<f64>>(),
            1 => (0..sg.m_total())
                .map(|k| -2.0 * chain.mode_outputs[k / m_fe] * l[k % m_fe])
                .collect(),
            _ => {
                let s = -2.0 * (chain.mean - chain.corrections[0]);
                l_bar.iter().map(|v| s * v).collect()
            }
        };
        rhs.iter_mut().zip(&atz).for_each(|(r, a)| *r -= a);
        duals[i] = rhs;
    }
    SgrbResiduals { primal, duals }
}

#[derive(Debug, Clone)]
pub struct SgrbStatistics {
    pub expectation: McEstimate,
    pub variance: McEstimate,
}

/// Corrected expectation and variance with their bounds at (μ, R).
pub fn sgrb_statistics(rom: &SgrbRom, mu: &[f64; 2], r: usize) -> Result<SgrbStatistics> {
    let chain = solve_sgrb_chain(rom, mu, r)?;
    let res = sgrb_residuals(rom, mu, &chain);
    let riesz = &rom.sg.model.riesz;
    let n0 = riesz.block_dual_norm(&res.primal)?;
    let n1 = riesz.block_dual_norm(&res.duals[0])?;
    let diff: Vec<f64> = res.duals[1].iter().zip(&res.duals[2]).map(|(a, b)| a - b).collect();
    let n23 = riesz.block_dual_norm(&diff)?;
    let a = rom.alpha_bar;
    let expectation = McEstimate::new(
        chain.mean,
        chain.corrected_mean(),
        vec![("residual_product".into(), n0 * n1 / a)],
    );
    let variance = McEstimate::new(
        chain.variance,
        chain.corrected_variance(),
        vec![
            ("continuity".into(), rom.gamma2 * n0 * n0 / (a * a)),
            ("squared_product".into(), (n0 * n1 / a).powi(2)),
            ("dual_combination".into(), n23 * n0 / a),
        ],
    );
    Ok(SgrbStatistics {
        expectation,
        variance,
    })
}

pub fn expectation_with_bound_sg(rom: &SgrbRom, mu: &[f64; 2], r: usize) -> Result<McEstimate> {
    Ok(sgrb_statistics(rom, mu, r)?.expectation)
}

pub fn variance_with_bound_sg(rom: &SgrbRom, mu: &[f64; 2], r: usize) -> Result<McEstimate> {
    Ok(sgrb_statistics(rom, mu, r)?.variance)
}
