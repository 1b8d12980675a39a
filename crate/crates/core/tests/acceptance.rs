//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Numeric arguments restrict the run to
//! the listed criteria, e.g. `cargo test --test acceptance -- 6 9`.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use sgrb::artifact::OfflineArtifact;
use sgrb::config::StudyConfig;
use sgrb::mcrb::{mcfe_outputs, mcfe_statistics, mcrb_statistics, reduced_sample_solves, solve_mcrb_chain, McrbRom};
use sgrb::model::FullOrderModel;
use sgrb::sgrb::{sgfe_statistics, sgrb_residuals, sgrb_statistics, solve_sgrb_chain, SgSystem, SgrbRom};
use sgrb::stats::{mc_estimators, McEstimate};
use sgrb::stochastic::{build_double_orthogonal_basis, draw_mc_samples};
use sgrb::study::{cmd_offline, cmd_validate};
use sgrb::Result;

/// Absolute slack on error ≤ bound.
const BOUND_SLACK: f64 = 1e-12;
const R_LIST: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];
/// Training points used for the MCRB half of the reproduction check.
const MCRB_REPRODUCTION_POINTS: usize = 4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

/// Full-order references and reduced statistics at one test point.
struct PointSweep {
    mc: (f64, f64),
    sg: (f64, f64),
    mcrb: Vec<(McEstimate, McEstimate)>,
    sgrb: Vec<(McEstimate, McEstimate)>,
}

struct Context {
    cfg: StudyConfig,
    art: OfflineArtifact,
    test_mu: Vec<[f64; 2]>,
    sweep: Option<Vec<PointSweep>>,
}

impl Context {
    fn sweep(&mut self) -> Result<&[PointSweep]> {
        if self.sweep.is_none() {
            let t = Instant::now();
            let mut out = Vec::with_capacity(self.test_mu.len());
            for mu in &self.test_mu {
                let mc = mcfe_statistics(&self.art.mcrb.model, &self.art.mcrb.samples, mu)?;
                let sg = sgfe_statistics(&self.art.sgrb.sg, mu)?;
                let mut mcrb = Vec::new();
                let mut sgrb = Vec::new();
                for &r in &R_LIST {
                    let m = mcrb_statistics(&self.art.mcrb, mu, r)?;
                    mcrb.push((m.expectation, m.variance));
                    let s = sgrb_statistics(&self.art.sgrb, mu, r)?;
                    sgrb.push((s.expectation, s.variance));
                }
                out.push(PointSweep {
                    mc: (mc.mean, mc.variance),
                    sg,
                    mcrb,
                    sgrb,
                });
            }
            eprintln!("  sweep over {} test points took {:.1?}", self.test_mu.len(), t.elapsed());
            self.sweep = Some(out);
        }
        Ok(self.sweep.as_deref().unwrap())
    }
}

fn violates(reference: f64, est: &McEstimate) -> bool {
    let err = (reference - est.corrected_value).abs();
    !(err <= est.bound + BOUND_SLACK)
}

fn bound_validity(ctx: &mut Context) -> Result<Outcome> {
    let sweep = ctx.sweep()?;
    let mut checked = 0;
    let mut violations = Vec::new();
    for (p, s) in sweep.iter().enumerate() {
        for (ri, &r) in R_LIST.iter().enumerate() {
            let cases = [
                ("mcrb E", s.mc.0, &s.mcrb[ri].0),
                ("mcrb V", s.mc.1, &s.mcrb[ri].1),
                ("sgrb E", s.sg.0, &s.sgrb[ri].0),
                ("sgrb V", s.sg.1, &s.sgrb[ri].1),
            ];
            for (name, reference, est) in cases {
                checked += 1;
                if violates(reference, est) {
                    violations.push(format!("{name} at point {p}, R = {r}"));
                }
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!("{} violations in {checked} checks {:?}", violations.len(), violations.iter().take(3).collect::<Vec<_>>()),
    )
}

fn r16_sufficiency(ctx: &mut Context) -> Result<Outcome> {
    let d = &ctx.cfg.discretization;
    let deg = d.sg_degree;
    let fine = Arc::new(FullOrderModel::build(d.reference.n_cells, ctx.cfg.field_parameters())?);
    let fine_sg = SgSystem::new(fine, build_double_orthogonal_basis(deg, ctx.cfg.model.kl_modes)?)?;
    let test_mu = ctx.test_mu.clone();
    let ri = R_LIST.iter().position(|&r| r == 16).unwrap();
    let sweep = ctx.sweep()?;
    let (mut mc_ok, mut sg_ok) = (0, 0);
    let mut ratios = Vec::new();
    for (mu, s) in test_mu.iter().zip(sweep) {
        let (fine_mean, _) = sgfe_statistics(&fine_sg, mu)?;
        let proxy = (s.sg.0 - fine_mean).abs();
        let mc_err = (s.mc.0 - s.mcrb[ri].0.corrected_value).abs();
        let sg_err = (s.sg.0 - s.sgrb[ri].0.corrected_value).abs();
        mc_ok += (mc_err < proxy) as usize;
        sg_ok += (sg_err < proxy) as usize;
        ratios.push(mc_err.max(sg_err) / proxy);
    }
    ratios.sort_by(f64::total_cmp);
    let n = test_mu.len();
    let need = (0.9 * n as f64).ceil() as usize;
    outcome(
        mc_ok >= need && sg_ok >= need,
        format!(
            "MCRB below proxy at {mc_ok}/{n}, SGRB at {sg_ok}/{n} (need {need}); median error/proxy {:.1e}",
            ratios[n / 2]
        ),
    )
}

/// Largest residual dual norm of the MCRB primal and dual problems over all
/// samples at μ, with the statistics at R.
fn mcrb_reproduction(rom: &McrbRom, mu: &[f64; 2], r: usize) -> Result<(f64, [f64; 2], [f64; 2])> {
    let model = &rom.model;
    let mut worst = [0.0f64; 3];
    let mut h = Vec::with_capacity(rom.samples.n_xi);
    let mut unit_worst = [0.0f64; 2];
    for y in rom.samples.iter() {
        let chain = solve_mcrb_chain(rom, y, mu, r, 1.0, 1.0)?;
        h.push(chain.h);
        let a = model.ops.operator(y, mu)?;
        let u = rom.spaces[0].lift(&chain.u);
        let au = a.mul_vec(&u);
        let res: Vec<f64> = model.ops.f_vec.iter().zip(&au).map(|(f, v)| f - v).collect();
        worst[0] = worst[0].max(model.riesz.dual_norm(&res)?);
        for (i, scale) in [(0, 1.0), (1, 2.0 * chain.h), (2, 1.0), (3, 1.0)] {
            let z = rom.spaces[i + 1].lift(&chain.duals[i]);
            let atz = a.tr_mul_vec(&z);
            let res: Vec<f64> = model.ops.l_vec.iter().zip(&atz).map(|(l, v)| -scale * l - v).collect();
            let norm = model.riesz.dual_norm(&res)?;
            match i {
                0 | 1 => worst[i + 1] = worst[i + 1].max(norm),
                _ => unit_worst[i - 2] = unit_worst[i - 2].max(norm),
            }
        }
    }
    let hm = mc_estimators(&h)?;
    let dual_worst = worst[1]
        .max(worst[2])
        .max(hm.mean.abs() * unit_worst[0])
        .max(hm.underline_mean.abs() * unit_worst[1]);
    let stats = mcrb_statistics(rom, mu, r)?;
    Ok((
        worst[0].max(dual_worst),
        [stats.expectation.bound, stats.variance.bound],
        [stats.expectation.corrected_value, stats.variance.corrected_value],
    ))
}

fn sgrb_reproduction(rom: &SgrbRom, mu: &[f64; 2], r: usize) -> Result<(f64, [f64; 2], [f64; 2])> {
    let chain = solve_sgrb_chain(rom, mu, r)?;
    let res = sgrb_residuals(rom, mu, &chain);
    let riesz = &rom.sg.model.riesz;
    let mut worst = riesz.block_dual_norm(&res.primal)?;
    for d in &res.duals {
        worst = worst.max(riesz.block_dual_norm(d)?);
    }
    let stats = sgrb_statistics(rom, mu, r)?;
    Ok((
        worst,
        [stats.expectation.bound, stats.variance.bound],
        [stats.expectation.corrected_value, stats.variance.corrected_value],
    ))
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn reproduction(ctx: &mut Context) -> Result<Outcome> {
    let art = &ctx.art;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut fold = |(res, bounds, values): (f64, [f64; 2], [f64; 2]), reference: (f64, f64)| {
        worst.0 = worst.0.max(res);
        worst.1 = worst.1.max(bounds[0]).max(bounds[1]);
        worst.2 = worst.2.max(rel(values[0], reference.0)).max(rel(values[1], reference.1));
    };
    let sg_rmax = art.sgrb.r_max();
    for mu in &art.sgrb.train_mu {
        fold(sgrb_reproduction(&art.sgrb, mu, sg_rmax)?, sgfe_statistics(&art.sgrb.sg, mu)?);
    }
    let mc_rmax = art.mcrb.r_max();
    for mu in art.mcrb.train_mu.iter().take(MCRB_REPRODUCTION_POINTS) {
        let m = mcfe_statistics(&art.mcrb.model, &art.mcrb.samples, mu)?;
        fold(mcrb_reproduction(&art.mcrb, mu, mc_rmax)?, (m.mean, m.variance));
    }
    outcome(
        worst.0 <= 1e-8 && worst.1 <= 1e-10 && worst.2 <= 1e-8,
        format!(
            "SGRB R_max = {sg_rmax} at {} training points, MCRB R_max = {mc_rmax} at {MCRB_REPRODUCTION_POINTS}; \
             max residual dual norm {:.1e}, max bound {:.1e}, max relative deviation {:.1e}",
            art.sgrb.train_mu.len(),
            worst.0,
            worst.1,
            worst.2
        ),
    )
}

fn pod_optimality(ctx: &mut Context) -> Result<Outcome> {
    let reports = &ctx.art.pod_reports;
    let mut worst = 0.0f64;
    let mut missing = 0;
    for r in reports {
        match r.optimality_defect {
            Some(d) => worst = worst.max(d),
            None => missing += 1,
        }
    }
    outcome(
        reports.len() == 9 && missing == 0 && worst <= 1e-10,
        format!("{} PODs, {missing} unverified, max relative defect {worst:.1e}", reports.len()),
    )
}

fn sg_mc_consistency(ctx: &mut Context) -> Result<Outcome> {
    let d = &ctx.cfg.discretization;
    let model = &ctx.art.mcrb.model;
    let sg = SgSystem::new(model.clone(), build_double_orthogonal_basis(d.reference.sg_degree, model.k())?)?;
    let samples = draw_mc_samples(d.reference.n_xi, model.k(), d.sample_seed)?;
    let n = samples.n_xi as f64;
    let mut pass = true;
    let mut worst = (0.0f64, 0.0f64);
    for mu in ctx.test_mu.iter().take(3) {
        let (sg_mean, sg_var) = sgfe_statistics(&sg, mu)?;
        let g = mcfe_outputs(model, &samples, mu)?;
        let m = mc_estimators(&g)?;
        let m4 = g.iter().map(|v| (v - m.mean).powi(4)).sum::<f64>() / n;
        let se_mean = (m.variance / n).sqrt();
        let se_var = ((m4 - m.variance * m.variance * (n - 3.0) / (n - 1.0)) / n).sqrt();
        let z_mean = (sg_mean - m.mean).abs() / se_mean;
        let z_var = (sg_var - m.variance).abs() / se_var;
        pass &= z_mean <= 4.0 && z_var <= 8.0;
        worst = (worst.0.max(z_mean), worst.1.max(z_var));
    }
    outcome(
        pass,
        format!("max |E| deviation {:.2} SE (limit 4), max |V| deviation {:.2} SE (limit 8)", worst.0, worst.1),
    )
}

fn estimator_algebra(_ctx: &mut Context) -> Result<Outcome> {
    let m = mc_estimators(&[1.0, 2.0, 3.0])?;
    let exact = m.mean == 2.0 && m.underline_mean == 3.0 && m.variance == 1.0;
    // g = y₁² + y₂ with y uniform of unit variance: V[g] = 4/5 + 1.
    let truth = 1.8;
    let vs: Vec<f64> = (0..1000u64)
        .map(|seed| {
            let s = draw_mc_samples(32, 2, seed)?;
            let g: Vec<f64> = s.iter().map(|y| y[0] * y[0] + y[1]).collect();
            Ok(mc_estimators(&g)?.variance)
        })
        .collect::<Result<_>>()?;
    let m = mc_estimators(&vs)?;
    let se = (m.variance / vs.len() as f64).sqrt();
    let z = (m.mean - truth).abs() / se;
    outcome(
        exact && z <= 3.0,
        format!("{{1,2,3}} exact: {exact}; mean of V over 1000 seeds {:.4} vs {truth} ({z:.2} SE)", m.mean),
    )
}

fn component_ordering(ctx: &mut Context) -> Result<Outcome> {
    let ri = R_LIST.iter().position(|&r| r == 64).unwrap();
    let sweep = ctx.sweep()?;
    let mut dominant = 0;
    let mut ratio = Vec::new();
    for s in sweep {
        let v = &s.sgrb[ri].1;
        let c = v.component("continuity").unwrap_or(0.0);
        let other = v
            .component("squared_product")
            .unwrap_or(0.0)
            .max(v.component("dual_combination").unwrap_or(0.0));
        dominant += (c > other) as usize;
        ratio.push(c / other);
    }
    ratio.sort_by(f64::total_cmp);
    let n = sweep.len();
    let need = (0.9 * n as f64).ceil() as usize;
    outcome(
        dominant >= need,
        format!("continuity term largest at {dominant}/{n} points (need {need}); median ratio {:.1e}", ratio[n / 2]),
    )
}

fn online_cost(ctx: &mut Context) -> Result<Outcome> {
    let art = &ctx.art;
    let mu = ctx.test_mu[0];
    let r = 64;
    let before = reduced_sample_solves();
    sgrb_statistics(&art.sgrb, &mu, r)?;
    let mut times = Vec::new();
    for _ in 0..21 {
        let t = Instant::now();
        solve_sgrb_chain(&art.sgrb, &mu, r)?;
        times.push(t.elapsed().as_secs_f64());
    }
    let sg_loops = reduced_sample_solves() - before;
    times.sort_by(f64::total_cmp);
    let sg_time = times[times.len() / 2];

    let before = reduced_sample_solves();
    let t = Instant::now();
    mcrb_statistics(&art.mcrb, &mu, r)?;
    let mc_time = t.elapsed().as_secs_f64();
    let mc_solves = reduced_sample_solves() - before;
    outcome(
        sg_loops == 0 && sg_time <= 0.010 && mc_solves == art.mcrb.samples.n_xi as u64,
        format!(
            "SGRB: {sg_loops} per-sample solves, reduced solve {:.2} ms; MCRB: {mc_solves} per-sample solves, {:.0} ms",
            sg_time * 1e3,
            mc_time * 1e3
        ),
    )
}

fn surface_range(ctx: &mut Context) -> Result<Outcome> {
    let m = &ctx.cfg.model;
    let sg = &ctx.art.sgrb.sg;
    let (mut e_lo, mut e_hi, mut v_lo, mut v_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..21 {
        for j in 0..21 {
            let t = |k: usize, s: usize| m.parameter_lower[k] + (m.parameter_upper[k] - m.parameter_lower[k]) * s as f64 / 20.0;
            let (e, v) = sgfe_statistics(sg, &[t(0, i), t(1, j)])?;
            e_lo = e_lo.min(e);
            e_hi = e_hi.max(e);
            v_lo = v_lo.min(v);
            v_hi = v_hi.max(v);
        }
    }
    outcome(
        e_lo >= 1.0e-4 && e_hi <= 3.0e-4 && v_lo >= 0.0 && v_hi <= 2.5e-9,
        format!("E in [{e_lo:.3e}, {e_hi:.3e}], V in [{v_lo:.3e}, {v_hi:.3e}]"),
    )
}

fn quick_validation(_ctx: &mut Context) -> Result<Outcome> {
    let t = Instant::now();
    let art = cmd_offline(&StudyConfig::quick())?;
    let rep = cmd_validate(&art)?;
    let secs = t.elapsed().as_secs_f64();
    outcome(
        rep.passed() && secs < 60.0,
        format!("{} checks, {} failed, {secs:.1} s", rep.checks.len(), rep.failures().count()),
    )
}

type Criterion = fn(&mut Context) -> Result<Outcome>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("bound validity over 64 test points and R = 1..64", bound_validity),
        ("R = 16 errors below the FE discretization proxy", r16_sufficiency),
        ("reproduction at training points with R = R_max", reproduction),
        ("POD projection error equals singular value tail", pod_optimality),
        ("stochastic Galerkin vs Monte Carlo consistency", sg_mc_consistency),
        ("estimator algebra and unbiasedness", estimator_algebra),
        ("continuity term dominates the SGRB variance bound at R = 64", component_ordering),
        ("sampling-free SGRB online stage", online_cost),
        ("expectation and variance surface ranges", surface_range),
        ("quick config offline + validation under 60 s", quick_validation),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |i: usize| selected.is_empty() || selected.contains(&i);

    let mut cfg = StudyConfig::default();
    cfg.run.verify_pods = true;
    let needs_default = (1..=9).any(wanted);
    let art = if needs_default {
        let t = Instant::now();
        match cmd_offline(&cfg) {
            Ok(a) => {
                eprintln!("  default offline stage took {:.1?}", t.elapsed());
                Some(a)
            }
            Err(e) => {
                println!("FAIL offline stage on the default config: {e}");
                return ExitCode::FAILURE;
            }
        }
    } else {
        None
    };
    let test_mu = cfg.test_points().expect("default config has test points");
    let mut ctx = Context {
        art: art.unwrap_or_else(|| cmd_offline(&StudyConfig::quick()).expect("quick offline")),
        cfg,
        test_mu,
        sweep: None,
    };

    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !wanted(id) {
            continue;
        }
        let t = Instant::now();
        let (pass, detail) = match check(&mut ctx) {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += (!pass) as usize;
        println!(
            "{} {id}. {name}: {detail} [{:.1?}]",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
