mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{
    expm_taylor, input_integral, lmax, max_rel_diff, perturb, random_matrix, random_plant, random_vars, rk45_linear,
    rng,
};
use qsdc_core::hybrid::*;
use qsdc_core::linalg::{self, discretize, expm};
use qsdc_core::plant::{build_closed_loop, check_stabilizable, psi, psi_kras, quantize, sector_check};
use qsdc_core::synthesis::*;
use qsdc_core::{Matrix, PlantSpec, SymmetricMatrix};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn oscillator() -> SynthesisContext {
    SynthesisContext::new(&PlantSpec::oscillator_example()).unwrap()
}

fn printed_gain() -> Matrix {
    Matrix::from_rows(&[[0.5529, -2.1873, 0.0]])
}

fn printed_p() -> SymmetricMatrix {
    SymmetricMatrix::from_row_major(
        3,
        vec![2.5432, 0.0046, 0.0009, 0.0046, 2.5432, -0.0007, 0.0009, -0.0007, 0.4916],
    )
    .unwrap()
}

fn sym(m: &Matrix) -> SymmetricMatrix {
    SymmetricMatrix::from_matrix_sym(m).unwrap()
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let ctx = oscillator();
    let settings = SynthesisSettings::default();
    let (p, k) = (printed_p(), printed_gain());
    let found = find_multipliers(&p, &k, &ctx, &settings);
    let elapsed = start.elapsed();
    match found {
        Ok(vars) => {
            let rep = check_theorem1(&vars, &ctx, 1e-8).unwrap();
            let pass = rep.passed() && within(elapsed, 5.0);
            outcome(pass, format!("lambda_max(M) = {:.4e}, {:.2} s", rep.m_lambda_max, elapsed.as_secs_f64()))
        }
        Err(e) => {
            let s = multiplier_search(&p, &k, &ctx, &settings).unwrap();
            let vars = CertificateVars { p, k, s1: s.s1, s2: s.s2, rho: s.rho };
            let m = lmax(&assemble_m(&vars, &ctx).unwrap());
            outcome(false, format!("{e}; best lambda_max(M) = {m:.4e} at rho = {:.4e}", vars.rho))
        }
    }
}

fn criterion2_and_3() -> (Outcome, Outcome, Option<SynthesisResult>) {
    let start = Instant::now();
    let ctx = oscillator();
    let settings = SynthesisSettings { epsilon: 1e-4, k_max: 200, ..SynthesisSettings::default() };
    let result = match run_algorithm1(&ctx, &settings) {
        Ok(r) => r,
        Err(e) => {
            let msg = format!("run_algorithm1 failed: {e}");
            return (outcome(false, msg.clone()), outcome(false, msg), None);
        }
    };
    let elapsed = start.elapsed();
    let monotone = result.history.windows(2).all(|w| w[1].c >= w[0].c - 1e-7);
    let converged = result.status == SynthesisStatus::Converged;
    let in_band = (0.39..=0.55).contains(&result.c);
    let c2 = outcome(
        converged && in_band && monotone && within(elapsed, 60.0),
        format!(
            "c = {:.6}, {} iterates, status {:?}, monotone {monotone}, {:.2} s",
            result.c,
            result.iterations,
            result.status,
            elapsed.as_secs_f64()
        ),
    );
    let worst = result.history.iter().map(|h| h.mi2_lambda_max).fold(f64::NEG_INFINITY, f64::max);
    let final_lmax = lmax(&assemble_mi2(&result.vars, &ctx).unwrap());
    let bound = -0.5 * result.eta;
    let c3 = outcome(
        worst <= bound && final_lmax <= bound && result.history.len() == result.iterations,
        format!("worst lambda_max(MI2) = {worst:.4e} <= {bound:.4e} over {} iterates", result.history.len()),
    );
    (c2, c3, Some(result))
}

fn criterion4(result: Option<&SynthesisResult>) -> Outcome {
    let Some(r) = result else {
        return outcome(false, "no synthesized design");
    };
    let plant = PlantSpec::oscillator_example();
    let ctx = oscillator();
    let start = Instant::now();
    let design = LyapunovDesign::new(r.vars.p.clone(), r.sigma_star, &plant).unwrap();
    let x0 = HybridState::new(vec![10.0, -10.0, -5.0], 0.0);
    let arc = simulate(&plant, &r.vars.k, &x0, &Horizon { t_max: 30.0, ..Horizon::default() }).unwrap();
    let m = assemble_m(&r.vars, &ctx).unwrap();
    let lambda_d = jump_decay(&design, &m, 0.5, 200).unwrap().lambda_d;
    let cert = certify_arc(&arc, &design, lambda_d, None).unwrap();
    let elapsed = start.elapsed();
    let entered = cert.entered.is_some_and(|(t, _)| t <= 30.0);
    outcome(
        entered && cert.stayed && cert.flow_ok && cert.jump_decrease_ok && cert.jump_invariance_ok && within(elapsed, 2.0),
        format!(
            "entered L_V(1) at {:?}, stayed {}, flow error {:.2e}, {} decrease / {} invariance jumps, {:.2} s",
            cert.entered,
            cert.stayed,
            cert.worst_flow_error,
            cert.decrease_jumps,
            cert.invariance_jumps,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion5() -> Outcome {
    let start = Instant::now();
    let mut r = rng(505);
    let settings = SynthesisSettings::default();
    let (mut tried, mut ok) = (0, 0);
    let mut failures = Vec::new();
    while tried < 20 {
        let np = r.gen_range(1..=3);
        let plant = random_plant(&mut r, np, 1);
        let (ad, bd) = plant.discretize().unwrap();
        if !check_stabilizable(&ad, &bd).unwrap() {
            continue;
        }
        tried += 1;
        let ctx = SynthesisContext::new(&plant).unwrap();
        match initial_design(&ctx, &settings) {
            Ok(init) => {
                let rep = check_theorem1(&init.vars, &ctx, THEOREM_MARGIN).unwrap();
                if rep.passed() {
                    ok += 1;
                } else {
                    failures.push(format!("#{tried}: lambda_max(M) = {:.2e}", rep.m_lambda_max));
                }
            }
            Err(e) => failures.push(format!("#{tried}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    outcome(
        ok == 20 && within(elapsed, 120.0),
        format!("{ok}/20 instances certified, {:.2} s {}", elapsed.as_secs_f64(), failures.join("; ")),
    )
}

fn mixed_tuples(seed: u64, count: usize, certified: &[CertificateVars]) -> Vec<(SynthesisContext, CertificateVars)> {
    let mut r = rng(seed);
    let ctx = oscillator();
    let scales = [1e-4, 1e-3, 1e-2, 1e-1];
    (0..count)
        .map(|i| {
            if i % 3 == 0 || certified.is_empty() {
                let c = SynthesisContext::new(&random_plant(&mut r, 1 + i % 3, 1)).unwrap();
                let v = random_vars(&mut r, &c);
                (c, v)
            } else {
                let v = perturb(&mut r, &certified[i % certified.len()], scales[(i / 3) % 4]);
                (ctx.clone(), v)
            }
        })
        .collect()
}

fn criterion6(certified: &[CertificateVars]) -> Outcome {
    let (mut compared, mut agree) = (0, 0);
    let mut tuples = 0;
    for (ctx, v) in mixed_tuples(606, 100, certified) {
        if linalg::lambda_min(&v.p) <= 0.0 {
            continue;
        }
        tuples += 1;
        let a = lmax(&assemble_m(&v, &ctx).unwrap());
        let b = lmax(&assemble_mi2(&v, &ctx).unwrap());
        if a.abs() > 1e-6 && b.abs() > 1e-6 {
            compared += 1;
            agree += usize::from((a < 0.0) == (b < 0.0));
        }
    }
    outcome(compared == agree && compared > 0, format!("{agree}/{compared} agree ({tuples} tuples with P > 0)"))
}

fn criterion7(certified: &[CertificateVars]) -> Outcome {
    let mut r = rng(707);
    let mut worst_identity: f64 = 0.0;
    for i in 0..20 {
        let ctx = SynthesisContext::new(&random_plant(&mut r, 1 + i % 3, 1 + i % 2)).unwrap();
        let v = random_vars(&mut r, &ctx);
        let dec = ccp_decompose(&ctx, &Mi2Operands::constant(&v)).unwrap();
        let (l, x, y) = (dec.l.value(&[]).unwrap(), dec.x.value(&[]).unwrap(), dec.y.value(&[]).unwrap());
        let xty = &x.transpose() * &y;
        let rebuilt = &(&l + &xty) + &xty.transpose();
        let mi2 = assemble_mi2(&v, &ctx).unwrap().to_matrix();
        worst_identity = worst_identity.max(rebuilt.max_abs_diff(&mi2) / (1.0 + mi2.max_abs()));
    }
    let (mut compared, mut agree) = (0, 0);
    for (ctx, v) in mixed_tuples(708, 40, certified).into_iter().filter(|(_, v)| linalg::lambda_min(&v.p) > 0.0).take(20) {
        let dec = ccp_decompose(&ctx, &Mi2Operands::constant(&v)).unwrap();
        let (l, x, y) = (dec.l.value(&[]).unwrap(), dec.x.value(&[]).unwrap(), dec.y.value(&[]).unwrap());
        let w = Matrix::from_blocks(&[&[&x.transpose(), &y.transpose()]]).unwrap();
        let m = w.cols();
        let lifted = Matrix::from_blocks(&[
            &[&(&l + &concave_part(&x, &y)), &w],
            &[&w.transpose(), &Matrix::identity(m).scale(-1.0)],
        ])
        .unwrap();
        let a = lmax(&sym(&lifted));
        let b = lmax(&assemble_mi2(&v, &ctx).unwrap());
        if a.abs() > 1e-6 && b.abs() > 1e-6 {
            compared += 1;
            agree += usize::from((a < 0.0) == (b < 0.0));
        }
    }
    outcome(
        worst_identity <= 1e-12 && agree == compared && compared > 0,
        format!("identity error {worst_identity:.2e}, lifted form agrees {agree}/{compared}"),
    )
}

fn criterion8() -> Outcome {
    let mut r = rng(808);
    let mut violations = 0usize;
    for _ in 0..10_000 {
        let m = r.gen_range(1..=3);
        let u: Vec<f64> = (0..m)
            .map(|_| if r.gen_bool(0.2) { f64::from(r.gen_range(-20i32..20)) } else { r.gen_range(-50.0..50.0) })
            .collect();
        let d: Vec<f64> = (0..m).map(|_| if r.gen_bool(0.2) { 1.0 } else { r.gen_range(0.05..3.0) }).collect();
        let q = quantize(&u, &d).unwrap();
        let e = psi(&u, &d).unwrap();
        for i in 0..m {
            let ratio = q[i] / d[i];
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.abs().max(1.0) || e[i].abs() > d[i] {
                violations += 1;
            }
        }
        let mult: Vec<(Vec<f64>, Vec<f64>)> = (0..10)
            .map(|_| ((0..m).map(|_| r.gen_range(0.01..10.0)).collect(), (0..m).map(|_| r.gen_range(0.01..10.0)).collect()))
            .collect();
        for v in psi_kras(&u, &d).unwrap().selections() {
            if v.iter().zip(&d).any(|(vi, di)| vi.abs() > *di) {
                violations += 1;
            }
            for (s1, s2) in &mult {
                let c = sector_check(&u, &v, s1, s2, &d).unwrap();
                violations += usize::from(!c.holds1) + usize::from(!c.holds2);
            }
        }
    }
    outcome(violations == 0, format!("{violations} violations over 10000 samples"))
}

fn criterion9() -> Outcome {
    let mut r = rng(909);
    let mut expm_err: f64 = 0.0;
    for _ in 0..100 {
        let a = random_matrix(&mut r, 4, 4, 1.0);
        let a = a.scale(2.0 / a.norm_1().max(1e-12) * 0.999);
        let want = expm_taylor(&a);
        expm_err = expm_err.max(expm(&a).unwrap().max_abs_diff(&want) / want.max_abs().max(1.0));
    }
    let mut disc_err: f64 = 0.0;
    for _ in 0..20 {
        let a = random_matrix(&mut r, 3, 3, 2.0);
        let b = random_matrix(&mut r, 3, 1, 2.0);
        let t = r.gen_range(0.1..1.0);
        let (_, bd) = discretize(&a, &b, t).unwrap();
        let bq = input_integral(&a, &b, t, 800);
        disc_err = disc_err.max(bd.max_abs_diff(&bq) / bq.max_abs().max(1.0));
    }
    let mut sim_err: f64 = 0.0;
    for case in 0..10 {
        let p = random_plant(&mut r, 1 + case % 3, 1);
        let n = p.n();
        let k = random_matrix(&mut r, 1, n, 1.0);
        let x0: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let h = Horizon { t_max: 3.0 * p.period(), j_max: usize::MAX, samples_per_period: 7 };
        let arc = simulate(&p, &k, &HybridState::new(x0, 0.0), &h).unwrap();
        let a_cl = build_closed_loop(&p).a_cl;
        for seg in &arc.segments {
            let start = &seg.samples[0].state.xi;
            for s in &seg.samples[1..] {
                let want = rk45_linear(&a_cl, start, s.t - seg.t_start, 1e-11, 1e-12);
                sim_err = sim_err.max(max_rel_diff(&s.state.xi, &want));
            }
        }
    }
    let a_cl = build_closed_loop(&PlantSpec::oscillator_example()).a_cl;
    let refined = varpi(&a_cl, 0.5, 200).unwrap();
    let grid = (0..10_000)
        .map(|i| {
            let e = expm_taylor(&a_cl.scale(0.5 * i as f64 / 9_999.0));
            linalg::lambda_min(&sym(&(&e.transpose() * &e)))
        })
        .fold(f64::INFINITY, f64::min);
    let varpi_err = (refined - grid).abs();
    outcome(
        expm_err <= 1e-9 && disc_err <= 1e-8 && sim_err <= 1e-6 && varpi_err <= 1e-6,
        format!("expm {expm_err:.2e}, discretize {disc_err:.2e}, simulate {sim_err:.2e}, varpi {varpi_err:.2e}"),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "printed (K, P) certified by found multipliers", criterion1()));
    let (c2, c3, synthesized) = criterion2_and_3();
    results.push((2, "synthesis converges with c in [0.39, 0.55]", c2));
    results.push((3, "every iterate keeps the three-block margin", c3));
    results.push((4, "reference trajectory enters and stays in L_V(1), arc certified", criterion4(synthesized.as_ref())));
    results.push((5, "initial design on 20 random stabilizable plants", criterion5()));
    let mut certified = Vec::new();
    if let Some(r) = &synthesized {
        certified.push(r.vars.clone());
    }
    if let Ok((v, _)) = verify_gain(&printed_gain(), &oscillator(), &SynthesisSettings::default()) {
        certified.push(v);
    }
    results.push((6, "two-block and three-block definiteness agree", criterion6(&certified)));
    results.push((7, "decomposition identity and lifted form", criterion7(&certified)));
    results.push((8, "quantizer and sector properties", criterion8()));
    results.push((9, "kernel oracles", criterion9()));

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {n}: {name} ({})", o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
