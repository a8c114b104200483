use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qsdc_core::hybrid::{
    attractor_boundary, attractor_outer_radius, lyapunov_value, simulate, varpi, LyapunovDesign,
};
use qsdc_core::linalg;
use qsdc_core::sdp::SolveStatus;
use qsdc_core::synthesis::{
    assemble_m, check_theorem1, multiplier_search, run_algorithm1, sigma_star, verify_gain, CertificateVars,
    SynthesisContext, SynthesisSettings, SynthesisStatus,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::design::DesignFile;
use crate::error::CliError;

/// Clock grid used for `ϖ` and the attractor boundary.
pub const VARPI_GRID: usize = 200;
pub const DEFAULT_ANGLES: usize = 360;

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Fixed 17-significant-digit formatting used in every CSV.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn synthesize(config: &Path, out: &Path) -> Result<i32, CliError> {
    let cfg = RunConfig::load(config)?;
    let ctx = SynthesisContext::new(&cfg.plant_spec()?)?;
    let result = run_algorithm1(&ctx, &cfg.synthesis_settings())?;
    write_text(out, &to_json(&DesignFile::from_result(&result))?)?;
    if result.status == SynthesisStatus::SolverFailure {
        return Err(CliError::Solver(format!(
            "a subproblem failed after {} iterates; best design written to {}",
            result.iterations,
            out.display()
        )));
    }
    Ok(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierReport {
    #[serde(rename = "S1")]
    pub s1: Vec<f64>,
    #[serde(rename = "S2")]
    pub s2: Vec<f64>,
    pub rho: f64,
    /// Negativity margin of the three-block matrix at the found multipliers.
    pub margin: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    /// `certificate`, `multipliers` or `gain`, depending on what was searched.
    pub mode: String,
    pub passed: bool,
    /// `ΔᵀS₁Δ − ϱ`.
    pub trace_value: f64,
    pub trace_ok: bool,
    pub m_lambda_max: f64,
    pub m_ok: bool,
    pub mi2_lambda_max: f64,
    pub p_lambda_min: f64,
    pub sigma_star: Option<f64>,
    pub multiplier_search: Option<MultiplierReport>,
    /// The certificate that was checked.
    pub certificate: DesignFile,
}

fn status_label(s: SolveStatus) -> String {
    format!("{s:?}").to_lowercase()
}

pub fn verify_report(design: &DesignFile, cfg: &RunConfig, gain_only: bool) -> Result<VerifyReport, CliError> {
    let ctx = SynthesisContext::new(&cfg.plant_spec()?)?;
    let settings = cfg.synthesis_settings();
    let k = design.gain()?;
    let full = if gain_only { None } else { design.certificate()? };
    let p = if gain_only { None } else { design.lyapunov_matrix()? };
    let (mode, vars, search) = match (full, p) {
        (Some(vars), _) => ("certificate", vars, None),
        (None, Some(p)) => {
            let s = multiplier_search(&p, &k, &ctx, &settings)?;
            let vars = CertificateVars { p, k, s1: s.s1.clone(), s2: s.s2.clone(), rho: s.rho };
            let rep = MultiplierReport { s1: s.s1, s2: s.s2, rho: s.rho, margin: s.margin, status: status_label(s.status) };
            ("multipliers", vars, Some(rep))
        }
        (None, None) => {
            let (vars, margin) = verify_gain(&k, &ctx, &settings)?;
            let rep = MultiplierReport {
                s1: vars.s1.clone(),
                s2: vars.s2.clone(),
                rho: vars.rho,
                margin,
                status: if margin > 0.0 { "feasible" } else { "infeasible" }.into(),
            };
            ("gain", vars, Some(rep))
        }
    };
    report_for(mode, &vars, &ctx, &settings, search)
}

fn report_for(
    mode: &str,
    vars: &CertificateVars,
    ctx: &SynthesisContext,
    settings: &SynthesisSettings,
    search: Option<MultiplierReport>,
) -> Result<VerifyReport, CliError> {
    vars.check_shapes(ctx)?;
    let r = check_theorem1(vars, ctx, settings.theorem_margin)?;
    let search_ok = search.as_ref().is_none_or(|s| s.margin > 0.0);
    let passed = r.passed() && search_ok && vars.validate(ctx).is_ok();
    let sigma = if r.m_lambda_max < 0.0 && r.p_lambda_min > 0.0 {
        let m = assemble_m(vars, ctx)?;
        Some(sigma_star(&vars.p, &m, ctx.plant().period(), settings.sigma_safety, settings.sigma_cap)?)
    } else {
        None
    };
    Ok(VerifyReport {
        mode: mode.into(),
        passed,
        trace_value: r.trace_value,
        trace_ok: r.trace_ok,
        m_lambda_max: r.m_lambda_max,
        m_ok: r.m_ok,
        mi2_lambda_max: r.mi2_lambda_max,
        p_lambda_min: r.p_lambda_min,
        sigma_star: sigma,
        multiplier_search: search,
        certificate: DesignFile::from_vars(vars, sigma),
    })
}

pub fn verify(design: &Path, config: &Path, gain_only: bool, out: Option<&PathBuf>) -> Result<i32, CliError> {
    let cfg = RunConfig::load(config)?;
    let d = DesignFile::load(design)?;
    let report = verify_report(&d, &cfg, gain_only)?;
    let text = to_json(&report)?;
    match out {
        Some(path) => write_text(path, &text)?,
        None => print!("{text}"),
    }
    if report.passed {
        Ok(0)
    } else {
        Err(CliError::Infeasible(format!(
            "certificate check failed: trace {:e}, λ_max(M) {:e}",
            report.trace_value, report.m_lambda_max
        )))
    }
}

/// `V` for a design file: `P` is required; σ comes from the file, else from
/// the certificate, else zero.
pub fn lyapunov_design(d: &DesignFile, cfg: &RunConfig) -> Result<LyapunovDesign, CliError> {
    let plant = cfg.plant_spec()?;
    let p = d
        .lyapunov_matrix()?
        .ok_or_else(|| CliError::Parse("design: P is required; run verify to obtain one".into()))?;
    let sigma = match (d.sigma_star, d.certificate()?) {
        (Some(s), _) => s,
        (None, Some(vars)) => {
            let ctx = SynthesisContext::new(&plant)?;
            let m = assemble_m(&vars, &ctx)?;
            let a = &cfg.algorithm;
            sigma_star(&vars.p, &m, plant.period(), a.sigma_safety, a.sigma_cap).unwrap_or(0.0)
        }
        (None, None) => 0.0,
    };
    Ok(LyapunovDesign::new(p, sigma, &plant)?)
}

pub fn simulation_csv(d: &DesignFile, cfg: &RunConfig) -> Result<String, CliError> {
    let plant = cfg.plant_spec()?;
    let design = lyapunov_design(d, cfg)?;
    let arc = simulate(&plant, &d.gain()?, &cfg.initial_state(), &cfg.horizon())?;
    let mut csv = String::from("t,j,tau");
    for i in 1..=plant.n() {
        let _ = write!(csv, ",xi_{i}");
    }
    csv.push_str(",V,in_attractor\n");
    for s in arc.samples() {
        let v = lyapunov_value(&design, &s.state)?;
        let _ = write!(csv, "{},{},{}", fmt_f64(s.t), s.j, fmt_f64(s.state.tau));
        for x in &s.state.xi {
            let _ = write!(csv, ",{}", fmt_f64(*x));
        }
        let _ = writeln!(csv, ",{},{}", fmt_f64(v), u8::from(v <= LyapunovDesign::MU));
    }
    Ok(csv)
}

pub fn simulate_cmd(design: &Path, config: &Path, out: &Path) -> Result<i32, CliError> {
    let cfg = RunConfig::load(config)?;
    let d = DesignFile::load(design)?;
    write_text(out, &simulation_csv(&d, &cfg)?)?;
    Ok(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorSummary {
    pub varpi: f64,
    pub lambda_min_p: f64,
    pub outer_radius: f64,
    pub samples: usize,
    pub max_boundary_radius: f64,
}

pub fn attractor_data(d: &DesignFile, cfg: &RunConfig, angles: usize) -> Result<(AttractorSummary, String), CliError> {
    let design = lyapunov_design(d, cfg)?;
    let w = varpi(&design.a_cl, design.period, VARPI_GRID)?;
    let radius = attractor_outer_radius(&design.p, w)?;
    let boundary = attractor_boundary(&design, angles, VARPI_GRID)?;
    let mut csv = String::from("angle,radius,x,y\n");
    for b in &boundary {
        let _ = writeln!(csv, "{},{},{},{}", fmt_f64(b.angle), fmt_f64(b.radius), fmt_f64(b.x), fmt_f64(b.y));
    }
    let summary = AttractorSummary {
        varpi: w,
        lambda_min_p: linalg::lambda_min(&design.p),
        outer_radius: radius,
        samples: boundary.len(),
        max_boundary_radius: boundary.iter().map(|b| b.radius).fold(0.0, f64::max),
    };
    Ok((summary, csv))
}

pub fn attractor_cmd(design: &Path, config: &Path, out: &Path, grid: Option<usize>) -> Result<i32, CliError> {
    let cfg = RunConfig::load(config)?;
    let d = DesignFile::load(design)?;
    let angles = grid.unwrap_or(DEFAULT_ANGLES);
    if angles == 0 {
        return Err(CliError::Parse("--grid must be positive".into()));
    }
    let (summary, csv) = attractor_data(&d, &cfg, angles)?;
    write_text(out, &csv)?;
    print!("{}", to_json(&summary)?);
    Ok(0)
}
