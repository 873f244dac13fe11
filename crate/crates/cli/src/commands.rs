use std::path::Path;

use mws_core::chaos::{bs_norm_sq, BsNormCurve, ChaosProfile, TailModel};
use mws_core::fractional::{
    rl_derivative_monomial, rl_derivative_quadrature, rl_integral_monomial, rl_integral_quadrature,
};
use mws_core::gaussian_mc::{mc_bs_norm, mc_monomial_moment, sample_nu, STransform, GENERATOR};
use mws_core::models::donsker::{
    donsker_bs_norm, donsker_chaos_profile, donsker_reduced_integral, DonskerEvaluator, DonskerSpec,
};
use mws_core::models::gauss_kernel::{gk_bs_norm, gk_l2_check, gk_regularity, GaussKernelEvaluator, GaussKernelSpec};
use mws_core::models::silt::{silt_d12_criterion, silt_l2_criterion, FbmParams, SiltCriterion};
use mws_core::models::ModelError;
use mws_core::quadrature::{SimplexMesh, TubeExclusion};
use mws_core::regularity::{
    alpha_threshold, classify as classify_profile, criterion_sum_numeric, membership, parse_grid, RegularityError,
};
use mws_core::Extended;
use num_complex::Complex64;
use serde::de::DeserializeOwned;

use crate::table::{ext, num, Table};
use crate::{Evaluator, Failure, Report};

const MODEL_HEADER: [&str; 7] = ["model", "parameters", "quantity", "argument", "value", "error_bound", "verdict"];

/// Largest `|B(1)²·det - 1|` accepted for a Gauss kernel.
const GK_IDENTITY_TOL: f64 = 1e-10;

fn read_json<T: DeserializeOwned>(path: Option<&Path>) -> Result<T, Failure> {
    let path = path.ok_or_else(|| Failure::Input("--input is required".into()))?;
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| Failure::Input(format!("not a number: {p:?}")))).collect()
}

fn grid(spec: &str) -> Result<Vec<f64>, Failure> {
    parse_grid(spec).map_err(|e| Failure::Input(e.to_string()))
}

fn reg_err(e: RegularityError) -> Failure {
    match e {
        RegularityError::RouteDisagreement { .. } => Failure::Consistency(e.to_string()),
        other => Failure::Input(other.to_string()),
    }
}

fn model_err(e: ModelError) -> Failure {
    Failure::Input(e.to_string())
}

pub fn classify(input: Option<&Path>, alphas: &str) -> Result<Report, Failure> {
    let profile: ChaosProfile<f64> = read_json(input)?;
    let alphas = parse_list(alphas)?;
    let verdict = classify_profile(&profile, &alphas).map_err(reg_err)?;
    let mut body = serde_json::to_string_pretty(&verdict).expect("verdict serializes");
    body.push('\n');
    Ok(Report::ok(body))
}

pub fn curve(input: Option<&Path>, grid_spec: &str, betas: Option<&str>, tol: f64) -> Result<Report, Failure> {
    let profile: ChaosProfile<f64> = read_json(input)?;
    let lambdas = grid(grid_spec)?;
    if let Some(bad) = lambdas.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
        return Err(Failure::Input(format!("grid point {bad} outside (0, 1)")));
    }
    let betas = betas.map(parse_list).transpose()?.unwrap_or_default();
    let curve = BsNormCurve::tabulate(profile, &lambdas).map_err(|e| Failure::Input(e.to_string()))?;
    let columns = betas
        .iter()
        .map(|&b| criterion_sum_numeric(curve.profile(), b, &lambdas, tol).map_err(reg_err))
        .collect::<Result<Vec<_>, _>>()?;
    let mut header = vec!["lambda".to_string(), "B".to_string()];
    header.extend(betas.iter().map(|b| format!("beta={b}")));
    let mut t = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (i, p) in curve.points().iter().enumerate() {
        let mut row = vec![num(p.lambda), ext(p.value)];
        row.extend(columns.iter().map(|c| ext(c[i].value)));
        t.row(row);
    }
    Ok(Report::ok(t.finish()))
}

pub struct McConfig {
    pub seed: u64,
    pub samples: usize,
    pub max_order: u32,
    pub grid: String,
    pub z_max: f64,
}

pub fn mc_verify(input: Option<&Path>, evaluator: Evaluator, cfg: &McConfig) -> Result<Report, Failure> {
    let mut failures = Vec::new();
    let mut rows: Vec<[String; 7]> = Vec::new();
    let mut check = |quantity: String, lambda: String, est: Complex64, se: f64, target: f64, z: f64| {
        if !(z <= cfg.z_max) {
            failures.push(format!("{quantity} at {lambda}: z = {z:.3}"));
        }
        rows.push([quantity, lambda, num(est.re), num(est.im), num(target), num(se), num(z)]);
    };
    let (name, dim) = match evaluator {
        Evaluator::Monomials => {
            let batch = sample_nu(1, cfg.samples, cfg.seed).map_err(|e| Failure::Input(e.to_string()))?;
            let mut fact = 1.0;
            for n in 0..=cfg.max_order {
                if n > 0 {
                    fact *= n as f64;
                }
                for m in 0..=cfg.max_order {
                    let est = mc_monomial_moment(n, m, &batch);
                    let target = if n == m { fact } else { 0.0 };
                    let z = est.z_score(Complex64::new(target, 0.0));
                    check(format!("moment({n},{m})"), String::new(), est.value, est.se, target, z);
                }
            }
            ("monomials".to_string(), 1)
        }
        _ => {
            let lambdas = grid(&cfg.grid)?;
            let (eval, target): (Box<dyn STransform>, Box<dyn Fn(f64) -> Result<f64, Failure>>) = match evaluator {
                Evaluator::Polynomial => {
                    let profile: ChaosProfile<f64> = read_json(input)?;
                    if *profile.tail() != TailModel::FiniteSupport {
                        return Err(Failure::Input("the polynomial evaluator needs a finite profile".into()));
                    }
                    let poly = mws_core::gaussian_mc::RankOnePolynomial::from_coefficients(profile.head())
                        .map_err(|e| Failure::Input(e.to_string()))?;
                    let t = move |l: f64| {
                        bs_norm_sq(&profile, l).map_err(|e| Failure::Input(e.to_string())).map(|v| v.value.to_float())
                    };
                    (Box::new(poly), Box::new(t))
                }
                Evaluator::Donsker => {
                    let spec: DonskerSpec<f64> = read_json(input)?;
                    let t = {
                        let spec = spec.clone();
                        move |l: f64| donsker_bs_norm(&spec, l).map_err(model_err)
                    };
                    (Box::new(DonskerEvaluator::new(spec)), Box::new(t))
                }
                Evaluator::GaussKernel => {
                    let spec: GaussKernelSpec<f64> = read_json(input)?;
                    spec.validate().map_err(model_err)?;
                    let dim = spec.kappas().len();
                    let eval = GaussKernelEvaluator::new(&spec, dim);
                    let t = move |l: f64| gk_bs_norm(&spec, l).map_err(model_err).map(|v| v.to_float());
                    (Box::new(eval), Box::new(t))
                }
                Evaluator::Monomials => unreachable!(),
            };
            let batch = sample_nu(eval.dim(), cfg.samples, cfg.seed).map_err(|e| Failure::Input(e.to_string()))?;
            for &l in &lambdas {
                let est = mc_bs_norm(eval.as_ref(), l, &batch).map_err(|e| Failure::Input(e.to_string()))?;
                let target = target(l)?;
                let z = est.z_score(target);
                check("bs_norm".into(), num(l), Complex64::new(est.value, 0.0), est.se, target, z);
            }
            (eval.name(), eval.dim())
        }
    };
    let mut t =
        Table::new(&["quantity", "lambda", "estimate_re", "estimate_im", "target", "standard_error", "z_score"]);
    t.meta("evaluator", name);
    t.meta("seed", cfg.seed);
    t.meta("generator", GENERATOR);
    t.meta("samples", cfg.samples);
    t.meta("dim", dim);
    t.meta("max_z", cfg.z_max);
    for r in rows {
        t.row(r);
    }
    Ok(Report { body: t.finish(), failures })
}

pub fn donsker(
    input: Option<&Path>,
    grid_spec: &str,
    tol: f64,
    terms: usize,
    profile_out: Option<&Path>,
) -> Result<Report, Failure> {
    let spec: DonskerSpec<f64> = read_json(input)?;
    let lambdas = grid(grid_spec)?;
    let mut failures = Vec::new();
    let params =
        format!("d={};norms={}", spec.d, spec.norms.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "));
    let profile = donsker_chaos_profile(&spec, terms).map_err(model_err)?;
    if let Some(path) = profile_out {
        let json = serde_json::to_string_pretty(&profile).expect("profile serializes");
        std::fs::write(path, json + "\n")
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    let mut t = Table::new(&MODEL_HEADER);
    let row = |t: &mut Table, q: &str, arg: String, v: String, e: String, verdict: &str| {
        t.row(["donsker", params.as_str(), q, arg.as_str(), v.as_str(), e.as_str(), verdict]);
    };
    let expected = -0.5 * spec.d as f64;
    let star = alpha_threshold(&profile);
    if star != Extended::Finite(expected) {
        failures.push(format!("alpha_star = {star}, expected {expected}"));
    }
    row(&mut t, "alpha_star", String::new(), ext(star), num(0.0), "member iff alpha < alpha_star");
    for alpha in [expected - 0.1, expected + 0.1] {
        let m = membership(&profile, alpha).map_err(reg_err)?;
        let d = serde_json::to_value(m.decision).expect("decision serializes");
        row(&mut t, "membership", num(alpha), ext(m.criterion_sum), num(0.0), d.as_str().unwrap_or_default());
    }
    for &l in &lambdas {
        let closed = donsker_bs_norm(&spec, l).map_err(model_err)?;
        let q = donsker_reduced_integral(l, tol * 1e-2).map_err(model_err)?;
        let c = spec.ln_constant().exp();
        let quad = c * q.value.powi(spec.d as i32);
        let rel = (quad - closed).abs() / closed;
        let verdict = if rel <= tol { "agree" } else { "disagree" };
        if rel > tol {
            failures.push(format!("B({l}): closed form {closed} vs quadrature {quad}"));
        }
        row(&mut t, "bs_norm", num(l), num(closed), num((quad - closed).abs()), verdict);
    }
    Ok(Report { body: t.finish(), failures })
}

fn silt_verdict(c: &SiltCriterion<f64>, rel: f64) -> &'static str {
    if c.is_finite_and_stable(rel) {
        "finite"
    } else if c.divergence.is_some() {
        "divergent"
    } else {
        "unstable"
    }
}

pub fn silt(input: Option<&Path>, mesh: &str, rel: f64) -> Result<Report, Failure> {
    let params: FbmParams<f64> = read_json(input)?;
    params.validate().map_err(model_err)?;
    let mesh = SimplexMesh::parse(mesh).map_err(|e| Failure::Input(e.to_string()))?;
    let l2 = silt_l2_criterion(&params, &mesh).map_err(model_err)?;
    let d12 = silt_d12_criterion(&params, &mesh).map_err(model_err)?;
    let echo = format!("H={};T={}", params.hurst, params.horizon);
    let mut t = Table::new(&MODEL_HEADER);
    let tube = TubeExclusion::<f64>::default();
    t.meta("mesh", mesh);
    t.meta("refined_mesh", mesh.refined());
    t.meta("tube_radii", tube.eps.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" "));
    for (name, c) in [("l2", &l2), ("d12", &d12)] {
        if let Some(why) = &c.divergence {
            t.meta(&format!("{name}_divergence"), why);
        }
    }
    for (name, c) in [("l2_criterion", &l2), ("d12_criterion", &d12)] {
        let v = silt_verdict(c, rel);
        t.row(["silt", echo.as_str(), name, "", num(c.value).as_str(), num(c.error_bound).as_str(), v]);
        let change = format!("{name}_relative_change");
        t.row(["silt", echo.as_str(), change.as_str(), "", num(c.relative_change).as_str(), "", v]);
    }
    let ok = l2.is_finite_and_stable(rel) && d12.is_finite_and_stable(rel);
    let verdict = if ok { "D^{1,2}: satisfied" } else { "D^{1,2}: not established" };
    t.row(["silt", echo.as_str(), "malliavin_differentiable", "", "", "", verdict]);
    Ok(Report::ok(t.finish()))
}

pub fn gauss_kernel(input: Option<&Path>, alphas: &str, grid_spec: &str, tol: f64) -> Result<Report, Failure> {
    let spec: GaussKernelSpec<f64> = read_json(input)?;
    spec.validate().map_err(model_err)?;
    let alphas = parse_list(alphas)?;
    let lambdas = grid(grid_spec)?;
    let echo = {
        let head = spec.eigs_head.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ");
        match spec.eigs_tail {
            Some(tl) => format!("eigs_head={head};tail_c={};tail_r={}", tl.c, tl.r),
            None => format!("eigs_head={head}"),
        }
    };
    let mut failures = Vec::new();
    let l2 = gk_l2_check(&spec).map_err(model_err)?;
    if !(l2.identity_residual <= GK_IDENTITY_TOL) {
        failures.push(format!("B(1)^2 det - 1 = {}", l2.identity_residual));
    }
    let mut t = Table::new(&MODEL_HEADER);
    let member = if l2.member { "L2 member" } else { "not in L2" };
    let id = if l2.identity_residual <= GK_IDENTITY_TOL { "identity holds" } else { "identity fails" };
    t.row(["gauss-kernel", echo.as_str(), "det", "", num(l2.det).as_str(), "", member]);
    t.row(["gauss-kernel", echo.as_str(), "bs_norm", num(1.0).as_str(), ext(l2.norm_at_one).as_str(), "", member]);
    t.row(["gauss-kernel", echo.as_str(), "identity_residual", "", num(l2.identity_residual).as_str(), "", id]);
    for &alpha in &alphas {
        let r = gk_regularity(&spec, alpha, &lambdas, tol).map_err(model_err)?;
        let verdict = if r.bounded { "bounded: member" } else { "unbounded: undecided" };
        t.row([
            "gauss-kernel",
            echo.as_str(),
            "regularity",
            num(alpha).as_str(),
            num(r.sup_estimate).as_str(),
            num(r.relative_gap).as_str(),
            verdict,
        ]);
    }
    Ok(Report { body: t.finish(), failures })
}

/// Orders and points of the fractional-calculus oracle suite.
pub const ORACLE_ORDERS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];
pub const ORACLE_POINTS: [f64; 3] = [0.3, 0.7, 1.0];
pub const ORACLE_MAX_DEGREE: usize = 10;

pub fn oracle(tol: f64) -> Result<Report, Failure> {
    if !(tol > 0.0) {
        return Err(Failure::Input("--tol must be positive".into()));
    }
    let quad_tol = tol * 1e-3;
    let mut failures = Vec::new();
    let mut t = Table::new(&["operator", "n", "alpha", "x", "quadrature", "closed_form", "relative_error"]);
    t.meta("tolerance", tol);
    let frac = |e: mws_core::fractional::FracError| Failure::Consistency(e.to_string());
    for n in 0..=ORACLE_MAX_DEGREE {
        for &alpha in &ORACLE_ORDERS {
            for &x in &ORACLE_POINTS {
                // Integrate (t/x)^n so that every value is of order one.
                let scale = x.powi(n as i32);
                let f = move |s: f64| (s / x).powi(n as i32);
                let df = move |s: f64| if n == 0 { 0.0 } else { n as f64 * (s / x).powi(n as i32 - 1) / x };
                let cases = [
                    (
                        "integral",
                        scale * rl_integral_quadrature(f, alpha, x, quad_tol).map_err(frac)?.value,
                        rl_integral_monomial(n, alpha).map_err(frac)? * x.powf(n as f64 + alpha),
                    ),
                    (
                        "derivative",
                        scale * rl_derivative_quadrature(f, Some(&df), alpha, x, quad_tol).map_err(frac)?.value,
                        rl_derivative_monomial(n, alpha).map_err(frac)? * x.powf(n as f64 - alpha),
                    ),
                ];
                for (op, q, c) in cases {
                    let rel = (q - c).abs() / c.abs();
                    if !(rel <= tol) {
                        failures.push(format!("{op} n={n} alpha={alpha} x={x}: relative error {rel:e}"));
                    }
                    t.row([op.to_string(), n.to_string(), num(alpha), num(x), num(q), num(c), num(rel)]);
                }
            }
        }
    }
    Ok(Report { body: t.finish(), failures })
}
