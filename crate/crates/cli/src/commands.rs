//! One function per subcommand. Randomness is drawn from per-command
//! streams of the configured seed, so a report depends only on its inputs.

use std::path::Path;

use blepi_core::closed_forms::{self, Section6Params};
use blepi_core::datum::{self, BlepDatum};
use blepi_core::estimate::{self, SampleModel};
use blepi_core::finiteness::{self, Verdict};
use blepi_core::gauss;
use blepi_core::rng::task_rng;
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::format::{self, DatumFile};
use crate::report::{self, num, sig12};
use crate::{exit, CliError, Outcome, OutputFormat, RunConfig};

const STREAM_CHECK: u64 = 1;
const STREAM_VERIFY: u64 = 2;
const STREAM_CERTIFY: u64 = 3;

fn render(cfg: &RunConfig, v: &Value) -> String {
    match cfg.format {
        OutputFormat::Json => report::to_json(v),
        OutputFormat::Csv => report::flat_csv(v),
    }
}

fn load_valid(path: &Path) -> Result<BlepDatum, CliError> {
    let datum = format::load_datum(path)?;
    let report = datum.validate();
    if !report.ok() {
        let issues: Vec<String> = report
            .issues
            .iter()
            .map(|i| format!("{} at {}: {}", i.code.as_str(), i.location, i.message))
            .collect();
        return Err(CliError::Invalid(issues.join("; ")));
    }
    Ok(datum)
}

pub fn validate(path: &Path, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let datum = format::load_datum(path)?;
    let rep = datum.validate();
    let body = match cfg.format {
        OutputFormat::Json => report::to_json(&report::validation(&rep)),
        OutputFormat::Csv => report::to_csv(
            &["code", "location", "message"],
            &rep.issues
                .iter()
                .map(|i| vec![json!(i.code.as_str()), json!(i.location.to_string()), json!(i.message)])
                .collect::<Vec<_>>(),
        ),
    };
    Ok(Outcome {
        code: if rep.ok() { exit::OK } else { exit::INVALID },
        body,
    })
}

pub fn check(path: &Path, cfg: &RunConfig, certify: bool) -> Result<Outcome, CliError> {
    let datum = load_valid(path)?;
    let opts = finiteness::FinitenessOptions {
        budget: cfg.budget,
        solver: cfg.solver,
        ..Default::default()
    };
    let mut verdict = finiteness::check_finiteness_with(&datum, &opts, &mut task_rng(cfg.seed, STREAM_CHECK))?;
    if certify && verdict.status == Verdict::Finite {
        let tree = finiteness::certify_unchecked(&datum, &cfg.budget, &mut task_rng(cfg.seed, STREAM_CERTIFY))?;
        verdict.certificate = Some(tree);
    }
    let code = match verdict.status {
        Verdict::Finite => exit::OK,
        Verdict::Infinite => exit::INFINITE,
        Verdict::Unknown => exit::UNKNOWN,
    };
    let mut v = report::verdict(&verdict, cfg.unit_scale());
    v["units"] = json!(cfg.unit_name());
    Ok(Outcome {
        code,
        body: render(cfg, &v),
    })
}

pub fn solve(path: &Path, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let datum = load_valid(path)?;
    let res = gauss::solve_mg(&datum, &cfg.solver)?;
    let mut v = report::solve(&res, cfg.unit_scale());
    v["units"] = json!(cfg.unit_name());
    Ok(Outcome {
        code: if res.unbounded { exit::UNBOUNDED } else { exit::OK },
        body: render(cfg, &v),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gaussian,
    Uniform,
    Laplace,
    Mixture,
}

impl ModelKind {
    pub fn build(self, datum: &BlepDatum) -> SampleModel {
        let p = &datum.partition;
        match self {
            ModelKind::Gaussian => SampleModel::gaussian(p),
            ModelKind::Uniform => SampleModel::uniform(p),
            ModelKind::Laplace => SampleModel::laplace(p),
            ModelKind::Mixture => SampleModel::mixture(p),
        }
    }
}

pub fn verify(
    path: &Path,
    cfg: &RunConfig,
    models: &[ModelKind],
    mg_override: Option<f64>,
) -> Result<Outcome, CliError> {
    let datum = load_valid(path)?;
    let scale = cfg.unit_scale();
    let (mg, converged) = match mg_override {
        Some(mg) => (mg, None),
        None => {
            let res = gauss::solve_mg(&datum, &cfg.solver)?;
            if res.unbounded {
                let v = json!({
                    "units": cfg.unit_name(),
                    "solve": report::solve(&res, scale),
                    "reports": [],
                    "warnings": ["M_g is unbounded; nothing to verify against"],
                });
                return Ok(Outcome {
                    code: exit::UNBOUNDED,
                    body: render(cfg, &v),
                });
            }
            (res.mg_value, Some(res.converged))
        }
    };
    let built: Vec<SampleModel> = models.iter().map(|m| m.build(&datum)).collect();
    let reports = estimate::verify_inequality(
        &datum,
        &built,
        mg,
        cfg.samples,
        cfg.knn_k,
        cfg.confidence,
        &mut task_rng(cfg.seed, STREAM_VERIFY),
    )?;
    let mut warnings = Vec::new();
    if converged == Some(false) {
        warnings.push("solver did not reach the gradient tolerance; M_g is the best value found".to_string());
    }
    for r in &reports {
        let t = &r.empirical_f.total;
        if t.high_dimension {
            warnings.push(format!(
                "model {}: k-NN dimension exceeds {}; estimates may be biased",
                r.model.label(),
                estimate::KNN_MAX_DIM
            ));
        }
        if t.jittered {
            warnings.push(format!("model {}: coincident samples were jittered", r.model.label()));
        }
    }
    let all_pass = reports.iter().all(|r| r.pass);
    let body = match cfg.format {
        OutputFormat::Json => report::to_json(&json!({
            "units": cfg.unit_name(),
            "mg_reference": num(mg * scale),
            "mg_overridden": mg_override.is_some(),
            "reports": reports.iter().map(|r| report::verification(r, scale)).collect::<Vec<_>>(),
            "all_pass": all_pass,
            "warnings": warnings,
        })),
        OutputFormat::Csv => {
            let mut rows = Vec::new();
            for r in &reports {
                let label = r.model.label();
                let ef = &r.empirical_f;
                let terms = ef
                    .blocks
                    .iter()
                    .zip(&datum.d)
                    .enumerate()
                    .map(|(i, (e, &w))| ("block", i, w, e))
                    .chain(ef.images.iter().zip(&datum.c).enumerate().map(|(j, (e, &w))| ("image", j, -w, e)));
                for (kind, idx, w, e) in terms {
                    rows.push(vec![
                        json!(label),
                        json!(kind),
                        json!(idx),
                        num(w),
                        num(e.value * scale),
                        num(e.std_error * scale),
                        json!(e.method.as_str()),
                    ]);
                }
                rows.push(vec![
                    json!(label),
                    json!("total"),
                    Value::Null,
                    Value::Null,
                    num(ef.total.value * scale),
                    num(ef.total.std_error * scale),
                    json!(if r.pass { "pass" } else { "fail" }),
                ]);
            }
            report::to_csv(&["model", "term", "index", "weight", "value", "std_error", "method"], &rows)
        }
    };
    Ok(Outcome {
        code: if all_pass { exit::OK } else { exit::VERIFY_FAILED },
        body,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    Epi { lambda: f64, dim: usize },
    ZfCoeffs { matrix: DMatrix<f64> },
    ZfF { matrix: DMatrix<f64>, lambda: Vec<f64> },
    CauchyBinet { matrix: DMatrix<f64> },
    Section6 { alpha: f64, beta: f64, delta: f64 },
    Section6Feasible { alpha: f64, beta: f64, delta1: f64, delta2: f64 },
    Section6Bruteforce { alpha: f64, beta: f64, delta: f64 },
    /// `C` along `α ∈ [from, to]` at fixed `β`, with `δ = α − 1 + β/2`.
    Section6Sweep { beta: f64, from: f64, to: f64, steps: usize },
}

pub fn closed_form(cf: &ClosedForm, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = cfg.unit_scale();
    let e = |x: f64| num(sig12(x * s));
    let r = |x: f64| num(sig12(x));
    let v = match cf {
        ClosedForm::Epi { lambda, dim } => {
            json!({ "lambda": r(*lambda), "dim": dim, "mg": e(closed_forms::epi_mg(*lambda, *dim)?) })
        }
        ClosedForm::ZfCoeffs { matrix } => {
            let w = closed_forms::zf_coefficients(matrix)?;
            json!({
                "alpha_sq": w.iter().map(|&x| r(x)).collect::<Vec<_>>(),
                "sum": r(w.iter().sum()),
            })
        }
        ClosedForm::ZfF { matrix, lambda } => json!({ "F": e(closed_forms::zf_f(matrix, lambda)?) }),
        ClosedForm::CauchyBinet { matrix } => {
            let (lhs, rhs) = closed_forms::cauchy_binet_check(matrix)?;
            let rel = if lhs == 0.0 { (lhs - rhs).abs() } else { ((lhs - rhs) / lhs).abs() };
            json!({ "lhs": r(lhs), "rhs": r(rhs), "relative_error": r(rel) })
        }
        ClosedForm::Section6 { alpha, beta, delta } => {
            let (c, d) = closed_forms::section6_constant(*alpha, *beta, *delta)?;
            json!({ "alpha": r(*alpha), "beta": r(*beta), "delta": r(*delta), "C": e(c), "D": e(d) })
        }
        ClosedForm::Section6Feasible {
            alpha,
            beta,
            delta1,
            delta2,
        } => {
            let f = closed_forms::section6_feasible(&Section6Params::new(*alpha, *beta, *delta1, *delta2));
            json!({
                "feasible": f.feasible(),
                "conditions": f.conditions.iter().map(|(c, ok)| json!({
                    "number": c.number(),
                    "condition": c.to_string(),
                    "holds": ok,
                })).collect::<Vec<_>>(),
            })
        }
        ClosedForm::Section6Bruteforce { alpha, beta, delta } => {
            let b = closed_forms::section6_bruteforce(*alpha, *beta, *delta)?;
            json!({
                "C_four_variable": e(b.c_four),
                "C_two_variable": e(b.c_two),
                "k1_over_k2": r(b.k_ratio),
                "rho": r(b.rho),
            })
        }
        ClosedForm::Section6Sweep { beta, from, to, steps } => {
            let steps = (*steps).max(2);
            let mut rows = Vec::with_capacity(steps);
            for i in 0..steps {
                let alpha = from + (to - from) * i as f64 / (steps - 1) as f64;
                let delta = alpha - 1.0 + beta / 2.0;
                let c = closed_forms::section6_constant(alpha, *beta, delta).map(|(c, _)| c).ok();
                rows.push(vec![r(alpha), r(*beta), r(delta), c.map_or(Value::Null, e)]);
            }
            if cfg.format == OutputFormat::Csv {
                return Ok(Outcome {
                    code: exit::OK,
                    body: report::to_csv(&["alpha", "beta", "delta", "C"], &rows),
                });
            }
            json!({
                "units": cfg.unit_name(),
                "rows": rows.into_iter().map(|row| json!({
                    "alpha": row[0], "beta": row[1], "delta": row[2], "C": row[3],
                })).collect::<Vec<_>>(),
            })
        }
    };
    Ok(Outcome {
        code: exit::OK,
        body: render(cfg, &v),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Make {
    Epi { lambda: f64, dim: usize },
    ZamirFeder { matrix: DMatrix<f64> },
    Section6 { alpha: f64, beta: f64, delta1: f64, delta2: f64 },
    /// Single block of size `n` against its `n` coordinate projections.
    Projections { n: usize },
}

pub fn make(m: &Make) -> Result<Outcome, CliError> {
    let (datum, name) = match m {
        Make::Epi { lambda, dim } => (datum::make_epi_datum(*lambda, *dim)?, "epi"),
        Make::ZamirFeder { matrix } => (datum::make_zamir_feder_datum(matrix)?, "zamir-feder"),
        Make::Section6 {
            alpha,
            beta,
            delta1,
            delta2,
        } => (datum::make_section6_datum(*alpha, *beta, *delta1, *delta2)?, "dependent-components"),
        Make::Projections { n } => {
            let maps = (0..*n)
                .map(|i| DMatrix::from_fn(1, *n, |_, c| if c == i { 1.0 } else { 0.0 }))
                .collect();
            (datum::make_bli_datum(maps, vec![1.0; *n])?, "coordinate-projections")
        }
    };
    Ok(Outcome {
        code: exit::OK,
        body: format::datum_to_string(&DatumFile::from_datum(&datum).with_name(name)),
    })
}
