//! Structured reports: JSON values built from core results, plus CSV rows.
//!
//! Keys come out sorted and non-finite numbers become `null`, so equal
//! inputs give byte-identical text.

use blepi_core::estimate::{EmpiricalF, EntropyEstimate, VerificationReport};
use blepi_core::finiteness::{FinitenessVerdict, Leaf, SplitNode, SplitTree, Witness};
use blepi_core::gauss::GaussianSolveResult;
use blepi_core::{ProductSubspace, ValidationReport};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::format::{DatumFile, MatrixFile};

/// Round to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// JSON number, or `null` for NaN and infinities.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn matrix(m: &DMatrix<f64>) -> Value {
    serde_json::to_value(MatrixFile::from_matrix(m)).expect("matrix serializes")
}

pub fn subspace(v: &ProductSubspace) -> Value {
    json!({
        "block_dims": v.block_dims(),
        "dim": v.dim(),
        "bases": v.bases().iter().map(matrix).collect::<Vec<_>>(),
    })
}

pub fn validation(report: &ValidationReport) -> Value {
    json!({
        "ok": report.ok(),
        "issues": report.issues.iter().map(|i| json!({
            "code": i.code.as_str(),
            "location": i.location.to_string(),
            "message": i.message,
        })).collect::<Vec<_>>(),
    })
}

pub fn witness(w: &Witness) -> Value {
    match w {
        Witness::ScalingResidual(r) => json!({ "kind": "scaling_residual", "residual": num(*r) }),
        Witness::ViolatingSubspace { subspace: v, slack } => json!({
            "kind": "violating_subspace",
            "subspace": subspace(v),
            "slack": num(slack.slack),
            "per_block_dims": slack.per_block_dims,
            "per_map_dims": slack.per_map_dims,
        }),
    }
}

pub fn split_tree(tree: &SplitTree, scale: f64) -> Value {
    let datum = serde_json::to_value(DatumFile::from_datum(&tree.datum)).expect("datum serializes");
    match &tree.node {
        SplitNode::Leaf(leaf) => {
            let kind = match leaf {
                Leaf::OneDimensional { .. } => "one_dimensional",
                Leaf::SingleMap { .. } => "single_map",
                Leaf::NoMaps { .. } => "no_maps",
                Leaf::Unsplit => "unsplit",
            };
            json!({
                "datum": datum,
                "leaf": kind,
                "mg": leaf.mg().map_or(Value::Null, |m| num(m * scale)),
            })
        }
        SplitNode::Split { split, on_u, on_perp } => json!({
            "datum": datum,
            "critical_subspace": subspace(&split.u),
            "u_blocks": split.u_blocks,
            "perp_blocks": split.perp_blocks,
            "u_maps": split.u_maps,
            "perp_maps": split.perp_maps,
            "gamma": split.gamma.iter().map(matrix).collect::<Vec<_>>(),
            "on_u": split_tree(on_u, scale),
            "on_perp": split_tree(on_perp, scale),
        }),
    }
}

pub fn verdict(v: &FinitenessVerdict, scale: f64) -> Value {
    json!({
        "status": v.status.as_str(),
        "witness": v.witness.as_ref().map_or(Value::Null, witness),
        "certificate": v.certificate.as_ref().map_or(Value::Null, |t| split_tree(t, scale)),
        "notes": v.notes,
    })
}

pub fn solve(r: &GaussianSolveResult, scale: f64) -> Value {
    json!({
        "mg_value": num(r.mg_value * scale),
        "converged": r.converged,
        "unbounded": r.unbounded,
        "starts_used": r.starts_used,
        "gradient_norm": num(r.gradient_norm),
        "sigma_star": r.sigma_star.blocks().iter().map(matrix).collect::<Vec<_>>(),
        "escape_subspace": r.escape_subspace.as_ref().map_or(Value::Null, subspace),
    })
}

pub fn estimate(e: &EntropyEstimate, scale: f64) -> Value {
    json!({
        "value": num(e.value * scale),
        "std_error": num(e.std_error * scale),
        "method": e.method.as_str(),
        "n_samples": e.n_samples,
        "k_neighbors": e.k_neighbors,
        "jittered": e.jittered,
        "high_dimension": e.high_dimension,
    })
}

pub fn empirical(ef: &EmpiricalF, scale: f64) -> Value {
    json!({
        "total": estimate(&ef.total, scale),
        "blocks": ef.blocks.iter().map(|e| estimate(e, scale)).collect::<Vec<_>>(),
        "images": ef.images.iter().map(|e| estimate(e, scale)).collect::<Vec<_>>(),
    })
}

pub fn verification(r: &VerificationReport, scale: f64) -> Value {
    json!({
        "model": r.model.label(),
        "empirical_f": empirical(&r.empirical_f, scale),
        "mg_reference": num(r.mg_reference * scale),
        "margin": num(r.margin * scale),
        "z_score": num(r.z_score),
        "z_crit": num(r.z_crit),
        "pass": r.pass,
    })
}

pub fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => csv_field(s),
        other => csv_field(&other.to_string()),
    }
}

/// CSV text from a header and rows of JSON scalars.
pub fn to_csv(header: &[&str], rows: &[Vec<Value>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.iter().map(cell).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Two-column CSV of the scalar leaves of a JSON object, dotted paths as keys.
pub fn flat_csv(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<Vec<Value>>) {
        match v {
            Value::Object(map) => {
                for (k, x) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, x, rows);
                }
            }
            Value::Array(items) => {
                for (i, x) in items.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), x, rows);
                }
            }
            scalar => rows.push(vec![Value::String(prefix.to_string()), scalar.clone()]),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    to_csv(&["key", "value"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(-0.454_454_367_449_390_5), -0.454_454_367_449);
        assert_eq!(sig12(0.0), 0.0);
        assert_eq!(sig12(123_456.789_012_345_6), 123_456.789_012);
    }

    #[test]
    fn non_finite_is_null() {
        assert_eq!(num(f64::INFINITY), Value::Null);
        assert_eq!(num(1.5), json!(1.5));
    }

    #[test]
    fn csv_quotes_commas() {
        let text = to_csv(&["a", "b"], &[vec![json!("x,y"), json!(2)]]);
        assert_eq!(text, "a,b\n\"x,y\",2\n");
        let flat = flat_csv(&json!({"z": {"b": [1, 2]}, "a": null}));
        assert_eq!(flat, "key,value\na,\nz.b[0],1\nz.b[1],2\n");
    }
}
