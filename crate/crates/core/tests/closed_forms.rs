mod common;

use blepi_core::closed_forms::{self, Section6Condition, Section6Params};
use blepi_core::datum::make_section6_datum;
use blepi_core::gauss;
use blepi_core::rng::task_rng;
use blepi_core::SolverOptions;
use common::*;
use nalgebra::DMatrix;
use rand::Rng;

fn log_det(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant().ln()
}

fn a_lambda_at(a: &DMatrix<f64>, lambda: &[f64]) -> DMatrix<f64> {
    let l = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lambda));
    a * l * a.transpose()
}

#[test]
fn zamir_feder_suite() {
    let mut rng = task_rng(21, 0);
    let mut worst_f = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.random_range(1..=6);
        let k = rng.random_range(1..=n.min(3));
        let a = row_orthonormal(k, n, &mut rng);
        let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0f64..3.0).exp()).collect();

        let alpha2 = closed_forms::zf_coefficients(&a).unwrap();
        for (j, w) in alpha2.iter().enumerate() {
            let col: f64 = (0..k).map(|i| a[(i, j)] * a[(i, j)]).sum();
            assert!((w - col).abs() <= 1e-12);
        }
        assert!((alpha2.iter().sum::<f64>() - k as f64).abs() <= 1e-9);

        let f = closed_forms::zf_f(&a, &lambda).unwrap();
        let oracle = log_det(&a_lambda_at(&a, &lambda)) - alpha2.iter().zip(&lambda).map(|(w, l)| w * l.ln()).sum::<f64>();
        assert!((f - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()));
        worst_f = worst_f.min(f);

        // coefficient of log λ_j at Λ = I, by central differences in log λ_j
        let h = 1e-5;
        for j in 0..n {
            let at = |t: f64| {
                let mut l = vec![1.0; n];
                l[j] = t.exp();
                log_det(&a_lambda_at(&a, &l))
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            assert!((fd - alpha2[j]).abs() <= 1e-6, "{fd} vs {}", alpha2[j]);
        }
        let g = closed_forms::zf_log_det_gradient(&a, &vec![1.0; n]).unwrap();
        for (x, y) in g.iter().zip(&alpha2) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
    assert!(worst_f >= -1e-9, "min F = {worst_f:e}");
}

#[test]
fn zamir_feder_gradient_off_identity() {
    let mut rng = task_rng(22, 0);
    for _ in 0..100 {
        let n = rng.random_range(2..=6);
        let k = rng.random_range(1..=n.min(3));
        let a = row_orthonormal(k, n, &mut rng);
        let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0f64..2.0).exp()).collect();
        let g = closed_forms::zf_log_det_gradient(&a, &lambda).unwrap();
        let h = 1e-5;
        for j in 0..n {
            let at = |t: f64| {
                let mut l = lambda.clone();
                l[j] *= t.exp();
                log_det(&a_lambda_at(&a, &l))
            };
            assert!(((at(h) - at(-h)) / (2.0 * h) - g[j]).abs() <= 1e-6);
        }
        // trace identity: Σ_j λ_j a_jᵀ (AΛAᵀ)⁻¹ a_j = tr(I_k) = k
        assert!((g.iter().sum::<f64>() - k as f64).abs() <= 1e-9);
    }
}

fn minors_sum(b: &DMatrix<f64>) -> f64 {
    // recursive subset enumeration, independent of the library's iterator
    fn rec(b: &DMatrix<f64>, start: usize, chosen: &mut Vec<usize>, acc: &mut f64) {
        if chosen.len() == b.nrows() {
            let d = b.select_columns(chosen.iter()).determinant();
            *acc += d * d;
            return;
        }
        for c in start..b.ncols() {
            chosen.push(c);
            rec(b, c + 1, chosen, acc);
            chosen.pop();
        }
    }
    let mut acc = 0.0;
    rec(b, 0, &mut Vec::new(), &mut acc);
    acc
}

#[test]
fn cauchy_binet() {
    let mut rng = task_rng(23, 0);
    for _ in 0..500 {
        let n = rng.random_range(1..=7);
        let k = rng.random_range(1..=n);
        let b = gaussian_matrix(k, n, &mut rng);
        let (lhs, rhs) = closed_forms::cauchy_binet_check(&b).unwrap();
        assert!(((lhs - rhs) / lhs).abs() <= 1e-9, "{lhs} vs {rhs}");
        let oracle = minors_sum(&b);
        assert!(((rhs - oracle) / oracle).abs() <= 1e-12);
    }
    // 2 x 3 by hand: minors 1·5−2·4 = −3, 1·6−3·4 = −6, 2·6−3·5 = −3
    let b = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let (lhs, rhs) = closed_forms::cauchy_binet_check(&b).unwrap();
    assert!((rhs - 54.0).abs() < 1e-12 && (lhs - 54.0).abs() < 1e-9);
}

/// Feasible symmetric points: `α ∈ [1, 2]`, `β ∈ (0, 1)`, `δ = α − 1 + β/2`.
pub fn section6_samples(count: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    let mut rng = task_rng(seed, 0);
    (0..count)
        .map(|_| {
            let alpha = rng.random_range(1.0..2.0);
            let beta = rng.random_range(0.05..0.95);
            (alpha, beta, alpha - 1.0 + beta / 2.0)
        })
        .collect()
}

#[test]
fn section6_three_way_agreement() {
    for (alpha, beta, delta) in section6_samples(20, 24) {
        let (c, _) = closed_forms::section6_constant(alpha, beta, delta).unwrap();
        let bf = closed_forms::section6_bruteforce(alpha, beta, delta).unwrap();
        let datum = make_section6_datum(alpha, beta, delta, delta).unwrap();
        let solved = gauss::solve_mg(&datum, &SolverOptions::default()).unwrap();
        let at = format!("alpha {alpha} beta {beta} delta {delta}");
        assert!((c - bf.c_four).abs() <= 1e-4, "{at}: C {c} vs four-variable {}", bf.c_four);
        assert!((c - bf.c_two).abs() <= 1e-4, "{at}: C {c} vs two-variable {}", bf.c_two);
        assert!(!solved.unbounded);
        assert!((c - solved.mg_value).abs() <= 1e-4, "{at}: C {c} vs solver {}", solved.mg_value);
    }
}

#[test]
fn section6_boundary_alpha_one() {
    // ρ = 1: the supremum sits on the edge of the parameter set
    let (c, d) = closed_forms::section6_constant(1.0, 0.5, 0.25).unwrap();
    let want = 0.5 * (0.5f64.powf(0.5) * 0.5f64.powf(0.5) / 2f64.powf(0.5) * 2f64.powf(0.5)).ln();
    assert!((c - want).abs() < 1e-12 && c == d);
    let bf = closed_forms::section6_bruteforce(1.0, 0.5, 0.25).unwrap();
    assert!((c - bf.c_four).abs() <= 1e-4);
}

#[test]
fn section6_domain_errors_name_conditions() {
    let err = closed_forms::section6_constant(0.5, 0.5, 0.5).unwrap_err().to_string();
    assert!(err.contains("(4)"), "{err}");
    let f = closed_forms::section6_feasible(&Section6Params::new(1.8, 0.4, 1.5, 0.5));
    assert_eq!(f.failed(), vec![Section6Condition::AlphaAtMostOnePlusDelta]);
    let f = closed_forms::section6_feasible(&Section6Params::new(1.5, 1.2, 1.1, 1.1));
    assert_eq!(f.failed(), vec![Section6Condition::BetaAtMostOne]);
    let f = closed_forms::section6_feasible(&Section6Params::new(1.5, 0.5, 1.0, 0.0));
    assert!(f.failed().contains(&Section6Condition::Scaling));
}
