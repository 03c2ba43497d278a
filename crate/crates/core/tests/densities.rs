//! Integral checks on the analytic scenario densities.

use olre_core::{trial_rng, Scenario};

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let whole = simpson(f, a, b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, tol / 2.0, depth - 1)
            + adaptive_simpson(f, m, b, tol / 2.0, depth - 1)
    }
}

#[test]
fn one_dimensional_densities_integrate_to_one() {
    let s = Scenario::ExpI;
    let r3 = 3f64.sqrt();
    // split at the support edges of p and the kink of q
    let breaks = [-40.0, -r3, 0.0, r3, 40.0];
    let p = |x: f64| s.density_p(&[x]).unwrap();
    let q = |x: f64| s.density_q(&[x]).unwrap();
    for (name, f) in [("p", &p as &dyn Fn(f64) -> f64), ("q", &q)] {
        let total: f64 = breaks
            .windows(2)
            .map(|w| adaptive_simpson(f, w[0], w[1], 1e-10, 40))
            .sum();
        assert!((total - 1.0).abs() < 1e-3, "ExpI {name}: {total}");
    }
}

fn tensor_simpson(f: &dyn Fn(f64, f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (hi - lo) / n as f64;
    let w = |i: usize| {
        if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut total = 0.0;
    for i in 0..=n {
        let x = lo + i as f64 * h;
        for j in 0..=n {
            total += w(i) * w(j) * f(x, lo + j as f64 * h);
        }
    }
    total * h * h / 9.0
}

#[test]
fn two_dimensional_densities_integrate_to_one() {
    for s in [Scenario::ExpII, Scenario::ExpIII, Scenario::Identical] {
        let p = |x: f64, y: f64| s.density_p(&[x, y]).unwrap();
        let q = |x: f64, y: f64| s.density_q(&[x, y]).unwrap();
        for (name, f) in [("p", &p as &dyn Fn(f64, f64) -> f64), ("q", &q)] {
            let total = tensor_simpson(f, -30.0, 30.0, 600);
            assert!((total - 1.0).abs() < 1e-3, "{} {name}: {total}", s.id());
        }
    }
}

/// `(1-α) E_p[f r] + α E_q[f r] = E_q[f]` for the relative ratio `r`.
#[test]
fn change_of_measure_identity() {
    let n = 100_000;
    for s in [Scenario::ExpI, Scenario::ExpII, Scenario::ExpIII] {
        for alpha in [0.1, 0.5] {
            let f = |x: &[f64]| {
                let sum: f64 = x.iter().sum();
                (0.7 * sum).cos() + 0.5 * (-x.iter().map(|v| v * v).sum::<f64>() / 8.0).exp()
            };
            let mut rng = trial_rng(2024, 7);
            let mut diffs = Vec::with_capacity(n);
            for _ in 0..n {
                let pair = s.sample_pair(&mut rng);
                let (x, xq) = (pair.x(), pair.x_prime());
                let lhs = (1.0 - alpha) * f(x) * s.true_ratio(alpha, x).unwrap()
                    + alpha * f(xq) * s.true_ratio(alpha, xq).unwrap();
                diffs.push(lhs - f(xq));
            }
            let mean = diffs.iter().sum::<f64>() / n as f64;
            let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!(
                mean.abs() <= 4.0 * se,
                "{} alpha={alpha}: mean {mean}, se {se}",
                s.id()
            );
        }
    }
}
