//! Two-sample comparisons of final metric values.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// One-sided p-value for `mean(a) < mean(b)`.
    pub p_less: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Welch's unequal-variance t-test of `H₁: mean(a) < mean(b)`.
///
/// Returns `None` when either sample has fewer than two values.
pub fn welch_less(a: &[f64], b: &[f64]) -> Option<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let se_sq = va / na + vb / nb;
    if se_sq == 0.0 {
        let p = if ma < mb { 0.0 } else { 1.0 };
        return Some(WelchTest {
            t: if ma < mb { f64::NEG_INFINITY } else { f64::INFINITY },
            df: na + nb - 2.0,
            p_less: p,
        });
    }
    let t = (ma - mb) / se_sq.sqrt();
    let df = se_sq * se_sq / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some(WelchTest {
        t,
        df,
        p_less: dist.cdf(t),
    })
}
