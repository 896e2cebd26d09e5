//! Consistency statistics: normalization, Pearson correlation matrices,
//! ordinary least squares, and one-sample t-tests.
//!
//! Sample sizes here are as small as 3 or 6, so p-values use the exact
//! t distribution through the regularized incomplete beta function rather
//! than a normal approximation.

use serde::Serialize;

use crate::error::{Error, Result};

/// Euclidean-normalizes a measurement vector; errors on all-zero input.
pub fn normalize_set(values: &[f64]) -> Result<Vec<f64>> {
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateInput("cannot normalize an all-zero set".into()));
    }
    Ok(values.iter().map(|v| v / norm).collect())
}

/// Pearson correlation of two equally long, non-constant samples.
pub fn pearson(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() || u.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "pearson needs two samples of equal length >= 2, got {} and {}",
            u.len(),
            v.len()
        )));
    }
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let mut suv = 0.0;
    let mut suu = 0.0;
    let mut svv = 0.0;
    for (x, y) in u.iter().zip(v.iter()) {
        let du = x - mu;
        let dv = y - mv;
        suv += du * dv;
        suu += du * du;
        svv += dv * dv;
    }
    if suu == 0.0 || svv == 0.0 {
        return Err(Error::DegenerateInput("pearson of a constant sample is undefined".into()));
    }
    Ok(suv / (suu * svv).sqrt())
}

/// Symmetric matrix of pairwise Pearson coefficients over labeled vectors.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub rho: Vec<Vec<f64>>,
    /// Entries below this magnitude are flagged in reports.
    pub flag_threshold: f64,
}

impl CorrelationMatrix {
    pub fn from_sets(labeled: &[(String, Vec<f64>)], flag_threshold: f64) -> Result<Self> {
        if labeled.is_empty() {
            return Err(Error::DegenerateInput("correlation matrix of nothing".into()));
        }
        let k = labeled.len();
        let mut rho = vec![vec![1.0; k]; k];
        for i in 0..k {
            for j in 0..i {
                let r = pearson(&labeled[i].1, &labeled[j].1)?;
                rho[i][j] = r;
                rho[j][i] = r;
            }
        }
        Ok(CorrelationMatrix {
            labels: labeled.iter().map(|(l, _)| l.clone()).collect(),
            rho,
            flag_threshold,
        })
    }

    pub fn is_flagged(&self, i: usize, j: usize) -> bool {
        i != j && self.rho[i][j] < self.flag_threshold
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    /// Two-sided p-value for slope != 0.
    pub p_value: f64,
}

/// Least-squares line fit with the exact small-sample slope test.
pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(Error::DegenerateInput(format!(
            "regression needs >= 3 paired points, got {} and {}",
            n,
            y.len()
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y.iter()) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("regression on a constant abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let df = nf - 2.0;
    let sse: f64 = x
        .iter()
        .zip(y.iter())
        .map(|(&xi, &yi)| {
            let r = yi - (intercept + slope * xi);
            r * r
        })
        .sum();
    let p_value = if sse <= 0.0 {
        0.0 // exact fit
    } else {
        let se = (sse / df / sxx).sqrt();
        student_t_two_sided(slope / se, df)
    };
    Ok(OlsFit { slope, intercept, p_value })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TTest {
    pub t_stat: f64,
    pub p_value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionEntry {
    pub label: String,
    #[serde(flatten)]
    pub fit: OlsFit,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TTestEntry {
    pub label: String,
    #[serde(flatten)]
    pub test: TTest,
}

/// The full consistency report for one treatment: correlation matrices over
/// eigencycle sets and rotation axes, regressions against a reference
/// source, and hypothesis tests.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub schema: String,
    pub a: f64,
    pub eigencycle_corr: CorrelationMatrix,
    pub axis_corr: Option<CorrelationMatrix>,
    pub regressions: Vec<RegressionEntry>,
    pub ttests: Vec<TTestEntry>,
}

impl ComparisonReport {
    pub fn labels(&self) -> &[String] {
        &self.eigencycle_corr.labels
    }

    /// Aligned-text rendering; flagged correlations appear in brackets.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# comparison, a = {}\n", self.a));
        out.push_str("\n## eigencycle correlations (flagged below threshold in brackets)\n\n");
        out.push_str(&render_matrix(&self.eigencycle_corr));
        if let Some(axis) = &self.axis_corr {
            out.push_str("\n## rotation-axis correlations\n\n");
            out.push_str(&render_matrix(axis));
        }
        if !self.regressions.is_empty() {
            out.push_str("\n## regressions\n\n");
            for e in &self.regressions {
                out.push_str(&format!(
                    "{:24} slope {:8.4}  intercept {:8.4}  p {:.4}  n {}\n",
                    e.label, e.fit.slope, e.fit.intercept, e.fit.p_value, e.n
                ));
            }
        }
        if !self.ttests.is_empty() {
            out.push_str("\n## t-tests against zero\n\n");
            for e in &self.ttests {
                out.push_str(&format!(
                    "{:28} t {:8.4}  p {:.4}  n {}\n",
                    e.label, e.test.t_stat, e.test.p_value, e.test.n
                ));
            }
        }
        out
    }
}

fn render_matrix(m: &CorrelationMatrix) -> String {
    let width = m.labels.iter().map(|l| l.len()).max().unwrap_or(4).max(8);
    let mut out = String::new();
    out.push_str(&format!("{:w$}", "", w = width + 1));
    for l in &m.labels {
        out.push_str(&format!("{l:>w$}", w = width + 1));
    }
    out.push('\n');
    for (i, l) in m.labels.iter().enumerate() {
        out.push_str(&format!("{l:>w$} ", w = width));
        for j in 0..=i {
            let cell = if m.is_flagged(i, j) {
                format!("[{:.3}]", m.rho[i][j])
            } else {
                format!("{:.3}", m.rho[i][j])
            };
            out.push_str(&format!("{cell:>w$}", w = width + 1));
        }
        out.push('\n');
    }
    out
}

/// One-sample two-sided t-test of mean zero.
pub fn ttest_zero(samples: &[f64]) -> Result<TTest> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::DegenerateInput("t-test needs at least 2 samples".into()));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        return Err(Error::DegenerateInput("t-test of a zero-variance sample".into()));
    }
    let t_stat = mean / (var / nf).sqrt();
    Ok(TTest { t_stat, p_value: student_t_two_sided(t_stat, nf - 1.0), n })
}

/// RMS distance of 2-d points from their total-least-squares line: the
/// square root of the smaller covariance eigenvalue. Zero exactly when the
/// points are collinear, e.g. a degenerate cycle projection.
pub fn line_fit_rms_residual(points: &[[f64; 2]]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for p in points {
        let dx = p[0] - mx;
        let dy = p[1] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // smaller eigenvalue of the 2x2 covariance
    let tr = (sxx + syy) / n;
    let det = (sxx * syy - sxy * sxy) / (n * n);
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 - disc).max(0.0).sqrt()
}

/// Two-sided tail probability of Student's t: I_{df/(df+t^2)}(df/2, 1/2).
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    regularized_incomplete_beta(df / 2.0, 0.5, x)
}

/// Regularized incomplete beta I_x(a, b) by the Lentz continued fraction.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0 && (0.0..=1.0).contains(&x), "bad beta arguments");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let front =
        (a * x.ln() + b * (1.0 - x).ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)).exp();
    // the continued fraction converges fast on x < (a+1)/(a+b+2); use the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the other side
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let m2 = 2.0 * mf;
        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Lanczos approximation of ln Gamma, accurate to ~1e-13 for positive input.
fn ln_gamma(z: f64) -> f64 {
    const G: f64 = 7.0;
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if z < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}
