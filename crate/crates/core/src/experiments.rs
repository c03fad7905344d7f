//! Reproducible numerical studies that set the exact oracle against the
//! asymptotic predictions. Each study returns typed rows that serialize to CSV
//! with a fixed header.

use std::io::Write;

use crate::error::{Error, Result};
use crate::gaussian::std_normal_cdf;
use crate::model::{classify_by_entropy, MixedSourceSpec, SourceSpectrum};
use crate::rates::{
    equal_entropy_rate, first_order_rate, l_range, solve_second_order, RateCase, RateQuery,
    RateResult,
};
use crate::spectrum::{exact_spectrum, TypeCap};

/// Shortest representation that parses back to the same `f64`; `-0.0` is
/// printed as `0.0`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        "0.0".to_string()
    } else {
        format!("{x:?}")
    }
}

/// `64, 128, ..., 4096`.
pub fn default_n_grid() -> Vec<usize> {
    (6..=12).map(|k| 1usize << k).collect()
}

pub trait CsvRow {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

pub fn write_csv<R: CsvRow, W: Write>(rows: &[R], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Domain(format!("csv output failed: {e}"));
    w.write_record(R::header()).map_err(io)?;
    for row in rows {
        w.write_record(row.fields()).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Domain(format!("csv output failed: {e}")))?;
    Ok(())
}

pub fn to_csv_string<R: CsvRow>(rows: &[R]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is ascii"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerryEsseenRow {
    pub n: usize,
    pub l: f64,
    pub empirical: f64,
    pub gaussian: f64,
    pub abs_diff: f64,
    pub abs_diff_times_sqrt_n: f64,
}

impl CsvRow for BerryEsseenRow {
    fn header() -> &'static [&'static str] {
        &["n", "L", "empirical", "gaussian", "abs_diff", "abs_diff_times_sqrt_n"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            format_float(self.l),
            format_float(self.empirical),
            format_float(self.gaussian),
            format_float(self.abs_diff),
            format_float(self.abs_diff_times_sqrt_n),
        ]
    }
}

/// Exact tail `tr(ρⁿ {ρⁿ <= 2^{-nS + √n L}})` against `Φ(L/σ)`.
pub fn berry_esseen_study(
    p: &SourceSpectrum,
    l_grid: &[f64],
    n_grid: &[usize],
    cap: TypeCap,
) -> Result<Vec<BerryEsseenRow>> {
    let st = p.stats();
    if st.sigma <= 0.0 {
        return Err(Error::DegenerateSigma { component: 0 });
    }
    let m = MixedSourceSpec::memoryless(p.clone());
    let mut rows = Vec::with_capacity(l_grid.len() * n_grid.len());
    for &n in n_grid {
        let spectrum = exact_spectrum(&m, n, cap)?;
        let root = (n as f64).sqrt();
        for &l in l_grid {
            let empirical = spectrum.tail(-(n as f64) * st.entropy + root * l);
            let gaussian = std_normal_cdf(l / st.sigma);
            let abs_diff = (empirical - gaussian).abs();
            rows.push(BerryEsseenRow {
                n,
                l,
                empirical,
                gaussian,
                abs_diff,
                abs_diff_times_sqrt_n: abs_diff * root,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceRow {
    pub n: usize,
    pub tail_low_entropy_source: f64,
    pub tail_high_entropy_source: f64,
}

impl CsvRow for DominanceRow {
    fn header() -> &'static [&'static str] {
        &["n", "tail_low_entropy_source", "tail_high_entropy_source"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            format_float(self.tail_low_entropy_source),
            format_float(self.tail_high_entropy_source),
        ]
    }
}

/// For `S(p1) > S(p2)`: the low-entropy source's tail at the high entropy
/// level (vanishes) and the high-entropy source's tail at the low level
/// (tends to one), both shifted by `-√n c`.
pub fn dominance_study(
    p1: &SourceSpectrum,
    p2: &SourceSpectrum,
    c: f64,
    n_grid: &[usize],
    cap: TypeCap,
) -> Result<Vec<DominanceRow>> {
    let (s1, s2) = (p1.entropy(), p2.entropy());
    if s1 <= s2 {
        return Err(Error::EntropyOrder { s1, s2 });
    }
    let m1 = MixedSourceSpec::memoryless(p1.clone());
    let m2 = MixedSourceSpec::memoryless(p2.clone());
    n_grid
        .iter()
        .map(|&n| {
            let (nf, root) = (n as f64, (n as f64).sqrt());
            let low = exact_spectrum(&m2, n, cap)?.tail(-nf * s1 - root * c);
            let high = exact_spectrum(&m1, n, cap)?.tail(-nf * s2 - root * c);
            Ok(DominanceRow { n, tail_low_entropy_source: low, tail_high_entropy_source: high })
        })
        .collect()
}

/// First- and second-order prediction used by the convergence studies.
///
/// When every component at the first-order level has zero varentropy the
/// Gaussian equation degenerates into a step at `b = 0`; the exact
/// single-level behaviour then gives `b* = 0`.
pub fn predicted_rates(m: &MixedSourceSpec, eps: f64, eta: f64) -> Result<RateResult> {
    let a = first_order_rate(m, eps, eta)?;
    match solve_second_order(m, RateQuery::new(a, eps)?, eta) {
        Err(Error::DegenerateSigma { component }) => {
            let classes = classify_by_entropy(m, a, eta);
            let stats = m.stats();
            if classes.eq_idx.iter().all(|&i| stats[i].sigma == 0.0) {
                Ok(RateResult { a, b: 0.0, case: RateCase::Degenerate })
            } else {
                Err(Error::DegenerateSigma { component })
            }
        }
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub log2_m: f64,
    pub b_hat: f64,
    pub b_star: f64,
    pub gap: f64,
}

impl CsvRow for ConvergenceRow {
    fn header() -> &'static [&'static str] {
        &["n", "log2_M", "b_hat", "b_star", "gap"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            format_float(self.log2_m),
            format_float(self.b_hat),
            format_float(self.b_star),
            format_float(self.gap),
        ]
    }
}

/// `(log2 M_n - n a)/√n` from the exact oracle next to the predicted `b*`.
pub fn convergence_study(
    m: &MixedSourceSpec,
    eps: f64,
    n_grid: &[usize],
    eta: f64,
    cap: TypeCap,
) -> Result<(RateResult, Vec<ConvergenceRow>)> {
    let prediction = predicted_rates(m, eps, eta)?;
    if !prediction.b.is_finite() {
        return Err(Error::Infeasible { lhs: prediction.b, target: 1.0 - eps });
    }
    let rows = n_grid
        .iter()
        .map(|&n| {
            let c = exact_spectrum(m, n, cap)?.min_compression_length(eps);
            let b_hat = (c.log2_m - n as f64 * prediction.a) / (n as f64).sqrt();
            Ok(ConvergenceRow {
                n,
                log2_m: c.log2_m,
                b_hat,
                b_star: prediction.b,
                gap: (b_hat - prediction.b).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((prediction, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceRow {
    pub n: usize,
    pub normalized: f64,
}

impl CsvRow for DivergenceRow {
    fn header() -> &'static [&'static str] {
        &["n", "normalized"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.n.to_string(), format_float(self.normalized)]
    }
}

/// `(log2 M_n - n R)/√n` for a candidate first-order rate `R`. It stays
/// bounded only when `R` is the optimal first-order rate.
pub fn first_order_divergence_check(
    m: &MixedSourceSpec,
    eps: f64,
    wrong_a: f64,
    n_grid: &[usize],
    cap: TypeCap,
) -> Result<Vec<DivergenceRow>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps = {eps} is outside (0, 1)")));
    }
    n_grid
        .iter()
        .map(|&n| {
            let c = exact_spectrum(m, n, cap)?.min_compression_length(eps);
            Ok(DivergenceRow { n, normalized: (c.log2_m - n as f64 * wrong_a) / (n as f64).sqrt() })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure1Row {
    pub eps: f64,
    pub l: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

impl CsvRow for Figure1Row {
    fn header() -> &'static [&'static str] {
        &["eps", "L", "lower_bound", "upper_bound"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            format_float(self.eps),
            format_float(self.l),
            format_float(self.lower_bound),
            format_float(self.upper_bound),
        ]
    }
}

/// Equal-entropy rate `L(ε)` with its bracketing single-source rates.
pub fn figure1_curve(sigma1: f64, sigma2: f64, t: f64, eps_grid: &[f64]) -> Result<Vec<Figure1Row>> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("mixing weight t = {t} is outside (0, 1)")));
    }
    eps_grid
        .iter()
        .map(|&eps| {
            let l = equal_entropy_rate(sigma1, sigma2, t, eps)?;
            let range = l_range(sigma1, sigma2, eps)?;
            Ok(Figure1Row { eps, l: l + 0.0, lower_bound: range.lo + 0.0, upper_bound: range.hi + 0.0 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::std_normal_quantile;
    use crate::model::DEFAULT_ETA;
    use crate::rates::two_source_rate;

    fn bern(p: f64) -> SourceSpectrum {
        SourceSpectrum::new(vec![p, 1.0 - p]).unwrap()
    }

    #[test]
    fn float_format_round_trips() {
        assert_eq!(format_float(-0.0), "0.0");
        assert_eq!(format_float(1.0), "1.0");
        assert_eq!(format_float(6f64.log2()), "2.584962500721156");
        for x in [0.1, 1e-300, -3.5e17, std::f64::consts::PI] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn berry_esseen_rejects_flat_source() {
        assert!(matches!(
            berry_esseen_study(&SourceSpectrum::uniform(2), &[0.0], &[8], TypeCap::DEFAULT),
            Err(Error::DegenerateSigma { .. })
        ));
    }

    #[test]
    fn berry_esseen_median_and_columns() {
        let rows = berry_esseen_study(&bern(0.75), &[-1.0, 0.0, 1.0], &[1024], TypeCap::DEFAULT).unwrap();
        assert!((rows[1].empirical - 0.5).abs() < 0.05);
        for r in &rows {
            assert_eq!(r.abs_diff_times_sqrt_n, r.abs_diff * (r.n as f64).sqrt());
        }
    }

    #[test]
    fn dominance_rejects_wrong_order() {
        let u = SourceSpectrum::uniform(2);
        assert!(matches!(
            dominance_study(&u, &u, 0.0, &[16], TypeCap::DEFAULT),
            Err(Error::EntropyOrder { .. })
        ));
        let rows = dominance_study(&bern(0.6), &bern(0.9), 0.0, &[16, 64], TypeCap::DEFAULT).unwrap();
        for r in rows {
            assert!((0.0..=1.0).contains(&r.tail_low_entropy_source));
            assert!((0.0..=1.0).contains(&r.tail_high_entropy_source));
        }
    }

    #[test]
    fn uniform_source_convergence_is_exact_level() {
        let m = MixedSourceSpec::memoryless(SourceSpectrum::uniform(2));
        for &eps in &[0.1, 0.3, 0.45] {
            let (pred, rows) = convergence_study(&m, eps, &[8, 16, 64, 128], DEFAULT_ETA, TypeCap::DEFAULT).unwrap();
            assert_eq!((pred.a, pred.b), (1.0, 0.0));
            for r in rows {
                let m_exact = ((1.0 - eps) * 2f64.powi(r.n as i32)).ceil();
                let expected = (m_exact.log2() - r.n as f64) / (r.n as f64).sqrt();
                assert!((r.b_hat - expected).abs() < 1e-12, "n={} {} vs {}", r.n, r.b_hat, expected);
                assert!(r.gap >= 0.0);
            }
        }
    }

    #[test]
    fn prediction_matches_two_source_closed_form() {
        let (p1, p2) = (bern(0.6), bern(0.9));
        let m = MixedSourceSpec::new(vec![(0.6, p1.clone()), (0.4, p2.clone())]).unwrap();
        let pred = predicted_rates(&m, 0.2, DEFAULT_ETA).unwrap();
        let closed = two_source_rate(p1.stats(), p2.stats(), 0.6, 0.2, DEFAULT_ETA).unwrap();
        assert_eq!(pred.a, closed.a);
        assert!((pred.b - closed.b).abs() < 1e-9);
        let expected = -p1.stats().sigma * std_normal_quantile(0.2 / 0.6).unwrap();
        assert!((pred.b - expected).abs() < 1e-9);
    }

    #[test]
    fn divergence_at_true_rate_reproduces_b_hat() {
        let m = MixedSourceSpec::new(vec![(0.6, bern(0.6)), (0.4, bern(0.9))]).unwrap();
        let grid = [64, 256];
        let (pred, conv) = convergence_study(&m, 0.2, &grid, DEFAULT_ETA, TypeCap::DEFAULT).unwrap();
        let div = first_order_divergence_check(&m, 0.2, pred.a, &grid, TypeCap::DEFAULT).unwrap();
        for (c, d) in conv.iter().zip(&div) {
            assert_eq!(c.b_hat, d.normalized);
        }
    }

    #[test]
    fn figure1_center_and_bounds() {
        let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        let rows = figure1_curve(0.235, 0.712, 0.425, &grid).unwrap();
        let mid = rows.iter().find(|r| r.eps == 0.5).unwrap();
        assert_eq!((mid.l, mid.lower_bound, mid.upper_bound), (0.0, 0.0, 0.0));
        let quarter = rows.iter().find(|r| r.eps == 0.25).unwrap();
        let z = std_normal_quantile(0.25).unwrap();
        assert_eq!(quarter.lower_bound, -0.235 * z);
        assert_eq!(quarter.upper_bound, -0.712 * z);
        assert!(quarter.lower_bound < quarter.l && quarter.l < quarter.upper_bound);
        assert!(rows.windows(2).all(|w| w[1].l < w[0].l));
    }

    #[test]
    fn csv_layout() {
        let rows = vec![DivergenceRow { n: 64, normalized: 0.5 }];
        assert_eq!(to_csv_string(&rows).unwrap(), "n,normalized\n64,0.5\n");
    }
}
