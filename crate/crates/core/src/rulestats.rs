//! Corpus statistics for candidate rules: direction, G-test, Cramér's φ,
//! coverage and precision, plus Spearman correlation between rankings.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::featurize::{DesignMatrix, Feature};

/// p-value threshold for significance.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    #[serde(rename = "Q")]
    Q,
    #[serde(rename = "notQ")]
    NotQ,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Q => "Q",
            Direction::NotQ => "¬Q",
        }
    }
}

/// `#(S)`, `#(S∧Q)`, `#(S∧P)`, `#(S∧P∧Q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RuleCounts {
    pub scope: usize,
    pub scope_q: usize,
    pub scope_p: usize,
    pub scope_p_q: usize,
}

impl RuleCounts {
    pub fn new(scope: usize, scope_q: usize, scope_p: usize, scope_p_q: usize) -> Result<Self> {
        let c = Self {
            scope,
            scope_q,
            scope_p,
            scope_p_q,
        };
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InconsistentCounts(m));
        if self.scope_q > self.scope || self.scope_p > self.scope {
            return bad(format!("{self:?}: subset larger than scope"));
        }
        if self.scope_p_q > self.scope_p.min(self.scope_q) {
            return bad(format!("{self:?}: #(S∧P∧Q) exceeds #(S∧P) or #(S∧Q)"));
        }
        if self.scope_p - self.scope_p_q > self.scope - self.scope_q {
            return bad(format!("{self:?}: #(S∧P∧¬Q) exceeds #(S∧¬Q)"));
        }
        Ok(())
    }

    pub fn from_matrix(matrix: &DesignMatrix, feature: usize) -> Self {
        let col = matrix.column(feature);
        Self {
            scope: matrix.n_rows(),
            scope_q: matrix.positives(),
            scope_p: col.len(),
            scope_p_q: col.iter().filter(|&&i| matrix.labels()[i as usize]).count(),
        }
    }

    pub fn mu(&self) -> f64 {
        self.scope_q as f64 / self.scope as f64
    }

    pub fn alpha(&self) -> f64 {
        self.scope_p_q as f64 / self.scope_p as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GTest {
    pub g: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// `x·ln(x/q)` with `0·ln 0 = 0`.
fn xlogx_over(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / q).ln()
    }
}

/// `G = 2n(α ln(α/μ) + (1−α) ln((1−α)/(1−μ)))`, p-value from χ² with one
/// degree of freedom.
pub fn g_test(n: usize, alpha: f64, mu: f64) -> Result<GTest> {
    if n == 0 {
        return Err(Error::InvalidArgument("g_test requires n >= 1".into()));
    }
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} and mu {mu} must lie in [0, 1]")));
    }
    if mu <= 0.0 || mu >= 1.0 {
        return Err(Error::DegenerateBase { mu });
    }
    let kl = xlogx_over(alpha, mu) + xlogx_over(1.0 - alpha, 1.0 - mu);
    let g = (2.0 * n as f64 * kl).max(0.0);
    let p_value = chi2_1_sf(g);
    Ok(GTest {
        g,
        p_value,
        significant: p_value < SIGNIFICANCE_LEVEL,
    })
}

/// Upper tail of χ² with one degree of freedom.
pub fn chi2_1_sf(g: f64) -> f64 {
    erfc((g / 2.0).sqrt())
}

/// Cramér's φ for a 2×2 table, `√(G/n)`.
pub fn cramers_phi(g: f64, n: usize) -> f64 {
    (g / n as f64).sqrt()
}

/// Coverage and precision of P for the given direction.
pub fn coverage_precision(counts: &RuleCounts, direction: Direction) -> Result<(f64, f64)> {
    counts.check()?;
    if counts.scope_p == 0 {
        return Err(Error::ZeroDenominator("#(S∧P)"));
    }
    let (hits, base) = match direction {
        Direction::Q => {
            if counts.scope_q == 0 {
                return Err(Error::ZeroDenominator("#(S∧Q)"));
            }
            (counts.scope_p_q, counts.scope_q)
        }
        Direction::NotQ => {
            let not_q = counts.scope - counts.scope_q;
            if not_q == 0 {
                return Err(Error::ZeroDenominator("#(S∧¬Q)"));
            }
            (counts.scope_p - counts.scope_p_q, not_q)
        }
    };
    Ok((hits as f64 / base as f64, hits as f64 / counts.scope_p as f64))
}

/// A feature annotated as a rule. For `NotQ`, `alpha` and `mu` are the
/// frequencies of ¬Q (`#(S∧P∧¬Q)/#(S∧P)`, `#(S∧¬Q)/#(S)`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleRecord {
    pub feature: usize,
    pub pattern: String,
    pub direction: Direction,
    pub n: usize,
    pub alpha: f64,
    pub mu: f64,
    pub g: f64,
    pub p_value: f64,
    pub significant: bool,
    pub phi_c: f64,
    pub coverage: f64,
    pub precision: f64,
    pub path_rank: usize,
    pub counts: RuleCounts,
}

pub fn compute_rule_from_counts(
    feature: &Feature,
    counts: RuleCounts,
    path_rank: usize,
) -> Result<RuleRecord> {
    counts.check()?;
    if counts.scope_p == 0 {
        return Err(Error::ZeroDenominator("#(S∧P)"));
    }
    let alpha = counts.alpha();
    let mu = counts.mu();
    let (direction, alpha_r, mu_r) = if alpha >= mu {
        (Direction::Q, alpha, mu)
    } else {
        // from counts rather than 1 − α, so the record recomputes exactly
        let not_alpha = (counts.scope_p - counts.scope_p_q) as f64 / counts.scope_p as f64;
        let not_mu = (counts.scope - counts.scope_q) as f64 / counts.scope as f64;
        (Direction::NotQ, not_alpha, not_mu)
    };
    let gt = g_test(counts.scope_p, alpha_r, mu_r)?;
    let (coverage, precision) = coverage_precision(&counts, direction)?;
    Ok(RuleRecord {
        feature: feature.id,
        pattern: feature.pattern(),
        direction,
        n: counts.scope_p,
        alpha: alpha_r,
        mu: mu_r,
        g: gt.g,
        p_value: gt.p_value,
        significant: gt.significant,
        phi_c: cramers_phi(gt.g, counts.scope_p),
        coverage,
        precision,
        path_rank,
        counts,
    })
}

pub fn compute_rule(feature: &Feature, matrix: &DesignMatrix, path_rank: usize) -> Result<RuleRecord> {
    compute_rule_from_counts(feature, RuleCounts::from_matrix(matrix, feature.id), path_rank)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankComparison {
    pub rho: f64,
    pub p_value: f64,
    pub n_items: usize,
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of two fractional rankings. Ranks are multiples of
/// ½, so the centred sums are computed exactly on doubled ranks; the only
/// rounding is in the final ratio (a single division when both rankings
/// have the same spread, as without ties).
fn pearson_on_ranks(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as i128;
    let twice = |r: &f64| (2.0 * r) as i128;
    let (x, y): (Vec<i128>, Vec<i128>) = (a.iter().map(twice).collect(), b.iter().map(twice).collect());
    let sx: i128 = x.iter().sum();
    let sy: i128 = y.iter().sum();
    let sxy = n * x.iter().zip(&y).map(|(p, q)| p * q).sum::<i128>() - sx * sy;
    let sxx = n * x.iter().map(|p| p * p).sum::<i128>() - sx * sx;
    let syy = n * y.iter().map(|q| q * q).sum::<i128>() - sy * sy;
    if sxx == 0 || syy == 0 {
        return None;
    }
    let rho = if sxx == syy {
        sxy as f64 / sxx as f64
    } else {
        sxy as f64 / ((sxx as f64).sqrt() * (syy as f64).sqrt())
    };
    Some(rho.clamp(-1.0, 1.0))
}

/// Spearman's ρ on fractional ranks (Pearson on ranks), two-sided p-value
/// from the t approximation with `n − 2` degrees of freedom.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<RankComparison> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("spearman needs at least 3 items, got {n}")));
    }
    let rho = pearson_on_ranks(&fractional_ranks(a), &fractional_ranks(b))
        .ok_or_else(|| Error::InvalidArgument("spearman is undefined for constant rankings".into()))?;
    let df = (n - 2) as f64;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(RankComparison {
        rho,
        p_value,
        n_items: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::{Attribute, FeatureAtom};
    use crate::query::NodeRole;

    fn feature() -> Feature {
        Feature {
            id: 0,
            atoms: vec![FeatureAtom::new(NodeRole::Dep, Attribute::Upos, "ADJ")],
            support: 50,
        }
    }

    #[test]
    fn inconsistent_counts_rejected() {
        assert!(RuleCounts::new(100, 28, 50, 49).is_err());
        assert!(RuleCounts::new(100, 90, 50, 10).is_err()); // 40 ¬Q hits, only 10 ¬Q in scope
        assert!(RuleCounts::new(100, 80, 50, 40).is_ok());
    }

    #[test]
    fn coverage_precision_table() {
        let c = RuleCounts::new(200, 80, 50, 40).unwrap();
        assert_eq!(coverage_precision(&c, Direction::Q).unwrap(), (0.5, 0.8));
        let c = RuleCounts::new(100, 30, 20, 0).unwrap();
        let (cov, prec) = coverage_precision(&c, Direction::NotQ).unwrap();
        assert_eq!(prec, 1.0);
        assert!((cov - 20.0 / 70.0).abs() < 1e-15);
        let none_q = RuleCounts::new(10, 0, 5, 0).unwrap();
        assert!(matches!(
            coverage_precision(&none_q, Direction::Q),
            Err(Error::ZeroDenominator("#(S∧Q)"))
        ));
    }

    #[test]
    fn g_test_basics() {
        let r = g_test(37, 0.4, 0.4).unwrap();
        assert_eq!((r.g, r.p_value, r.significant), (0.0, 1.0, false));
        let r = g_test(100, 0.9, 0.5).unwrap();
        let expected = 200.0 * (0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln());
        assert!((r.g - expected).abs() < 1e-12);
        assert!((r.g - 73.6128).abs() < 1e-4);
        assert!(r.significant);
        assert!(matches!(g_test(10, 0.5, 1.0), Err(Error::DegenerateBase { .. })));
        assert!(matches!(g_test(10, 0.5, 0.0), Err(Error::DegenerateBase { .. })));
        assert!(g_test(0, 0.5, 0.5).is_err());
        // α at the boundary uses 0·ln 0 = 0
        let r = g_test(10, 1.0, 0.5).unwrap();
        assert!((r.g - 20.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn g_symmetry() {
        for &(a, m) in &[(0.9, 0.3), (0.05, 0.7), (0.5, 0.51)] {
            let x = g_test(40, a, m).unwrap().g;
            let y = g_test(40, 1.0 - a, 1.0 - m).unwrap().g;
            assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn phi() {
        assert_eq!(cramers_phi(0.0, 10), 0.0);
        assert!((cramers_phi(73.6159, 100) - 0.8580).abs() < 1e-4);
        assert_eq!(cramers_phi(42.0, 42), 1.0);
    }

    #[test]
    fn rule_direction() {
        let f = feature();
        let r = compute_rule_from_counts(&f, RuleCounts::new(200, 80, 50, 40).unwrap(), 1).unwrap();
        assert_eq!(r.direction, Direction::Q);
        assert_eq!((r.alpha, r.mu, r.precision, r.coverage), (0.8, 0.4, 0.8, 0.5));

        let r = compute_rule_from_counts(&f, RuleCounts::new(200, 80, 50, 5).unwrap(), 2).unwrap();
        assert_eq!(r.direction, Direction::NotQ);
        assert!((r.alpha - 0.9).abs() < 1e-15 && (r.mu - 0.6).abs() < 1e-15);
        assert_eq!(r.precision, r.alpha);
        assert!((r.coverage - 45.0 / 120.0).abs() < 1e-15);

        // α = μ: direction Q, G = 0
        let r = compute_rule_from_counts(&f, RuleCounts::new(100, 40, 50, 20).unwrap(), 3).unwrap();
        assert_eq!(r.direction, Direction::Q);
        assert_eq!(r.g, 0.0);
        assert!(!r.significant);

        assert!(compute_rule_from_counts(&f, RuleCounts::new(10, 5, 0, 0).unwrap(), 1).is_err());
    }

    #[test]
    fn fractional_ranking() {
        assert_eq!(fractional_ranks(&[10.0, 30.0, 20.0]), vec![1.0, 3.0, 2.0]);
        assert_eq!(fractional_ranks(&[1.0, 1.0, 2.0, 1.0]), vec![2.0, 2.0, 4.0, 2.0]);
    }

    #[test]
    fn spearman_examples() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(spearman(&a, &a).unwrap().rho, 1.0);
        let rev: Vec<f64> = a.iter().rev().copied().collect();
        assert_eq!(spearman(&a, &rev).unwrap().rho, -1.0);
        let r = spearman(&a, &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((r.rho - 0.8).abs() < 1e-12);
        assert!(r.p_value > 0.0 && r.p_value < 1.0);
        assert!(spearman(&a, &a[..4]).is_err());
        assert!(spearman(&a[..2], &a[..2]).is_err());
        assert!(spearman(&a, &[1.0; 5]).is_err());
    }
}
