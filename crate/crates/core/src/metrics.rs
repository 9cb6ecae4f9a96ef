//! Pairwise disagreement metrics between two attributions of the same
//! prediction.
//!
//! The four top-k metrics compare the `k` largest-magnitude features of each
//! explanation and are increasingly strict:
//!
//! | metric | a shared top-k feature counts when |
//! |---|---|
//! | feature agreement | always |
//! | rank agreement | it sits at the same position in both lists |
//! | sign agreement | its sign matches |
//! | signed rank agreement | both position and sign match |
//!
//! Each is `count / k`. The remaining two compare the ordering of a chosen
//! feature subset `F`: Spearman's rank correlation and the fraction of
//! feature pairs whose relative order agrees.
//!
//! Conventions:
//! - top-k order is descending `|value|`, ties broken by ascending index;
//! - `sign(0) = 0`, so two zeros match and zero vs non-zero does not;
//! - subset metrics rank magnitudes by default ([`RankingBasis::Magnitude`]).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    FeatureAgreement,
    RankAgreement,
    SignAgreement,
    SignedRankAgreement,
    RankCorrelation,
    PairwiseRankAgreement,
}

impl MetricId {
    pub const ALL: [MetricId; 6] = [
        MetricId::FeatureAgreement,
        MetricId::RankAgreement,
        MetricId::SignAgreement,
        MetricId::SignedRankAgreement,
        MetricId::RankCorrelation,
        MetricId::PairwiseRankAgreement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::FeatureAgreement => "feature_agreement",
            MetricId::RankAgreement => "rank_agreement",
            MetricId::SignAgreement => "sign_agreement",
            MetricId::SignedRankAgreement => "signed_rank_agreement",
            MetricId::RankCorrelation => "rank_correlation",
            MetricId::PairwiseRankAgreement => "pairwise_rank_agreement",
        }
    }

    /// Whether the metric is parameterized by `k` (otherwise by a subset).
    pub fn is_top_k(self) -> bool {
        matches!(
            self,
            MetricId::FeatureAgreement
                | MetricId::RankAgreement
                | MetricId::SignAgreement
                | MetricId::SignedRankAgreement
        )
    }

    /// Closed range of attainable values.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            MetricId::RankCorrelation => (-1.0, 1.0),
            _ => (0.0, 1.0),
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = MetricId::ALL.iter().map(|m| m.as_str()).collect();
                Error::Config(format!("unknown metric `{s}`; valid: {}", valid.join(", ")))
            })
    }
}

/// `-1`, `0` or `+1`.
pub fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// The `k` most important features, most important first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopKSelection {
    k: usize,
    features: Vec<usize>,
}

impl TopKSelection {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    /// 0-based position of `feature`, if selected.
    pub fn rank_of(&self, feature: usize) -> Option<usize> {
        self.features.iter().position(|&f| f == feature)
    }
}

fn magnitude_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| {
        values[j]
            .abs()
            .total_cmp(&values[i].abs())
            .then(i.cmp(&j))
    });
    idx
}

fn check_k(d: usize, k: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::Metric(format!("k={k} outside 1..={d}")));
    }
    Ok(())
}

pub fn top_features(values: &[f64], k: usize) -> Result<TopKSelection> {
    check_k(values.len(), k)?;
    let mut features = magnitude_order(values);
    features.truncate(k);
    Ok(TopKSelection { k, features })
}

#[derive(Clone, Copy)]
struct TopKMatch {
    shared: usize,
    same_rank: usize,
    same_sign: usize,
    same_both: usize,
}

fn top_k_match(a: &[f64], b: &[f64], k: usize) -> Result<TopKMatch> {
    Error::check_dim(a.len(), b.len())?;
    let ta = top_features(a, k)?;
    let tb = top_features(b, k)?;
    let mut m = TopKMatch {
        shared: 0,
        same_rank: 0,
        same_sign: 0,
        same_both: 0,
    };
    for (ra, &f) in ta.features().iter().enumerate() {
        let Some(rb) = tb.rank_of(f) else { continue };
        let rank_ok = ra == rb;
        let sign_ok = sign(a[f]) == sign(b[f]);
        m.shared += 1;
        m.same_rank += usize::from(rank_ok);
        m.same_sign += usize::from(sign_ok);
        m.same_both += usize::from(rank_ok && sign_ok);
    }
    Ok(m)
}

/// `|top_k(a) ∩ top_k(b)| / k`.
pub fn feature_agreement(a: &[f64], b: &[f64], k: usize) -> Result<f64> {
    Ok(top_k_match(a, b, k)?.shared as f64 / k as f64)
}

/// Shared top-k features that also hold the same position, over `k`.
pub fn rank_agreement(a: &[f64], b: &[f64], k: usize) -> Result<f64> {
    Ok(top_k_match(a, b, k)?.same_rank as f64 / k as f64)
}

/// Shared top-k features with the same sign, over `k`.
pub fn sign_agreement(a: &[f64], b: &[f64], k: usize) -> Result<f64> {
    Ok(top_k_match(a, b, k)?.same_sign as f64 / k as f64)
}

/// Shared top-k features with the same position and sign, over `k`.
pub fn signed_rank_agreement(a: &[f64], b: &[f64], k: usize) -> Result<f64> {
    Ok(top_k_match(a, b, k)?.same_both as f64 / k as f64)
}

/// Distinct feature indices of interest, at least two of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSubset(Vec<usize>);

impl FeatureSubset {
    pub fn new(indices: Vec<usize>, d: usize) -> Result<Self> {
        if indices.len() < 2 {
            return Err(Error::Metric("feature subset needs at least 2 features".into()));
        }
        let mut seen = vec![false; d];
        for &i in &indices {
            if i >= d {
                return Err(Error::Metric(format!("feature index {i} out of range for d={d}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Metric(format!("feature index {i} listed twice")));
            }
        }
        Ok(Self(indices))
    }

    pub fn all(d: usize) -> Result<Self> {
        Self::new((0..d).collect(), d)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn is_all(&self, d: usize) -> bool {
        self.0.len() == d && self.0.iter().enumerate().all(|(i, &f)| i == f)
    }

    /// `all` for the full feature set, otherwise `;`-joined indices.
    pub fn descriptor(&self, d: usize) -> String {
        if self.is_all(d) {
            "all".to_owned()
        } else {
            self.0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
        }
    }

    fn check(&self, d: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i >= d) {
            Some(i) => Err(Error::Metric(format!("feature index {i} out of range for d={d}"))),
            None => Ok(()),
        }
    }
}

/// What the subset metrics rank features by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingBasis {
    #[default]
    Magnitude,
    Signed,
}

impl RankingBasis {
    fn key(self, v: f64) -> f64 {
        match self {
            RankingBasis::Magnitude => v.abs(),
            RankingBasis::Signed => v,
        }
    }
}

/// Spearman coefficient. `degenerate` marks an all-tied side, for which the
/// coefficient is undefined and reported as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    pub degenerate: bool,
}

/// Twice the average (fractional) rank of each key, so ties stay integral.
fn doubled_ranks(keys: &[f64]) -> Vec<i64> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&i, &j| keys[i].total_cmp(&keys[j]));
    let mut ranks = vec![0i64; keys.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && keys[order[end]] == keys[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end averaged, doubled
        let doubled = (start + 1 + end) as i64;
        for &i in &order[start..end] {
            ranks[i] = doubled;
        }
        start = end;
    }
    ranks
}

fn subset_keys(values: &[f64], subset: &FeatureSubset, basis: RankingBasis) -> Vec<f64> {
    subset.indices().iter().map(|&i| basis.key(values[i])).collect()
}

/// Pearson correlation of average ranks (tie-corrected Spearman), computed
/// in exact integer arithmetic up to the final division.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Correlation> {
    Error::check_dim(a.len(), b.len())?;
    if a.len() < 2 {
        return Err(Error::Metric("Spearman needs at least 2 observations".into()));
    }
    let n = a.len() as i128;
    let ra = doubled_ranks(a);
    let rb = doubled_ranks(b);
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&x, &y) in ra.iter().zip(&rb) {
        let (x, y) = (x as i128, y as i128);
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    let cov = n * sab - sa * sb;
    let va = n * saa - sa * sa;
    let vb = n * sbb - sb * sb;
    if va == 0 || vb == 0 {
        return Ok(Correlation {
            value: 0.0,
            degenerate: true,
        });
    }
    let value = (cov as f64 / ((va as f64) * (vb as f64)).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation {
        value,
        degenerate: false,
    })
}

pub fn rank_correlation(a: &[f64], b: &[f64], subset: &FeatureSubset) -> Result<Correlation> {
    rank_correlation_by(a, b, subset, RankingBasis::Magnitude)
}

pub fn rank_correlation_by(
    a: &[f64],
    b: &[f64],
    subset: &FeatureSubset,
    basis: RankingBasis,
) -> Result<Correlation> {
    Error::check_dim(a.len(), b.len())?;
    subset.check(a.len())?;
    spearman(&subset_keys(a, subset, basis), &subset_keys(b, subset, basis))
}

pub fn pairwise_rank_agreement(a: &[f64], b: &[f64], subset: &FeatureSubset) -> Result<f64> {
    pairwise_rank_agreement_by(a, b, subset, RankingBasis::Magnitude)
}

/// Fraction of subset pairs `(i, j)` whose relative order is the same in
/// both explanations. The comparison is three-way: a tie on one side and a
/// strict order on the other is a disagreement, a tie on both sides agrees.
pub fn pairwise_rank_agreement_by(
    a: &[f64],
    b: &[f64],
    subset: &FeatureSubset,
    basis: RankingBasis,
) -> Result<f64> {
    Error::check_dim(a.len(), b.len())?;
    subset.check(a.len())?;
    let ka = subset_keys(a, subset, basis);
    let kb = subset_keys(b, subset, basis);
    let m = ka.len();
    let mut agree = 0usize;
    for i in 0..m {
        for j in i + 1..m {
            let oa = ka[i].partial_cmp(&ka[j]).unwrap_or(Ordering::Equal);
            let ob = kb[i].partial_cmp(&kb[j]).unwrap_or(Ordering::Equal);
            agree += usize::from(oa == ob);
        }
    }
    Ok(agree as f64 / (m * (m - 1) / 2) as f64)
}

/// What a metric is evaluated over.
#[derive(Debug, Clone, Copy)]
pub enum MetricScope<'a> {
    TopK(usize),
    Subset(&'a FeatureSubset, RankingBasis),
}

/// Evaluates one metric. Degenerate rank correlations come back as 0.
pub fn evaluate(metric: MetricId, a: &[f64], b: &[f64], scope: MetricScope<'_>) -> Result<f64> {
    match (metric, scope) {
        (MetricId::FeatureAgreement, MetricScope::TopK(k)) => feature_agreement(a, b, k),
        (MetricId::RankAgreement, MetricScope::TopK(k)) => rank_agreement(a, b, k),
        (MetricId::SignAgreement, MetricScope::TopK(k)) => sign_agreement(a, b, k),
        (MetricId::SignedRankAgreement, MetricScope::TopK(k)) => signed_rank_agreement(a, b, k),
        (MetricId::RankCorrelation, MetricScope::Subset(f, basis)) => {
            Ok(rank_correlation_by(a, b, f, basis)?.value)
        }
        (MetricId::PairwiseRankAgreement, MetricScope::Subset(f, basis)) => {
            pairwise_rank_agreement_by(a, b, f, basis)
        }
        (m, _) => Err(Error::Metric(format!("{m} evaluated with the wrong scope"))),
    }
}
