//! Rank-sum and one-way ANOVA tests, plus average ranking across networks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "+")]
    Better,
    #[serde(rename = "≈")]
    Similar,
    #[serde(rename = "-")]
    Worse,
}

impl Decision {
    pub fn symbol(&self) -> &'static str {
        match self {
            Decision::Better => "+",
            Decision::Similar => "≈",
            Decision::Worse => "-",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Decision> {
        match s {
            "+" => Some(Decision::Better),
            "≈" | "~" => Some(Decision::Similar),
            "-" => Some(Decision::Worse),
            _ => None,
        }
    }

    pub fn flipped(&self) -> Decision {
        match self {
            Decision::Better => Decision::Worse,
            Decision::Similar => Decision::Similar,
            Decision::Worse => Decision::Better,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSumResult {
    /// Mann-Whitney U of the first sample.
    pub statistic: f64,
    pub p: f64,
    pub exact: bool,
    pub decision: Decision,
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Number of ways to choose `n` of the ranks `1..=n+m` for each achievable
/// Mann-Whitney U of the chosen group, indexed by U.
fn u_distribution(n: usize, m: usize) -> Vec<f64> {
    // f[i][u]: subsets of size i with U = u, built by adding one rank at a time
    let max_u = n * m;
    let mut table = vec![vec![0.0f64; max_u + 1]; n + 1];
    table[0][0] = 1.0;
    for total in 1..=(n + m) {
        for i in (1..=n.min(total)).rev() {
            // choosing element `total` as the i-th smallest of the group adds
            // (total - i) larger-than-others counts relative to earlier picks
            let gain = total - i;
            if gain > m {
                continue;
            }
            for u in (gain..=max_u).rev() {
                let add = table[i - 1][u - gain];
                if add != 0.0 {
                    table[i][u] += add;
                }
            }
        }
    }
    table.swap_remove(n)
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney U) test. Exact when the smaller
/// sample has at most 10 values and there are no ties; otherwise a normal
/// approximation with tie and continuity corrections. The decision is "+"
/// when p < alpha and `x` has the larger median.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64], alpha: f64) -> Result<RankSumResult> {
    if x.len() < 3 || y.len() < 3 {
        return Err(Error::invalid("rank-sum test needs at least 3 values per sample"));
    }
    let (n, m) = (x.len(), y.len());
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = average_ranks(&pooled);
    let r1: f64 = ranks[..n].iter().sum();
    let u1 = r1 - (n * (n + 1)) as f64 / 2.0;
    let nm = (n * m) as f64;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut has_ties = false;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        if t > 1.0 {
            has_ties = true;
            tie_term += t * t * t - t;
        }
        i = j + 1;
    }
    let exact = n.min(m) <= 10 && !has_ties;
    let p = if exact {
        let dist = u_distribution(n, m);
        let total: f64 = dist.iter().sum();
        let u = u1.round() as usize;
        let lower: f64 = dist[..=u].iter().sum::<f64>() / total;
        let upper: f64 = dist[u..].iter().sum::<f64>() / total;
        (2.0 * lower.min(upper)).min(1.0)
    } else {
        let big_n = (n + m) as f64;
        let var = nm / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let u = u1.max(nm - u1);
            let z = (u - nm / 2.0 - 0.5) / var.sqrt();
            let normal = Normal::new(0.0, 1.0).expect("standard normal");
            (2.0 * (1.0 - normal.cdf(z))).clamp(0.0, 1.0)
        }
    };
    let decision = if p < alpha {
        let diff = median(x) - median(y);
        let diff = if diff == 0.0 { mean(x) - mean(y) } else { diff };
        if diff > 0.0 {
            Decision::Better
        } else if diff < 0.0 {
            Decision::Worse
        } else {
            Decision::Similar
        }
    } else {
        Decision::Similar
    };
    Ok(RankSumResult {
        statistic: u1,
        p,
        exact,
        decision,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub p: f64,
    pub different: bool,
}

/// One-way ANOVA. With no within-group variance, F is 0 (p = 1) when the
/// group means also agree, and infinite (p = 0) otherwise.
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    if groups.len() < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(Error::invalid("ANOVA needs at least 2 groups of at least 2 values"));
    }
    let k = groups.len() as f64;
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let ss_between: f64 = groups
        .iter()
        .map(|g| g.len() as f64 * (mean(g) - grand).powi(2))
        .sum();
    let ss_within: f64 = groups
        .iter()
        .map(|g| {
            let m = mean(g);
            g.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        })
        .sum();
    let df1 = k - 1.0;
    let df2 = n as f64 - k;
    let scale = groups.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    let negligible = |ss: f64| ss <= 1e-24 * scale * scale * n as f64;
    let (f, p) = if negligible(ss_within) {
        if negligible(ss_between) {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let f = (ss_between / df1) / (ss_within / df2);
        let dist = FisherSnedecor::new(df1, df2).map_err(|e| Error::invalid(e.to_string()))?;
        (f, 1.0 - dist.cdf(f))
    };
    Ok(AnovaResult {
        f,
        p,
        different: p < 0.05,
    })
}

/// Mean over networks of each arm's rank by mean fitness (rank 1 = highest),
/// ties sharing the average rank. `means[network][arm]`.
pub fn average_rank(means: &[Vec<f64>]) -> Vec<f64> {
    let arms = means.first().map_or(0, Vec::len);
    let mut total = vec![0.0; arms];
    for row in means {
        let negated: Vec<f64> = row.iter().map(|v| -v).collect();
        for (t, r) in total.iter_mut().zip(average_ranks(&negated)) {
            *t += r;
        }
    }
    total.iter().map(|t| t / means.len().max(1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_three_by_three() {
        let r = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], 0.05).unwrap();
        assert!(r.exact);
        assert!((r.p - 0.1).abs() < 1e-12);
        assert_eq!(r.decision, Decision::Similar);
    }

    #[test]
    fn u_distribution_matches_enumeration() {
        for (n, m) in [(3, 3), (4, 2), (5, 4), (2, 7)] {
            let dist = u_distribution(n, m);
            let mut brute = vec![0.0; n * m + 1];
            for mask in 0u32..(1 << (n + m)) {
                if mask.count_ones() as usize != n {
                    continue;
                }
                // U counts (group member, other) pairs with member ranked higher
                let mut u = 0;
                for a in 0..(n + m) {
                    if mask >> a & 1 == 1 {
                        u += (0..a).filter(|&b| mask >> b & 1 == 0).count();
                    }
                }
                brute[u] += 1.0;
            }
            assert_eq!(dist, brute, "n={n} m={m}");
        }
    }

    #[test]
    fn identical_samples_are_similar() {
        let x = [1.0, 5.0, 2.0, 8.0];
        let r = wilcoxon_rank_sum(&x, &x, 0.05).unwrap();
        assert_eq!(r.decision, Decision::Similar);
    }

    #[test]
    fn swapping_samples_flips_decision_not_p() {
        let x: Vec<f64> = (0..12).map(|v| v as f64 * 1.5 + 10.0).collect();
        let y: Vec<f64> = (0..12).map(|v| v as f64).collect();
        let a = wilcoxon_rank_sum(&x, &y, 0.05).unwrap();
        let b = wilcoxon_rank_sum(&y, &x, 0.05).unwrap();
        assert!((a.p - b.p).abs() < 1e-12);
        assert_eq!(a.decision, Decision::Better);
        assert_eq!(b.decision, a.decision.flipped());
    }

    #[test]
    fn anova_fixtures() {
        let r = anova_oneway(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0]]).unwrap();
        assert!((r.f - 3.0).abs() < 1e-12);
        let r = anova_oneway(&[vec![2.0, 2.0], vec![2.0, 2.0, 2.0]]).unwrap();
        assert_eq!((r.f, r.p, r.different), (0.0, 1.0, false));
        let r = anova_oneway(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!(r.f.is_infinite() && r.different);
    }

    #[test]
    fn anova_is_shift_and_scale_invariant() {
        let g = vec![vec![1.0, 4.0, 2.5], vec![3.0, 3.5, 6.0], vec![0.5, 2.0, 1.0, 2.2]];
        let base = anova_oneway(&g).unwrap().f;
        let shifted: Vec<Vec<f64>> = g.iter().map(|v| v.iter().map(|x| x + 100.0).collect()).collect();
        let scaled: Vec<Vec<f64>> = g.iter().map(|v| v.iter().map(|x| x * 7.0).collect()).collect();
        assert!((anova_oneway(&shifted).unwrap().f - base).abs() < 1e-9);
        assert!((anova_oneway(&scaled).unwrap().f - base).abs() < 1e-9);
    }

    #[test]
    fn ranks_share_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        let r = average_rank(&[vec![10.0, 20.0, 20.0], vec![5.0, 1.0, 3.0]]);
        assert_eq!(r, vec![(3.0 + 1.0) / 2.0, (1.5 + 3.0) / 2.0, (1.5 + 2.0) / 2.0]);
    }

    #[test]
    fn small_samples_are_rejected() {
        assert!(wilcoxon_rank_sum(&[1.0, 2.0], &[1.0, 2.0, 3.0], 0.05).is_err());
        assert!(anova_oneway(&[vec![1.0, 2.0]]).is_err());
    }
}
