//! Analytic hierarchy process: judgment matrices, the sum-method eigenvector
//! estimate, hierarchical (total-layer) ranking and consistency checks.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::objectives::PatternWeights;
use crate::patterns::DrivingPattern;
use crate::{Error, Result};

/// Tolerance for the reciprocal-matrix conditions.
pub const RECIPROCAL_TOL: f64 = 1e-9;

/// Consistency ratio below which a judgment matrix is accepted.
pub const CR_THRESHOLD: f64 = 0.1;

/// Mean random consistency index for orders 1 through 15.
pub const RANDOM_INDEX: [f64; 15] = [
    0.0, 0.0, 0.58, 0.9, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49, 1.52, 1.54, 1.56, 1.58, 1.59,
];

/// The 1–9 pairwise comparison scale. Documentation only: entries are not
/// required to come from it.
pub const SAATY_SCALE: [(f64, &str); 6] = [
    (1.0, "equal importance"),
    (3.0, "slightly more important"),
    (5.0, "obviously more important"),
    (7.0, "strongly more important"),
    (9.0, "extremely more important"),
    (f64::NAN, "2, 4, 6, 8: between adjacent judgments"),
];

/// Positive reciprocal pairwise-comparison matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl JudgmentMatrix {
    /// Build and validate from rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("judgment matrix"));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Shape(alloc::format!(
                    "judgment matrix row {} has {} entries, expected {}",
                    i,
                    r.len(),
                    n
                )));
            }
            entries.extend_from_slice(r);
        }
        validate(Self { n, entries })
    }

    /// Consistent matrix `a_ij = w_i / w_j`.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = w.iter().map(|wi| w.iter().map(|wj| wi / wj).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// Apply a simultaneous row/column permutation: entry `(i, j)` of the
    /// result is entry `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Shape("permutation length differs from order".into()));
        }
        let rows: Vec<Vec<f64>> = perm
            .iter()
            .map(|&pi| perm.iter().map(|&pj| self.get(pi, pj)).collect())
            .collect();
        Self::from_rows(&rows)
    }
}

/// Check `a_ii = 1`, `a_ij > 0` and `a_ji = 1 / a_ij`.
pub fn validate(m: JudgmentMatrix) -> Result<JudgmentMatrix> {
    let n = m.n;
    for i in 0..n {
        for j in 0..n {
            let a = m.get(i, j);
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::Judgment {
                    row: i,
                    col: j,
                    reason: "entry must be positive and finite",
                });
            }
            if i == j && (a - 1.0).abs() > RECIPROCAL_TOL {
                return Err(Error::Judgment {
                    row: i,
                    col: j,
                    reason: "diagonal entry must be 1",
                });
            }
            if j > i && (m.get(j, i) - 1.0 / a).abs() > RECIPROCAL_TOL {
                return Err(Error::Judgment {
                    row: i,
                    col: j,
                    reason: "a_ji must equal 1 / a_ij",
                });
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumMethodResult {
    pub weights: Vec<f64>,
    pub lambda_max: f64,
}

/// Sum-method estimate of the principal eigenpair.
///
/// Columns are normalised to unit sum, the rows of the normalised matrix are
/// summed and renormalised to give the weights, and the eigenvalue is the
/// mean of `(Aθ)_i / θ_i`.
pub fn sum_method(m: &JudgmentMatrix) -> SumMethodResult {
    let n = m.n;
    let col_sums: Vec<f64> = (0..n).map(|j| (0..n).map(|i| m.get(i, j)).sum()).collect();
    let row_sums: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| m.get(i, j) / col_sums[j]).sum())
        .collect();
    let total: f64 = row_sums.iter().sum();
    let weights: Vec<f64> = row_sums.iter().map(|r| r / total).collect();
    let lambda_max = (0..n)
        .map(|i| {
            let a_theta: f64 = (0..n).map(|j| m.get(i, j) * weights[j]).sum();
            a_theta / weights[i]
        })
        .sum::<f64>()
        / n as f64;
    SumMethodResult { weights, lambda_max }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub ci: f64,
    pub ri: f64,
    pub cr: f64,
    pub pass: bool,
}

pub fn random_index(n: usize) -> Result<f64> {
    if n == 0 || n > RANDOM_INDEX.len() {
        return Err(Error::UnsupportedOrder(n));
    }
    Ok(RANDOM_INDEX[n - 1])
}

/// `CI = (λ − n)/(n − 1)`, `CR = CI/RI`; orders 1 and 2 are consistent by
/// definition.
pub fn consistency(lambda_max: f64, n: usize) -> Result<ConsistencyReport> {
    let ri = random_index(n)?;
    if n <= 2 {
        return Ok(ConsistencyReport {
            ci: 0.0,
            ri,
            cr: 0.0,
            pass: true,
        });
    }
    let ci = (lambda_max - n as f64) / (n as f64 - 1.0);
    let cr = ci / ri;
    Ok(ConsistencyReport {
        ci,
        ri,
        cr,
        pass: cr < CR_THRESHOLD,
    })
}

/// Combine layer rankings: `b_i = Σ_j a_j · b_i^j`. Elements unrelated to an
/// upper element carry a zero in that element's vector.
pub fn total_ranking(upper: &[f64], lower: &[Vec<f64>]) -> Result<Vec<f64>> {
    if upper.len() != lower.len() {
        return Err(Error::Shape(alloc::format!(
            "{} upper weights but {} lower rankings",
            upper.len(),
            lower.len()
        )));
    }
    let m = lower.first().map(Vec::len).ok_or(Error::Empty("lower rankings"))?;
    if let Some(bad) = lower.iter().position(|b| b.len() != m) {
        return Err(Error::Shape(alloc::format!("lower ranking {bad} has a different length")));
    }
    let mut out = alloc::vec![0.0; m];
    for (a, b) in upper.iter().zip(lower) {
        for (o, bi) in out.iter_mut().zip(b) {
            *o += a * bi;
        }
    }
    Ok(out)
}

/// Bundled judgment matrices over (economy, power, generation) for low,
/// medium and high speed operation.
pub fn bundled_matrix(pattern: DrivingPattern) -> JudgmentMatrix {
    use alloc::vec;
    let rows = match pattern {
        DrivingPattern::LowSpeed => vec![
            vec![1.0, 1.0 / 5.0, 1.0 / 9.0],
            vec![5.0, 1.0, 1.0 / 7.0],
            vec![9.0, 7.0, 1.0],
        ],
        DrivingPattern::MediumSpeed => vec![
            vec![1.0, 5.0, 9.0],
            vec![1.0 / 5.0, 1.0, 3.0],
            vec![1.0 / 9.0, 1.0 / 3.0, 1.0],
        ],
        DrivingPattern::HighSpeed => vec![
            vec![1.0, 1.0 / 9.0, 1.0 / 3.0],
            vec![9.0, 1.0, 7.0],
            vec![3.0, 1.0 / 7.0, 1.0],
        ],
    };
    JudgmentMatrix::from_rows(&rows).expect("bundled matrices are reciprocal")
}

/// Runtime weight triples `(economy, power, generation)` per pattern.
pub fn default_weights(pattern: DrivingPattern) -> PatternWeights {
    let (a1, a2, a3) = match pattern {
        DrivingPattern::LowSpeed => (0.05, 0.29, 0.66),
        DrivingPattern::MediumSpeed => (0.67, 0.27, 0.06),
        DrivingPattern::HighSpeed => (0.15, 0.78, 0.07),
    };
    PatternWeights {
        alpha1: a1,
        alpha2: a2,
        alpha3: a3,
    }
}

/// Eigenvectors and eigenvalues originally reported for the bundled
/// matrices. Kept as reference metadata: they do not agree with a direct
/// computation on the matrices, and the low-speed vector lists the power and
/// generation components in the opposite order to [`default_weights`].
pub fn reported_eigen(pattern: DrivingPattern) -> ([f64; 3], f64) {
    match pattern {
        DrivingPattern::LowSpeed => ([0.05, 0.66, 0.29], 3.08),
        DrivingPattern::MediumSpeed => ([0.67, 0.27, 0.06], 3.03),
        DrivingPattern::HighSpeed => ([0.15, 0.78, 0.07], 3.08),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// The fixed triples of [`default_weights`].
    #[default]
    Constants,
    /// Sum method on [`bundled_matrix`].
    Recompute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsReport {
    pub pattern: DrivingPattern,
    pub weights: PatternWeights,
    pub sum_method: Option<SumMethodResult>,
    pub consistency: Option<ConsistencyReport>,
    pub warning: Option<String>,
}

pub fn pattern_weights(pattern: DrivingPattern, mode: WeightMode) -> WeightsReport {
    match mode {
        WeightMode::Constants => WeightsReport {
            pattern,
            weights: default_weights(pattern),
            sum_method: None,
            consistency: None,
            warning: None,
        },
        WeightMode::Recompute => {
            let m = bundled_matrix(pattern);
            let res = sum_method(&m);
            let rep = consistency(res.lambda_max, m.order()).expect("order 3 is tabulated");
            let warning = (!rep.pass).then(|| {
                alloc::format!(
                    "{} matrix fails the consistency check (CR = {:.4} >= {})",
                    pattern.name(),
                    rep.cr,
                    CR_THRESHOLD
                )
            });
            let weights = PatternWeights {
                alpha1: res.weights[0],
                alpha2: res.weights[1],
                alpha3: res.weights[2],
            };
            WeightsReport {
                pattern,
                weights,
                sum_method: Some(res),
                consistency: Some(rep),
                warning,
            }
        }
    }
}
