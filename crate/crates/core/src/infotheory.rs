//! Discrete information measures in bits.
//!
//! Every sum uses the `0 log 0 = 0` convention, so empirical tables with empty
//! cells are accepted as long as they are valid distributions.

use alloc::format;
use alloc::vec::Vec;

use crate::math::{log2, plogp};
use crate::{Error, Result};

/// Absolute tolerance on the total mass of a distribution.
pub const SUM_TOLERANCE: f64 = 1e-9;

fn validate(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("no outcomes".into()));
    }
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
    }
    Ok(())
}

/// A probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate(&probs)?;
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        Ok(Self { probs: alloc::vec![1.0 / n as f64; n] })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// A joint distribution over `rows × cols` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if rows * cols != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} entries for a {rows}x{cols} table",
                probs.len()
            )));
        }
        validate(&probs)?;
        Ok(Self { rows, cols, probs })
    }

    /// Builds a table from nonnegative counts by normalizing.
    pub fn from_counts(rows: usize, cols: usize, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("all counts are zero".into()));
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self::new(rows, cols, probs)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.probs[r * self.cols + c]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.probs.chunks(self.cols).map(|row| row.iter().sum()).collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.cols];
        for row in self.probs.chunks(self.cols) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut probs = alloc::vec![0.0; self.probs.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                probs[c * self.rows + r] = self.get(r, c);
            }
        }
        Self { rows: self.cols, cols: self.rows, probs }
    }
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    // max with 0 removes the -0.0 of a point mass
    (-probs.iter().map(|&p| plogp(p)).sum::<f64>()).max(0.0)
}

pub fn entropy(p: &Distribution) -> f64 {
    entropy_of(&p.probs)
}

pub fn cross_entropy(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: q.len() });
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.probs.iter().zip(&q.probs).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::InfiniteLoss { index: i });
            }
            total -= pi * log2(qi);
        }
    }
    Ok(total)
}

pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: q.len() });
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.probs.iter().zip(&q.probs).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::InfiniteLoss { index: i });
            }
            total += pi * log2(pi / qi);
        }
    }
    Ok(total.max(0.0))
}

/// I(X;Y) where X indexes rows and Y columns.
pub fn mutual_information(j: &JointTable) -> f64 {
    let px = j.row_marginal();
    let py = j.col_marginal();
    let mut total = 0.0;
    for (r, &pr) in px.iter().enumerate() {
        for (c, &pc) in py.iter().enumerate() {
            let pj = j.get(r, c);
            if pj > 0.0 {
                total += pj * log2(pj / (pr * pc));
            }
        }
    }
    total.max(0.0)
}

/// H(X|Y) where X indexes rows and Y columns.
pub fn conditional_entropy(j: &JointTable) -> f64 {
    let py = j.col_marginal();
    let mut total = 0.0;
    for (c, &pc) in py.iter().enumerate() {
        if pc <= 0.0 {
            continue;
        }
        for r in 0..j.rows {
            let pj = j.get(r, c);
            if pj > 0.0 {
                total -= pj * log2(pj / pc);
            }
        }
    }
    total.max(0.0)
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    fn table(rows: usize, cols: usize, v: &[f64]) -> JointTable {
        JointTable::new(rows, cols, v.to_vec()).unwrap()
    }

    // direct summation with std's log2, independent of the libm path
    fn oracle_cross_entropy(p: &[f64], q: &[f64]) -> f64 {
        p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| -a * b.log2()).sum()
    }

    fn oracle_mi(rows: usize, cols: usize, v: &[f64]) -> f64 {
        let mut px = vec![0.0; rows];
        let mut py = vec![0.0; cols];
        for r in 0..rows {
            for c in 0..cols {
                px[r] += v[r * cols + c];
                py[c] += v[r * cols + c];
            }
        }
        let mut s = 0.0;
        for r in 0..rows {
            for c in 0..cols {
                let p = v[r * cols + c];
                if p > 0.0 {
                    s += p * (p / (px[r] * py[c])).log2();
                }
            }
        }
        s
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&Distribution::uniform(4).unwrap()) - 2.0).abs() < 1e-12);
        assert_eq!(entropy(&dist(&[0.0, 1.0, 0.0])), 0.0);
        assert!((entropy(&dist(&[0.5, 0.25, 0.25])) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid() {
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(vec![f64::NAN, 1.0]).is_err());
        assert!(JointTable::new(2, 2, vec![0.5, 0.5, 0.5]).is_err());
        assert!(JointTable::new(1, 2, vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        let u = Distribution::uniform(4).unwrap();
        assert!((cross_entropy(&u, &u).unwrap() - 2.0).abs() < 1e-12);
        let point = dist(&[0.0, 0.0, 1.0, 0.0]);
        assert!((cross_entropy(&point, &u).unwrap() - 2.0).abs() < 1e-12);

        let p = [0.5, 0.5];
        let q = [0.25, 0.75];
        let expected = oracle_cross_entropy(&p, &q);
        assert!((expected - 1.207518749639422).abs() < 1e-12);
        assert!((cross_entropy(&dist(&p), &dist(&q)).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn cross_entropy_reports_infinite_loss() {
        let err = cross_entropy(&dist(&[0.5, 0.5]), &dist(&[1.0, 0.0])).unwrap_err();
        assert_eq!(err, Error::InfiniteLoss { index: 1 });
        assert!(kl_divergence(&dist(&[0.5, 0.5]), &dist(&[1.0, 0.0])).is_err());
        // zero mass on both sides is fine
        assert!(cross_entropy(&dist(&[1.0, 0.0]), &dist(&[1.0, 0.0])).is_ok());
    }

    #[test]
    fn kl_examples() {
        let p = dist(&[0.2, 0.3, 0.5]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert!((kl_divergence(&dist(&[1.0, 0.0]), &dist(&[0.5, 0.5])).unwrap() - 1.0).abs() < 1e-12);
        let expected = oracle_cross_entropy(&[0.5, 0.5], &[0.25, 0.75]) - 1.0;
        let got = kl_divergence(&dist(&[0.5, 0.5]), &dist(&[0.25, 0.75])).unwrap();
        assert!((got - expected).abs() < 1e-10);
        assert!((got - 0.20751874963942196).abs() < 1e-10);
    }

    #[test]
    fn mutual_information_examples() {
        let product = table(2, 3, &[0.06, 0.12, 0.12, 0.14, 0.28, 0.28]);
        assert!(mutual_information(&product).abs() < 1e-12);
        assert!((mutual_information(&table(2, 2, &[0.5, 0.0, 0.0, 0.5])) - 1.0).abs() < 1e-12);

        let v = [0.4, 0.1, 0.1, 0.4];
        let expected = oracle_mi(2, 2, &v);
        assert!((expected - 0.27807190511263774).abs() < 1e-12);
        assert!((mutual_information(&table(2, 2, &v)) - expected).abs() < 1e-10);
    }

    #[test]
    fn conditional_entropy_examples() {
        assert_eq!(conditional_entropy(&table(2, 2, &[0.5, 0.0, 0.0, 0.5])), 0.0);
        assert!((conditional_entropy(&table(2, 2, &[0.25; 4])) - 1.0).abs() < 1e-12);
        let v = [0.4, 0.1, 0.1, 0.4];
        let expected = 1.0 - oracle_mi(2, 2, &v);
        assert!((conditional_entropy(&table(2, 2, &v)) - expected).abs() < 1e-10);
        assert!((expected - 0.7219280948873623).abs() < 1e-12);
    }

    #[test]
    fn conditional_entropy_direction_is_rows_given_cols() {
        // X (rows) is determined by Y (cols) but not vice versa.
        let j = table(2, 2, &[0.5, 0.25, 0.0, 0.25]);
        let hx_given_y = conditional_entropy(&j);
        let hy_given_x = conditional_entropy(&j.transpose());
        assert!((hx_given_y - 0.5).abs() < 1e-12);
        assert!((hy_given_x - 0.6887218755408672).abs() < 1e-12);
    }

    fn normalized(raw: Vec<f64>) -> Vec<f64> {
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    }

    fn random_table() -> impl Strategy<Value = JointTable> {
        (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            proptest::collection::vec(prop_oneof![Just(0.0), 0.001f64..1.0], r * c)
                .prop_filter("some mass", |v| v.iter().sum::<f64>() > 0.0)
                .prop_map(move |v| JointTable::new(r, c, normalized(v)).unwrap())
        })
    }

    fn random_dist(n: usize) -> impl Strategy<Value = Distribution> {
        proptest::collection::vec(0.001f64..1.0, n).prop_map(|v| Distribution::new(normalized(v)).unwrap())
    }

    proptest! {
        #[test]
        fn measures_are_nonnegative(j in random_table()) {
            prop_assert!(mutual_information(&j) >= 0.0);
            prop_assert!(conditional_entropy(&j) >= 0.0);
            let px = Distribution::new(j.row_marginal()).unwrap();
            prop_assert!(entropy(&px) >= 0.0);
        }

        #[test]
        fn chain_identity_and_symmetry(j in random_table()) {
            let mi = mutual_information(&j);
            let hx = entropy_of(&j.row_marginal());
            let hy = entropy_of(&j.col_marginal());
            prop_assert!((mi - (hx - conditional_entropy(&j))).abs() < 1e-10);
            prop_assert!((mi - (hy - conditional_entropy(&j.transpose()))).abs() < 1e-10);
            prop_assert!((mi - mutual_information(&j.transpose())).abs() < 1e-12);
            prop_assert!((mi - oracle_mi(j.rows(), j.cols(), j.probs())).abs() < 1e-10);
        }

        #[test]
        fn cross_entropy_dominates_entropy(p in random_dist(4), q in random_dist(4)) {
            let h = entropy(&p);
            let hpq = cross_entropy(&p, &q).unwrap();
            prop_assert!(hpq >= h - 1e-12);
            prop_assert!((kl_divergence(&p, &q).unwrap() - (hpq - h)).abs() < 1e-10);
            let max_diff = p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if max_diff >= 1e-12 {
                prop_assert!(hpq > h);
            }
        }
    }
}
