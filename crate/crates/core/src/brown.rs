//! Brown clustering over within-sentence word bigrams.
//!
//! The objective of a clustering is the mutual information, in bits, of the
//! cluster bigram table, with cluster marginals taken as the left and right
//! marginals of that table.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Vocab;
use crate::math::log2;
use crate::{Error, Result};

/// Largest number of clusterings [`brute_force_clustering`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// Sparse bigram counts over ids `0..size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigramTable {
    size: usize,
    counts: BTreeMap<(u32, u32), u64>,
    left: Vec<u64>,
    right: Vec<u64>,
    total: u64,
}

impl BigramTable {
    pub fn new(size: usize) -> Self {
        Self { size, counts: BTreeMap::new(), left: vec![0; size], right: vec![0; size], total: 0 }
    }

    pub fn add(&mut self, a: u32, b: u32, n: u64) -> Result<()> {
        for id in [a, b] {
            if id as usize >= self.size {
                return Err(Error::IdOutOfRange { kind: "word", id: id as usize, size: self.size });
            }
        }
        if n == 0 {
            return Ok(());
        }
        *self.counts.entry((a, b)).or_insert(0) += n;
        self.left[a as usize] += n;
        self.right[b as usize] += n;
        self.total += n;
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, a: u32, b: u32) -> u64 {
        self.counts.get(&(a, b)).copied().unwrap_or(0)
    }

    /// Row sums: how often each id is the first word of a pair.
    pub fn left(&self) -> &[u64] {
        &self.left
    }

    /// Column sums: how often each id is the second word of a pair.
    pub fn right(&self) -> &[u64] {
        &self.right
    }

    /// Nonzero cells in `(a, b)` order.
    pub fn cells(&self) -> impl Iterator<Item = (u32, u32, u64)> + '_ {
        self.counts.iter().map(|(&(a, b), &n)| (a, b, n))
    }

    fn active(&self, id: usize) -> bool {
        self.left[id] > 0 || self.right[id] > 0
    }
}

/// Counts consecutive token pairs inside each sentence.
pub fn bigram_counts<S: AsRef<str>>(sentences: &[Vec<S>], vocab: &Vocab) -> BigramTable {
    let mut table = BigramTable::new(vocab.len());
    for s in sentences {
        let ids = vocab.encode(s);
        for w in ids.windows(2) {
            table.add(w[0], w[1], 1).expect("vocab ids are in range");
        }
    }
    table
}

/// A map from word id to a label in `0..labels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    labels: usize,
    assign: Vec<usize>,
}

impl Clustering {
    pub fn new(assign: Vec<usize>, labels: usize) -> Result<Self> {
        if let Some(&bad) = assign.iter().find(|&&c| c >= labels) {
            return Err(Error::BadPartition(format!("label {bad} outside 0..{labels}")));
        }
        Ok(Self { labels, assign })
    }

    /// Every word its own cluster.
    pub fn identity(size: usize) -> Self {
        Self { labels: size.max(1), assign: (0..size).collect() }
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    pub fn label(&self, word: u32) -> usize {
        self.assign[word as usize]
    }

    pub fn len(&self) -> usize {
        self.assign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }
}

fn term(n: u64, l: u64, r: u64, total: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    n / total * log2(n * total / (l as f64 * r as f64))
}

/// Mutual information of the cluster bigram table, in bits.
pub fn brown_objective(clustering: &Clustering, table: &BigramTable) -> Result<f64> {
    if clustering.len() != table.size {
        return Err(Error::LengthMismatch { left: clustering.len(), right: table.size });
    }
    if table.total == 0 {
        return Ok(0.0);
    }
    let c = clustering.labels;
    let mut cells = vec![0u64; c * c];
    let mut left = vec![0u64; c];
    let mut right = vec![0u64; c];
    for (a, b, n) in table.cells() {
        let (ca, cb) = (clustering.label(a), clustering.label(b));
        cells[ca * c + cb] += n;
        left[ca] += n;
        right[cb] += n;
    }
    let total = table.total as f64;
    let mut mi = 0.0;
    for i in 0..c {
        for j in 0..c {
            mi += term(cells[i * c + j], left[i], right[j], total);
        }
    }
    Ok(mi.max(0.0))
}

/// Cluster-level counts during greedy merging. Cluster ids start as word ids;
/// a merge keeps the id of the surviving cluster.
struct MergeState {
    rows: Vec<BTreeMap<usize, u64>>,
    cols: Vec<BTreeMap<usize, u64>>,
    left: Vec<u64>,
    right: Vec<u64>,
    total: f64,
}

impl MergeState {
    fn new(table: &BigramTable) -> Self {
        let mut rows = vec![BTreeMap::new(); table.size];
        let mut cols = vec![BTreeMap::new(); table.size];
        for (a, b, n) in table.cells() {
            rows[a as usize].insert(b as usize, n);
            cols[b as usize].insert(a as usize, n);
        }
        Self { rows, cols, left: table.left.clone(), right: table.right.clone(), total: table.total as f64 }
    }

    fn cell(&self, a: usize, b: usize) -> u64 {
        self.rows[a].get(&b).copied().unwrap_or(0)
    }

    /// Objective terms touching row or column `a` or `b`, each cell once.
    fn touched(&self, a: usize, b: usize) -> f64 {
        let t = self.total;
        let mut s = 0.0;
        for x in [a, b] {
            for (&c, &n) in &self.rows[x] {
                s += term(n, self.left[x], self.right[c], t);
            }
            for (&r, &n) in &self.cols[x] {
                if r != a && r != b {
                    s += term(n, self.left[r], self.right[x], t);
                }
            }
        }
        s
    }

    /// Objective terms of the merged row and column.
    fn merged(&self, a: usize, b: usize) -> f64 {
        let t = self.total;
        let (l, r) = (self.left[a] + self.left[b], self.right[a] + self.right[b]);
        let mut row: BTreeMap<usize, u64> = BTreeMap::new();
        let mut col: BTreeMap<usize, u64> = BTreeMap::new();
        for x in [a, b] {
            for (&c, &n) in &self.rows[x] {
                if c != a && c != b {
                    *row.entry(c).or_insert(0) += n;
                }
            }
            for (&c, &n) in &self.cols[x] {
                if c != a && c != b {
                    *col.entry(c).or_insert(0) += n;
                }
            }
        }
        let own = self.cell(a, a) + self.cell(a, b) + self.cell(b, a) + self.cell(b, b);
        let mut s = term(own, l, r, t);
        s += row.iter().map(|(&c, &n)| term(n, l, self.right[c], t)).sum::<f64>();
        s += col.iter().map(|(&c, &n)| term(n, self.left[c], r, t)).sum::<f64>();
        s
    }

    fn loss(&self, a: usize, b: usize) -> f64 {
        self.touched(a, b) - self.merged(a, b)
    }

    /// Folds cluster `b` into cluster `a`.
    fn merge(&mut self, a: usize, b: usize) {
        let row_b = core::mem::take(&mut self.rows[b]);
        let col_b = core::mem::take(&mut self.cols[b]);
        for (c, n) in row_b {
            self.cols[c].remove(&b);
            let c = if c == b { a } else { c };
            *self.rows[a].entry(c).or_insert(0) += n;
            *self.cols[c].entry(a).or_insert(0) += n;
        }
        for (r, n) in col_b {
            if r == b {
                continue; // self cell already moved with the row
            }
            self.rows[r].remove(&b);
            *self.rows[r].entry(a).or_insert(0) += n;
            *self.cols[a].entry(r).or_insert(0) += n;
        }
        self.left[a] += self.left[b];
        self.right[a] += self.right[b];
        self.left[b] = 0;
        self.right[b] = 0;
    }
}

/// Greedy windowed Brown clustering into `m` clusters.
///
/// The `m` most frequent words start as singleton clusters. Every remaining
/// word, in order of decreasing frequency, joins as an extra singleton and the
/// pair of active clusters whose merge loses the least objective is merged.
/// Words not yet admitted count as singletons when the loss is evaluated.
/// Ties go to the smallest `(i, j)` slot pair; the merged cluster keeps slot
/// `i` and the next admitted word takes slot `j`.
pub fn brown_cluster(table: &BigramTable, vocab: &Vocab, m: usize) -> Result<Clustering> {
    if m == 0 {
        return Err(Error::InvalidHyper("need at least one cluster".into()));
    }
    if vocab.len() != table.size {
        return Err(Error::LengthMismatch { left: vocab.len(), right: table.size });
    }
    let size = table.size;
    if size <= m {
        return Ok(Clustering::identity(size));
    }
    // frequency of a word is the number of pairs it takes part in
    let freq = |w: usize| table.left[w] + table.right[w];
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| freq(b).cmp(&freq(a)).then(a.cmp(&b)));

    let mut state = MergeState::new(table);
    let mut owner: Vec<usize> = (0..size).collect();
    let mut slots: Vec<usize> = order[..m].to_vec();
    for &word in &order[m..] {
        slots.push(word);
        let mut best = (0, 1);
        let mut best_loss = f64::INFINITY;
        for i in 0..slots.len() {
            for j in i + 1..slots.len() {
                let loss = state.loss(slots[i], slots[j]);
                if loss < best_loss {
                    best_loss = loss;
                    best = (i, j);
                }
            }
        }
        let (i, j) = best;
        let (a, b) = (slots[i], slots[j]);
        state.merge(a, b);
        for o in owner.iter_mut().filter(|o| **o == b) {
            *o = a;
        }
        let last = slots.pop().expect("m + 1 slots");
        if j < slots.len() {
            slots[j] = last;
        }
    }
    let mut slot_of = vec![usize::MAX; size];
    for (s, &c) in slots.iter().enumerate() {
        slot_of[c] = s;
    }
    Clustering::new(owner.iter().map(|&c| slot_of[c]).collect(), m)
}

/// Number of partitions of `n` items into at most `m` blocks.
pub fn partition_count(n: usize, m: usize) -> u128 {
    // Stirling numbers of the second kind, row by row
    let mut row = vec![0u128; m + 1];
    row[0] = 1;
    for _ in 0..n {
        for k in (1..=m).rev() {
            row[k] = row[k].saturating_mul(k as u128).saturating_add(row[k - 1]);
        }
        row[0] = 0;
    }
    row.iter().fold(0u128, |a, &b| a.saturating_add(b))
}

/// Exhaustive maximization of [`brown_objective`] over clusterings into at
/// most `m` clusters. Words that never occur in a pair are put in cluster 0.
/// The first optimum in restricted-growth order wins ties.
pub fn brute_force_clustering(table: &BigramTable, vocab: &Vocab, m: usize) -> Result<(Clustering, f64)> {
    if m == 0 {
        return Err(Error::InvalidHyper("need at least one cluster".into()));
    }
    if vocab.len() != table.size {
        return Err(Error::LengthMismatch { left: vocab.len(), right: table.size });
    }
    let active: Vec<usize> = (0..table.size).filter(|&w| table.active(w)).collect();
    let count = partition_count(active.len(), m);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { count, limit: BRUTE_FORCE_LIMIT });
    }
    let k = active.len();
    let mut position = vec![usize::MAX; table.size];
    for (i, &w) in active.iter().enumerate() {
        position[w] = i;
    }
    let cells: Vec<(usize, usize, u64)> =
        table.cells().map(|(a, b, n)| (position[a as usize], position[b as usize], n)).collect();
    let total = table.total as f64;

    let score = |labels: &[usize]| -> f64 {
        let mut grid = vec![0u64; m * m];
        let mut left = vec![0u64; m];
        let mut right = vec![0u64; m];
        for &(a, b, n) in &cells {
            let (ca, cb) = (labels[a], labels[b]);
            grid[ca * m + cb] += n;
            left[ca] += n;
            right[cb] += n;
        }
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += term(grid[i * m + j], left[i], right[j], total);
            }
        }
        s
    };

    // restricted growth strings: labels[0] = 0, labels[i] <= 1 + max(labels[..i])
    let mut labels = vec![0usize; k];
    let mut best_labels = labels.clone();
    let mut best = if k == 0 { 0.0 } else { score(&labels) };
    if k > 1 {
        let mut prefix_max = vec![0usize; k];
        loop {
            let mut i = k - 1;
            loop {
                let ceiling = (prefix_max[i - 1] + 1).min(m - 1);
                if labels[i] < ceiling {
                    labels[i] += 1;
                    break;
                }
                labels[i] = 0;
                i -= 1;
                if i == 0 {
                    break;
                }
            }
            if i == 0 {
                break;
            }
            prefix_max[i] = prefix_max[i - 1].max(labels[i]);
            for t in i + 1..k {
                prefix_max[t] = prefix_max[i];
            }
            let s = score(&labels);
            if s > best {
                best = s;
                best_labels.copy_from_slice(&labels);
            }
        }
    }
    let mut assign = vec![0usize; table.size];
    for (i, &w) in active.iter().enumerate() {
        assign[w] = best_labels[i];
    }
    Ok((Clustering::new(assign, m)?, best.max(0.0)))
}
