use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

/// Default cap on the number of words any enumeration may produce.
pub const DEFAULT_WORD_CAP: u64 = 10_000_000;

/// One-sided subshift of finite type over `{0, ..., m-1}`.
///
/// `transition[i][j] == 1` means symbol `j` may follow symbol `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SftSystem {
    label: String,
    size: usize,
    transition: Vec<u8>,
}

/// Validates a 0/1 transition matrix and builds the system.
pub fn build_sft(alphabet_size: usize, transition: &[Vec<u8>]) -> Result<SftSystem> {
    if transition.len() != alphabet_size {
        return Err(Error::InvalidTransition(format!(
            "expected {alphabet_size} rows, got {}",
            transition.len()
        )));
    }
    SftSystem::new("sft", transition.to_vec())
}

impl SftSystem {
    pub fn new(label: impl Into<String>, rows: Vec<Vec<u8>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::InvalidTransition("empty alphabet".into()));
        }
        let mut transition = Vec::with_capacity(size * size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::InvalidTransition(format!(
                    "row {i} has length {}, expected {size}",
                    row.len()
                )));
            }
            for &v in row {
                if v > 1 {
                    return Err(Error::InvalidTransition(format!(
                        "entry {v} in row {i} is not 0/1"
                    )));
                }
                transition.push(v);
            }
        }
        for s in 0..size {
            let row_ok = (0..size).any(|j| transition[s * size + j] == 1);
            let col_ok = (0..size).any(|i| transition[i * size + s] == 1);
            if !row_ok || !col_ok {
                return Err(Error::EmptyRowOrColumn { symbol: s });
            }
        }
        Ok(SftSystem {
            label: label.into(),
            size,
            transition,
        })
    }

    /// Full shift on `m` symbols.
    pub fn full_shift(m: usize) -> Self {
        SftSystem::new(format!("full-{m}-shift"), vec![vec![1; m]; m])
            .expect("full shift is valid")
    }

    /// Golden-mean shift: the word `11` is forbidden.
    pub fn golden_mean() -> Self {
        SftSystem::new("golden-mean", vec![vec![1, 1], vec![1, 0]]).expect("valid")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn alphabet_size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn allows(&self, from: usize, to: usize) -> bool {
        self.transition[from * self.size + to] == 1
    }

    pub fn successors(&self, from: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(move |&j| self.allows(from, j))
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.transition
            .chunks(self.size)
            .map(|r| r.to_vec())
            .collect()
    }

    /// Number of allowed transitions.
    pub fn edge_count(&self) -> usize {
        self.transition.iter().filter(|&&v| v == 1).count()
    }

    pub fn is_admissible(&self, symbols: &[usize]) -> bool {
        symbols.iter().all(|&s| s < self.size) && symbols.windows(2).all(|w| self.allows(w[0], w[1]))
    }

    fn reachable_from(&self, start: usize, reverse: bool) -> Vec<bool> {
        let mut seen = vec![false; self.size];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for u in 0..self.size {
                let edge = if reverse {
                    self.allows(u, v)
                } else {
                    self.allows(v, u)
                };
                if edge && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }

    pub fn is_irreducible(&self) -> bool {
        self.reachable_from(0, false).into_iter().all(|b| b)
            && self.reachable_from(0, true).into_iter().all(|b| b)
    }

    /// Period of an irreducible system (gcd of cycle lengths); 1 means aperiodic.
    pub fn period(&self) -> Option<usize> {
        if !self.is_irreducible() {
            return None;
        }
        let mut level = vec![usize::MAX; self.size];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for u in self.successors(v) {
                if level[u] == usize::MAX {
                    level[u] = level[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        let mut g = 0usize;
        for v in 0..self.size {
            for u in self.successors(v) {
                let diff = (level[v] + 1).abs_diff(level[u]);
                g = gcd(g, diff);
            }
        }
        Some(g.max(1))
    }

    /// `counts[r][s]` = number of admissible words of length `r` starting with `s`.
    pub(crate) fn start_counts(&self, max_len: usize) -> Vec<Vec<u128>> {
        let mut counts = vec![vec![0u128; self.size]; max_len + 1];
        if max_len == 0 {
            return counts;
        }
        counts[1] = vec![1; self.size];
        for r in 2..=max_len {
            for s in 0..self.size {
                let total: u128 = self
                    .successors(s)
                    .map(|t| counts[r - 1][t])
                    .fold(0u128, |a, b| a.saturating_add(b));
                counts[r][s] = total;
            }
        }
        counts
    }

    /// Number of admissible words of length `n`, from transition powers.
    pub fn count_words(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        self.start_counts(n)[n]
            .iter()
            .fold(0u128, |a, &b| a.saturating_add(b))
    }

    fn check_cap(&self, n: usize, cap: u64) -> Result<()> {
        let count = self.count_words(n);
        if count > cap as u128 {
            return Err(Error::CombinatorialOverflow { count, cap });
        }
        Ok(())
    }

    /// All admissible words of length `n` in ascending lexicographic order.
    pub fn enumerate_words(&self, n: usize, cap: u64) -> Result<Vec<Word>> {
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        self.check_cap(n, cap)?;
        let mut out = Vec::with_capacity(self.count_words(n) as usize);
        let mut buf = Vec::with_capacity(n);
        self.visit_words(&mut buf, n, &mut |w| out.push(Word(w.to_vec())));
        Ok(out)
    }

    /// Depth-first visit of all admissible extensions of `prefix` to length `n`,
    /// in lexicographic order.
    pub fn visit_words(&self, prefix: &mut Vec<usize>, n: usize, leaf: &mut dyn FnMut(&[usize])) {
        if prefix.len() == n {
            leaf(prefix);
            return;
        }
        let candidates: Vec<usize> = match prefix.last() {
            None => (0..self.size).collect(),
            Some(&last) => self.successors(last).collect(),
        };
        for s in candidates {
            prefix.push(s);
            self.visit_words(prefix, n, leaf);
            prefix.pop();
        }
    }

    /// Lexicographically ordered table of admissible `k`-words with O(k m) ranking.
    pub fn word_table(&self, k: usize, cap: u64) -> Result<WordTable> {
        if k == 0 {
            return Err(Error::param("k", "depth must be at least 1"));
        }
        let words = self.enumerate_words(k, cap)?;
        Ok(WordTable {
            k,
            size: self.size,
            counts: self.start_counts(k),
            allowed: self.transition.iter().map(|&v| v == 1).collect(),
            words,
        })
    }

    /// Recodes the system on admissible `k`-words; `w -> w'` iff they overlap in `k-1` symbols.
    pub fn higher_block(&self, k: usize) -> Result<HigherBlock> {
        self.higher_block_capped(k, DEFAULT_WORD_CAP)
    }

    pub fn higher_block_capped(&self, k: usize, cap: u64) -> Result<HigherBlock> {
        if k == 0 {
            return Err(Error::param("k", "block length must be at least 1"));
        }
        let table = self.word_table(k, cap)?;
        let n = table.len();
        let mut rows = vec![vec![0u8; n]; n];
        for (i, w) in table.words.iter().enumerate() {
            let last = w[k - 1];
            let mut next: Vec<usize> = w[1..].to_vec();
            for s in self.successors(last) {
                next.push(s);
                let j = table.index_of(&next).expect("overlap of admissible words is admissible");
                rows[i][j] = 1;
                next.pop();
            }
        }
        let system = SftSystem::new(format!("{}^[{k}]", self.label), rows)?;
        Ok(HigherBlock { system, table })
    }
}

/// Higher-block recoding together with its dictionary of blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct HigherBlock {
    pub system: SftSystem,
    pub table: WordTable,
}

impl HigherBlock {
    /// The block (word of the source system) behind a recoded symbol.
    pub fn block(&self, symbol: usize) -> &Word {
        self.table.word(symbol)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A finite admissible word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub(crate) Vec<usize>);

impl Word {
    pub fn new(sys: &SftSystem, symbols: Vec<usize>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::param("word", "must be nonempty"));
        }
        if let Some(p) = symbols.iter().position(|&s| s >= sys.alphabet_size()) {
            return Err(Error::InadmissibleWord { position: p });
        }
        if let Some(p) = symbols.windows(2).position(|w| !sys.allows(w[0], w[1])) {
            return Err(Error::InadmissibleWord { position: p + 1 });
        }
        Ok(Word(symbols))
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn into_symbols(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for Word {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_symbols(&self.0))
    }
}

/// Digits concatenated when every symbol is below 10, otherwise dot-separated.
pub fn format_symbols(symbols: &[usize]) -> String {
    if symbols.iter().all(|&s| s < 10) {
        symbols.iter().map(|s| char::from(b'0' + *s as u8)).collect()
    } else {
        symbols
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

/// Admissible words of a fixed length with their lexicographic ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct WordTable {
    k: usize,
    size: usize,
    counts: Vec<Vec<u128>>,
    allowed: Vec<bool>,
    words: Vec<Word>,
}

impl WordTable {
    pub fn depth(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn word(&self, index: usize) -> &Word {
        &self.words[index]
    }

    /// Lexicographic rank of an admissible word; `None` if the length or a symbol is off.
    ///
    /// Admissibility of inner transitions is assumed, not rechecked.
    pub fn index_of(&self, symbols: &[usize]) -> Option<usize> {
        if symbols.len() != self.k {
            return None;
        }
        let mut rank: u128 = 0;
        for (i, &s) in symbols.iter().enumerate() {
            if s >= self.size {
                return None;
            }
            let rem = self.k - i;
            for smaller in 0..s {
                let allowed = i == 0 || {
                    let prev = symbols[i - 1];
                    self.words_allow(prev, smaller)
                };
                if allowed {
                    rank += self.counts[rem][smaller];
                }
            }
        }
        let idx = rank as usize;
        (idx < self.words.len() && self.words[idx].0 == symbols).then_some(idx)
    }

    fn words_allow(&self, prev: usize, next: usize) -> bool {
        self.allowed[prev * self.size + next]
    }
}
