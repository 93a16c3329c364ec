use std::sync::Arc;

use super::sft::{SftSystem, Word, WordTable, DEFAULT_WORD_CAP};
use crate::error::Result;

/// The depth-`k` cylinders of an SFT, with the overlap graph between them.
///
/// This is the state space shared by depth-`k` potentials and order-`k`
/// Markov measures. For `k == 1` the overlap graph is the SFT itself.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderSpace {
    base: Arc<SftSystem>,
    table: WordTable,
    succ: Vec<Vec<usize>>,
}

impl CylinderSpace {
    pub fn new(base: &Arc<SftSystem>, depth: usize) -> Result<Arc<Self>> {
        Self::with_cap(base, depth, DEFAULT_WORD_CAP)
    }

    pub fn with_cap(base: &Arc<SftSystem>, depth: usize, cap: u64) -> Result<Arc<Self>> {
        let table = base.word_table(depth, cap)?;
        let succ = table
            .words()
            .iter()
            .map(|w| {
                let mut next = w[1..].to_vec();
                base.successors(w[depth - 1])
                    .map(|s| {
                        next.push(s);
                        let j = table.index_of(&next).expect("overlap is admissible");
                        next.pop();
                        j
                    })
                    .collect()
            })
            .collect();
        Ok(Arc::new(CylinderSpace {
            base: Arc::clone(base),
            table,
            succ,
        }))
    }

    pub fn base(&self) -> &Arc<SftSystem> {
        &self.base
    }

    pub fn depth(&self) -> usize {
        self.table.depth()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn table(&self) -> &WordTable {
        &self.table
    }

    pub fn word(&self, i: usize) -> &Word {
        self.table.word(i)
    }

    pub fn index_of(&self, symbols: &[usize]) -> Option<usize> {
        self.table.index_of(symbols)
    }

    /// States reachable in one shift step from state `i`.
    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.succ[i].binary_search(&j).is_ok()
    }

    /// The overlap graph as an SFT on the cylinder indices.
    pub fn block_system(&self) -> SftSystem {
        let n = self.len();
        let mut rows = vec![vec![0u8; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for &j in &self.succ[i] {
                row[j] = 1;
            }
        }
        SftSystem::new(format!("{}^[{}]", self.base.label(), self.depth()), rows)
            .expect("overlap graph of an SFT has no stranded blocks")
    }

    /// Shape equality of the underlying systems (labels are ignored).
    pub fn same_base(&self, other: &CylinderSpace) -> bool {
        Arc::ptr_eq(&self.base, &other.base)
            || (self.base.alphabet_size() == other.base.alphabet_size()
                && self.base.rows() == other.base.rows())
    }
}
