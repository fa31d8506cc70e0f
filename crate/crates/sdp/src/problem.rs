use std::collections::BTreeMap;

use crate::SdpError;

/// One block of the decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// `n x n` symmetric positive semidefinite matrix.
    Psd(usize),
    /// Vector in the nonnegative orthant of dimension `n`.
    NonNeg(usize),
    /// Unrestricted vector of dimension `n`.
    Free(usize),
}

impl Block {
    pub fn size(&self) -> usize {
        match *self {
            Block::Psd(n) | Block::NonNeg(n) | Block::Free(n) => n,
        }
    }
}

/// A coefficient of a linear functional.
///
/// For a semidefinite block, `(row, col)` sets both
/// `A[row, col]` and `A[col, row]` of a symmetric coefficient matrix, so the
/// functional contributes `2 * value * X[row, col]` off the diagonal. For
/// vector blocks `col` must be 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Entry {
    pub fn new(block: usize, row: usize, col: usize, value: f64) -> Self {
        Self {
            block,
            row,
            col,
            value,
        }
    }
}

/// A sparse linear functional over all blocks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearForm {
    pub entries: Vec<Entry>,
}

impl LinearForm {
    pub fn new(entries: Vec<Entry>) -> Self {
        Self { entries }
    }

    pub fn push(&mut self, block: usize, row: usize, col: usize, value: f64) {
        self.entries.push(Entry::new(block, row, col, value));
    }

    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(|e| e.value == 0.0)
    }

    /// Sums duplicate coordinates and drops zeros, sorted by coordinate.
    pub fn canonical(&self) -> LinearForm {
        let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for e in &self.entries {
            *acc.entry((e.block, e.row, e.col)).or_insert(0.0) += e.value;
        }
        LinearForm {
            entries: acc
                .into_iter()
                .filter(|(_, v)| *v != 0.0)
                .map(|((block, row, col), value)| Entry {
                    block,
                    row,
                    col,
                    value,
                })
                .collect(),
        }
    }
}

/// `minimize <objective, X>` subject to `<a_i, X> = b_i` over the block cone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StandardSdp {
    pub blocks: Vec<Block>,
    pub objective: LinearForm,
    pub equalities: Vec<(LinearForm, f64)>,
}

impl StandardSdp {
    pub fn new(blocks: Vec<Block>) -> Self {
        Self {
            blocks,
            objective: LinearForm::default(),
            equalities: Vec::new(),
        }
    }

    pub fn add_equality(&mut self, form: LinearForm, rhs: f64) -> usize {
        self.equalities.push((form, rhs));
        self.equalities.len() - 1
    }

    /// Total number of scalar unknowns (upper triangles for matrix blocks).
    pub fn num_unknowns(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| match *b {
                Block::Psd(n) => n * (n + 1) / 2,
                Block::NonNeg(n) | Block::Free(n) => n,
            })
            .sum()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        let check = |form: &LinearForm, what: &str| -> Result<(), SdpError> {
            for e in &form.entries {
                let block = self.blocks.get(e.block).ok_or(SdpError::UnknownBlock {
                    block: e.block,
                    count: self.blocks.len(),
                })?;
                let size = block.size();
                let bad = match block {
                    Block::Psd(_) => e.row >= size || e.col >= size,
                    _ => e.row >= size || e.col != 0,
                };
                if bad {
                    return Err(SdpError::EntryOutOfRange {
                        block: e.block,
                        row: e.row,
                        col: e.col,
                        size,
                    });
                }
                if !e.value.is_finite() {
                    return Err(SdpError::NonFinite(what.to_string()));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (i, (form, rhs)) in self.equalities.iter().enumerate() {
            check(form, &format!("equality {i}"))?;
            if !rhs.is_finite() {
                return Err(SdpError::NonFinite(format!("right-hand side {i}")));
            }
        }
        Ok(())
    }
}
