//! Second (`SH`/`SL`) and sixth (`XH`/`XL`) approximations.
//!
//! The matrix route multiplies a characteristic matrix by the characteristic
//! column `𝒳_X`; the oracle route evaluates the set definitions directly and
//! never touches a matrix.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitmatrix::BoolMatrix;
use crate::characteristic::{neighborhood, CharKind, CharMatrix};
use crate::model::{CoveringSystem, Universe};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApproxError {
    #[error(
        "characteristic matrix is {matrix}x{matrix} but the subset vector has length {vector}"
    )]
    Shape { matrix: usize, vector: usize },
    #[error("expected a {expected} characteristic matrix, got {found}")]
    Kind { expected: CharKind, found: CharKind },
}

/// `𝒳_X`: the indicator of `X ⊆ U` as an n×1 boolean column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetVector {
    column: BoolMatrix,
}

impl SubsetVector {
    pub fn from_indices(n: usize, members: &[usize]) -> Self {
        let mut column = BoolMatrix::zeros(n, 1);
        for &i in members {
            column.set(i, 0, true);
        }
        Self { column }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_indices(n, &[])
    }

    pub fn full(n: usize) -> Self {
        Self {
            column: BoolMatrix::ones(n, 1),
        }
    }

    /// Wrap an n×1 column.
    pub fn from_column(column: BoolMatrix) -> Self {
        assert_eq!(column.cols(), 1, "subset vectors are single columns");
        Self { column }
    }

    pub fn column(&self) -> &BoolMatrix {
        &self.column
    }

    pub fn len(&self) -> usize {
        self.column.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.column.rows() == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.column.get(i, 0)
    }

    pub fn count(&self) -> usize {
        self.column.count_ones()
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.contains(i)).collect()
    }

    pub fn complement(&self) -> Self {
        Self {
            column: self.column.not(),
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.column.is_le(&other.column)
    }

    pub fn labels<'u>(&self, universe: &'u Universe) -> Vec<&'u str> {
        self.indices()
            .into_iter()
            .map(|i| universe.label(i))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApproxKind {
    Second,
    Sixth,
}

impl ApproxKind {
    pub fn char_kind(self) -> CharKind {
        match self {
            ApproxKind::Second => CharKind::Type1,
            ApproxKind::Sixth => CharKind::Type2,
        }
    }
}

impl fmt::Display for ApproxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApproxKind::Second => "second",
            ApproxKind::Sixth => "sixth",
        })
    }
}

impl FromStr for ApproxKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "second" => Ok(ApproxKind::Second),
            "sixth" => Ok(ApproxKind::Sixth),
            other => Err(format!(
                "unknown approximation {other:?} (expected second|sixth)"
            )),
        }
    }
}

/// Lower and upper approximation of one set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxPair {
    pub kind: ApproxKind,
    pub lower: SubsetVector,
    pub upper: SubsetVector,
}

fn by_matrix(
    m: &CharMatrix,
    x: &SubsetVector,
    kind: ApproxKind,
) -> Result<ApproxPair, ApproxError> {
    if m.kind() != kind.char_kind() {
        return Err(ApproxError::Kind {
            expected: kind.char_kind(),
            found: m.kind(),
        });
    }
    if m.n() != x.len() {
        return Err(ApproxError::Shape {
            matrix: m.n(),
            vector: x.len(),
        });
    }
    let upper = m.matrix().bool_product(x.column()).expect("shape checked");
    let lower = m.matrix().odot_product(x.column()).expect("shape checked");
    Ok(ApproxPair {
        kind,
        lower: SubsetVector::from_column(lower),
        upper: SubsetVector::from_column(upper),
    })
}

/// `𝒳_SH = Γ • 𝒳_X`, `𝒳_SL = Γ ⊙ 𝒳_X`.
pub fn second_approx(gamma: &CharMatrix, x: &SubsetVector) -> Result<ApproxPair, ApproxError> {
    by_matrix(gamma, x, ApproxKind::Second)
}

/// `𝒳_XH = Π • 𝒳_X`, `𝒳_XL = Π ⊙ 𝒳_X`.
pub fn sixth_approx(pi: &CharMatrix, x: &SubsetVector) -> Result<ApproxPair, ApproxError> {
    by_matrix(pi, x, ApproxKind::Sixth)
}

pub fn approx(
    m: &CharMatrix,
    x: &SubsetVector,
    kind: ApproxKind,
) -> Result<ApproxPair, ApproxError> {
    by_matrix(m, x, kind)
}

fn union_of_blocks_meeting(system: &CoveringSystem, x: &BTreeSet<usize>) -> BTreeSet<usize> {
    system
        .coverings()
        .iter()
        .flat_map(|c| c.blocks())
        .filter(|b| b.iter().any(|i| x.contains(i)))
        .flat_map(|b| b.iter().copied())
        .collect()
}

fn pair_from_sets(
    n: usize,
    kind: ApproxKind,
    lower: &BTreeSet<usize>,
    upper: &BTreeSet<usize>,
) -> ApproxPair {
    let lower: Vec<usize> = lower.iter().copied().collect();
    let upper: Vec<usize> = upper.iter().copied().collect();
    ApproxPair {
        kind,
        lower: SubsetVector::from_indices(n, &lower),
        upper: SubsetVector::from_indices(n, &upper),
    }
}

/// Set-level second approximations: `SH(X)` is the union of blocks meeting
/// `X`, `SL(X) = [SH(Xᶜ)]ᶜ`. Blocks are pooled across coverings.
pub fn second_oracle(system: &CoveringSystem, x: &[usize]) -> ApproxPair {
    let n = system.n();
    let x: BTreeSet<usize> = x.iter().copied().collect();
    let x_c: BTreeSet<usize> = (0..n).filter(|i| !x.contains(i)).collect();
    let upper = union_of_blocks_meeting(system, &x);
    let upper_of_c = union_of_blocks_meeting(system, &x_c);
    let lower: BTreeSet<usize> = (0..n).filter(|i| !upper_of_c.contains(i)).collect();
    pair_from_sets(n, ApproxKind::Second, &lower, &upper)
}

/// Set-level sixth approximations: `XH(X) = {x | N(x) ∩ X ≠ ∅}`,
/// `XL(X) = {x | N(x) ⊆ X}`.
pub fn sixth_oracle(system: &CoveringSystem, x: &[usize]) -> ApproxPair {
    let n = system.n();
    let x: BTreeSet<usize> = x.iter().copied().collect();
    let mut upper = BTreeSet::new();
    let mut lower = BTreeSet::new();
    for i in 0..n {
        let nb = neighborhood(system, i);
        if nb.iter().any(|j| x.contains(j)) {
            upper.insert(i);
        }
        if nb.iter().all(|j| x.contains(j)) {
            lower.insert(i);
        }
    }
    pair_from_sets(n, ApproxKind::Sixth, &lower, &upper)
}

pub fn oracle(system: &CoveringSystem, x: &[usize], kind: ApproxKind) -> ApproxPair {
    match kind {
        ApproxKind::Second => second_oracle(system, x),
        ApproxKind::Sixth => sixth_oracle(system, x),
    }
}
