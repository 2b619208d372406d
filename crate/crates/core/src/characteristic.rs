//! Type-1 (`Γ = M • Mᵀ`) and type-2 (`Π = M ⊙ Mᵀ`) characteristic matrices.
//!
//! Blocks are pooled across every covering of a system: `Γ(𝒟)` and `Π(𝒟)`
//! are taken over the concatenated `M_𝒟`, and [`neighborhood`] intersects
//! blocks from all coverings, which is what `Π(𝒟)` encodes.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bitmatrix::BoolMatrix;
use crate::model::{Covering, CoveringSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CharKind {
    Type1,
    Type2,
}

impl fmt::Display for CharKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CharKind::Type1 => "type1",
            CharKind::Type2 => "type2",
        })
    }
}

/// An n×n characteristic matrix together with what it was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharMatrix {
    kind: CharKind,
    matrix: BoolMatrix,
    source: String,
}

impl CharMatrix {
    /// Wrap an arbitrary square matrix. Used for degenerate inputs and for
    /// matrices restored from dumps.
    pub fn from_matrix(kind: CharKind, matrix: BoolMatrix, source: impl Into<String>) -> Self {
        assert!(matrix.is_square(), "characteristic matrices are square");
        Self {
            kind,
            matrix,
            source: source.into(),
        }
    }

    pub fn kind(&self) -> CharKind {
        self.kind
    }

    pub fn matrix(&self) -> &BoolMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> BoolMatrix {
        self.matrix
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }
}

fn source_of(coverings: &[Covering]) -> String {
    let names: Vec<&str> = coverings.iter().map(Covering::name).collect();
    format!("{{{}}}", names.join(","))
}

/// `Γ(𝒟) = M_𝒟 • M_𝒟ᵀ`, built fresh (see [`CoveringSystem::gamma`] for the
/// cached form).
pub fn gamma(system: &CoveringSystem) -> CharMatrix {
    let m = system.matrix();
    let m_t = system.matrix_transposed();
    CharMatrix {
        kind: CharKind::Type1,
        matrix: m.bool_product(&m_t).expect("n×b by b×n"),
        source: source_of(system.coverings()),
    }
}

/// `Π(𝒟) = M_𝒟 ⊙ M_𝒟ᵀ`, built fresh.
pub fn pi(system: &CoveringSystem) -> CharMatrix {
    let m = system.matrix();
    let m_t = system.matrix_transposed();
    CharMatrix {
        kind: CharKind::Type2,
        matrix: m.odot_product(&m_t).expect("n×b by b×n"),
        source: source_of(system.coverings()),
    }
}

/// `Γ(𝒞)` of a single covering over `n` objects.
pub fn gamma_of_covering(covering: &Covering, n: usize) -> CharMatrix {
    CharMatrix {
        kind: CharKind::Type1,
        matrix: covering
            .matrix(n)
            .bool_product(&covering.matrix_transposed(n))
            .expect("n×b by b×n"),
        source: source_of(std::slice::from_ref(covering)),
    }
}

/// `Π(𝒞)` of a single covering over `n` objects.
pub fn pi_of_covering(covering: &Covering, n: usize) -> CharMatrix {
    CharMatrix {
        kind: CharKind::Type2,
        matrix: covering
            .matrix(n)
            .odot_product(&covering.matrix_transposed(n))
            .expect("n×b by b×n"),
        source: source_of(std::slice::from_ref(covering)),
    }
}

/// `N(x)`: intersection of every block (from any covering) containing `x`,
/// as sorted object indices. An object in no block gets the whole universe.
pub fn neighborhood(system: &CoveringSystem, x: usize) -> Vec<usize> {
    assert!(x < system.n(), "object index {x} out of range");
    let mut acc: Option<BTreeSet<usize>> = None;
    for block in system.coverings().iter().flat_map(|c| c.blocks()) {
        if !block.contains(&x) {
            continue;
        }
        let block: BTreeSet<usize> = block.iter().copied().collect();
        acc = Some(match acc {
            None => block,
            Some(prev) => prev.intersection(&block).copied().collect(),
        });
    }
    match acc {
        Some(set) => set.into_iter().collect(),
        None => (0..system.n()).collect(),
    }
}
