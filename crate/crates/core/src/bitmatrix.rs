//! Bit-packed boolean matrices and the two boolean products used by
//! characteristic matrices.
//!
//! Storage is row-major: each row occupies `words_per_row` contiguous `u64`
//! words, bit `c % 64` of word `c / 64` holding column `c`. Padding bits past
//! `cols` are kept at zero by every operation, so whole-word comparisons and
//! popcounts are exact.
//!
//! Both products are evaluated by one of two kernels:
//!
//! * **row accumulation**: row `i` of `A • B` is the OR of the rows `k` of `B`
//!   with `a_ik = 1`; row `i` of `A ⊙ B` is the AND of those same rows
//!   (all-ones when row `i` of `A` is empty). Cost tracks `nnz(A) · p / 64`.
//! * **dot**: `B` is transposed once and each cell is a word-wise AND
//!   (resp. AND-NOT) followed by a zero test. Cost tracks `n · p · m / 64`,
//!   which wins for thin right operands such as characteristic vectors.
//!
//! The dispatching entry points pick whichever is cheaper; all kernels are
//! bit-identical.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use thiserror::Error;

const WORD_BITS: usize = 64;

static PARALLEL_KERNELS: AtomicBool = AtomicBool::new(false);

/// Enable or disable row-partitioned parallel evaluation of products.
///
/// Results are bit-identical either way; this only changes how rows are
/// scheduled (on the current rayon pool).
pub fn set_parallel_kernels(enabled: bool) {
    PARALLEL_KERNELS.store(enabled, Ordering::Relaxed);
}

pub fn parallel_kernels() -> bool {
    PARALLEL_KERNELS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("shape mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    Shape {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("product with an empty inner dimension ({rows}x0 by 0x{cols})")]
    EmptyInner { rows: usize, cols: usize },
    #[error("malformed matrix dump at line {line}: {reason}")]
    Dump { line: usize, reason: String },
}

#[inline]
fn words_for(cols: usize) -> usize {
    cols.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(cols: usize) -> u64 {
    match cols % WORD_BITS {
        0 => !0u64,
        r => (1u64 << r) - 1,
    }
}

/// Iterate the set bit positions of a packed row.
pub(crate) fn ones(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let bit = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(w * WORD_BITS + bit)
        })
    })
}

#[inline]
pub(crate) fn intersects(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(x, y)| x & y != 0)
}

/// `a ⊆ b` on packed rows.
#[inline]
pub(crate) fn is_subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

/// Dense boolean matrix, one bit per cell.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BoolMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        Self {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m.data.fill(!0);
        m.clear_padding();
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Build from nested rows of booleans. All rows must have the same length.
    pub fn from_rows<R: AsRef<[bool]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(row.len(), cols, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                if v {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Build from `'0'`/`'1'` strings, one per row.
    pub fn from_bit_strings(rows: &[&str]) -> Result<Self, MatrixError> {
        rows.join("\n").parse()
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(
            row < self.rows && col < self.cols,
            "cell ({row},{col}) out of bounds"
        );
        let w = self.data[row * self.words_per_row + col / WORD_BITS];
        (w >> (col % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        assert!(
            row < self.rows && col < self.cols,
            "cell ({row},{col}) out of bounds"
        );
        let idx = row * self.words_per_row + col / WORD_BITS;
        let mask = 1u64 << (col % WORD_BITS);
        if value {
            self.data[idx] |= mask;
        } else {
            self.data[idx] &= !mask;
        }
    }

    /// Packed words of one row; padding bits are zero.
    #[inline]
    pub fn row_words(&self, row: usize) -> &[u64] {
        let start = row * self.words_per_row;
        &self.data[start..start + self.words_per_row]
    }

    pub fn row_ones(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        ones(self.row_words(row))
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_all_zeros(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn is_all_ones(&self) -> bool {
        if self.cols == 0 {
            return true;
        }
        let tail = tail_mask(self.cols);
        self.data.chunks_exact(self.words_per_row).all(|row| {
            let (last, body) = row.split_last().expect("nonempty row");
            body.iter().all(|&w| w == !0) && *last == tail
        })
    }

    /// True if every padding bit is zero. Exposed for invariant checks.
    pub fn padding_is_clear(&self) -> bool {
        if self.cols.is_multiple_of(WORD_BITS) || self.words_per_row == 0 {
            return true;
        }
        let tail = tail_mask(self.cols);
        self.data
            .chunks_exact(self.words_per_row)
            .all(|row| row[self.words_per_row - 1] & !tail == 0)
    }

    fn clear_padding(&mut self) {
        if self.cols.is_multiple_of(WORD_BITS) || self.words_per_row == 0 {
            return;
        }
        let tail = tail_mask(self.cols);
        let w = self.words_per_row;
        for row in self.data.chunks_exact_mut(w) {
            row[w - 1] &= tail;
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    pub fn is_reflexive(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| self.get(i, i))
    }

    /// `self[i][j] ≤ other[i][j]` for every cell.
    pub fn is_le(&self, other: &Self) -> bool {
        self.shape() == other.shape() && is_subset(&self.data, &other.data)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            let word = i / WORD_BITS;
            let bit = 1u64 << (i % WORD_BITS);
            for j in self.row_ones(i) {
                out.data[j * out.words_per_row + word] |= bit;
            }
        }
        out
    }

    /// Columns `start..end` as a new matrix.
    pub fn column_slice(&self, start: usize, end: usize) -> Self {
        assert!(
            start <= end && end <= self.cols,
            "column range out of bounds"
        );
        let mut out = Self::zeros(self.rows, end - start);
        for i in 0..self.rows {
            for j in self.row_ones(i).filter(|&j| j >= start && j < end) {
                out.set(i, j - start, true);
            }
        }
        out
    }

    /// Horizontal concatenation `[A₁ A₂ … A_k]`.
    pub fn hconcat(parts: &[&BoolMatrix]) -> Result<Self, MatrixError> {
        let rows = parts.first().map_or(0, |p| p.rows);
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            if p.rows != rows {
                return Err(MatrixError::Shape {
                    op: "hconcat",
                    left_rows: rows,
                    left_cols: offset,
                    right_rows: p.rows,
                    right_cols: p.cols,
                });
            }
            for i in 0..rows {
                for j in p.row_ones(i) {
                    out.set(i, offset + j, true);
                }
            }
            offset += p.cols;
        }
        Ok(out)
    }

    fn same_shape(&self, other: &Self, op: &'static str) -> Result<(), MatrixError> {
        if self.shape() != other.shape() {
            return Err(MatrixError::Shape {
                op,
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        Ok(())
    }

    fn product_shape(&self, rhs: &Self, op: &'static str) -> Result<(), MatrixError> {
        if self.cols != rhs.rows {
            return Err(MatrixError::Shape {
                op,
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs.rows,
                right_cols: rhs.cols,
            });
        }
        if self.cols == 0 {
            return Err(MatrixError::EmptyInner {
                rows: self.rows,
                cols: rhs.cols,
            });
        }
        Ok(())
    }

    pub fn elementwise_or(&self, other: &Self) -> Result<Self, MatrixError> {
        self.same_shape(other, "elementwise_or")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a | b)
            .collect();
        Ok(Self { data, ..*self })
    }

    pub fn elementwise_and(&self, other: &Self) -> Result<Self, MatrixError> {
        self.same_shape(other, "elementwise_and")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a & b)
            .collect();
        Ok(Self { data, ..*self })
    }

    /// Cellwise complement.
    pub fn not(&self) -> Self {
        let mut out = Self {
            data: self.data.iter().map(|w| !w).collect(),
            ..*self
        };
        out.clear_padding();
        out
    }

    /// Boolean product `A • B`: `c_ij = ⋁_k a_ik · b_kj`.
    pub fn bool_product(&self, rhs: &Self) -> Result<Self, MatrixError> {
        self.product_shape(rhs, "bool_product")?;
        if self.prefers_dot(rhs) {
            Ok(bool_dot(self, &rhs.transpose()))
        } else {
            Ok(bool_rowwise(self, rhs))
        }
    }

    /// `A ⊙ B`: `c_ij = ⋀_k (b_kj − a_ik + 1)`, clamped to `{0, 1}`, i.e. 1 iff
    /// `a_ik ≤ b_kj` for every `k`.
    pub fn odot_product(&self, rhs: &Self) -> Result<Self, MatrixError> {
        self.product_shape(rhs, "odot_product")?;
        if self.prefers_dot(rhs) {
            Ok(odot_dot(self, &rhs.transpose()))
        } else {
            Ok(odot_rowwise(self, rhs))
        }
    }

    /// `A • Bᵀ` given `Bᵀ` directly (`rhs_t` is `p×m`).
    pub fn bool_product_transposed(&self, rhs_t: &Self) -> Result<Self, MatrixError> {
        self.product_shape_t(rhs_t, "bool_product")?;
        Ok(bool_dot(self, rhs_t))
    }

    /// `A ⊙ Bᵀ` given `Bᵀ` directly.
    pub fn odot_product_transposed(&self, rhs_t: &Self) -> Result<Self, MatrixError> {
        self.product_shape_t(rhs_t, "odot_product")?;
        Ok(odot_dot(self, rhs_t))
    }

    /// Row-accumulation kernel for `A • B`, exposed for kernel cross-checks.
    pub fn bool_product_rowwise(&self, rhs: &Self) -> Result<Self, MatrixError> {
        self.product_shape(rhs, "bool_product")?;
        Ok(bool_rowwise(self, rhs))
    }

    /// Row-accumulation kernel for `A ⊙ B`.
    pub fn odot_product_rowwise(&self, rhs: &Self) -> Result<Self, MatrixError> {
        self.product_shape(rhs, "odot_product")?;
        Ok(odot_rowwise(self, rhs))
    }

    fn product_shape_t(&self, rhs_t: &Self, op: &'static str) -> Result<(), MatrixError> {
        if self.cols != rhs_t.cols {
            return Err(MatrixError::Shape {
                op,
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs_t.cols,
                right_cols: rhs_t.rows,
            });
        }
        if self.cols == 0 {
            return Err(MatrixError::EmptyInner {
                rows: self.rows,
                cols: rhs_t.rows,
            });
        }
        Ok(())
    }

    /// Rough word-operation cost of each kernel; the transpose needed by the
    /// dot kernel is charged at one op per set bit of `rhs`.
    fn prefers_dot(&self, rhs: &Self) -> bool {
        let rowwise = self.count_ones() as u128 * words_for(rhs.cols) as u128 + self.rows as u128;
        let dot = self.rows as u128 * rhs.cols as u128 * self.words_per_row as u128
            + rhs.count_ones() as u128;
        dot < rowwise
    }

    /// One row per line, `'0'`/`'1'` characters, no separators.
    pub fn to_dump(&self) -> String {
        self.to_string()
    }
}

fn fill_rows<F>(out: &mut BoolMatrix, f: F)
where
    F: Fn(usize, &mut [u64]) + Sync,
{
    let w = out.words_per_row;
    if w == 0 {
        return;
    }
    if parallel_kernels() {
        out.data
            .par_chunks_mut(w)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    } else {
        for (i, row) in out.data.chunks_mut(w).enumerate() {
            f(i, row);
        }
    }
    out.clear_padding();
}

fn bool_rowwise(a: &BoolMatrix, b: &BoolMatrix) -> BoolMatrix {
    let mut out = BoolMatrix::zeros(a.rows, b.cols);
    fill_rows(&mut out, |i, row| {
        for k in a.row_ones(i) {
            for (dst, src) in row.iter_mut().zip(b.row_words(k)) {
                *dst |= src;
            }
        }
    });
    out
}

fn odot_rowwise(a: &BoolMatrix, b: &BoolMatrix) -> BoolMatrix {
    let mut out = BoolMatrix::zeros(a.rows, b.cols);
    fill_rows(&mut out, |i, row| {
        row.fill(!0);
        for k in a.row_ones(i) {
            for (dst, src) in row.iter_mut().zip(b.row_words(k)) {
                *dst &= src;
            }
        }
    });
    out
}

fn bool_dot(a: &BoolMatrix, b_t: &BoolMatrix) -> BoolMatrix {
    let mut out = BoolMatrix::zeros(a.rows, b_t.rows);
    fill_rows(&mut out, |i, row| {
        let ai = a.row_words(i);
        for j in 0..b_t.rows {
            if intersects(ai, b_t.row_words(j)) {
                row[j / WORD_BITS] |= 1 << (j % WORD_BITS);
            }
        }
    });
    out
}

fn odot_dot(a: &BoolMatrix, b_t: &BoolMatrix) -> BoolMatrix {
    let mut out = BoolMatrix::zeros(a.rows, b_t.rows);
    fill_rows(&mut out, |i, row| {
        let ai = a.row_words(i);
        for j in 0..b_t.rows {
            if is_subset(ai, b_t.row_words(j)) {
                row[j / WORD_BITS] |= 1 << (j % WORD_BITS);
            }
        }
    });
    out
}

impl fmt::Display for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                f.write_str(if self.get(i, j) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BoolMatrix {}x{}", self.rows, self.cols)?;
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for BoolMatrix {
    type Err = MatrixError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lines: Vec<&str> = s.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let cols = lines.first().map_or(0, |l| l.len());
        let mut m = BoolMatrix::zeros(lines.len(), cols);
        for (i, line) in lines.iter().enumerate() {
            if line.len() != cols {
                return Err(MatrixError::Dump {
                    line: i + 1,
                    reason: format!("expected {cols} columns, found {}", line.len()),
                });
            }
            for (j, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(i, j, true),
                    other => {
                        return Err(MatrixError::Dump {
                            line: i + 1,
                            reason: format!("unexpected character {other:?}"),
                        })
                    }
                }
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_bool(a: &BoolMatrix, b: &BoolMatrix) -> BoolMatrix {
        let mut c = BoolMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let v = (0..a.cols()).any(|k| a.get(i, k) && b.get(k, j));
                c.set(i, j, v);
            }
        }
        c
    }

    // Integer form of the definition: min_k (b_kj - a_ik + 1), clamped at 1.
    fn naive_odot(a: &BoolMatrix, b: &BoolMatrix) -> BoolMatrix {
        let mut c = BoolMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let v = (0..a.cols())
                    .map(|k| b.get(k, j) as i32 - a.get(i, k) as i32 + 1)
                    .min()
                    .unwrap();
                c.set(i, j, v.min(1) == 1);
            }
        }
        c
    }

    fn naive_transpose(a: &BoolMatrix) -> BoolMatrix {
        let mut t = BoolMatrix::zeros(a.cols(), a.rows());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                t.set(j, i, a.get(i, j));
            }
        }
        t
    }

    fn matrix(
        rows: std::ops::RangeInclusive<usize>,
        cols: std::ops::RangeInclusive<usize>,
    ) -> impl Strategy<Value = BoolMatrix> {
        (rows, cols).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop::collection::vec(any::<bool>(), c), r)
                .prop_map(|rows| BoolMatrix::from_rows(&rows))
        })
    }

    fn product_pair(max: usize) -> impl Strategy<Value = (BoolMatrix, BoolMatrix)> {
        (1..=max, 1..=max, 1..=max)
            .prop_flat_map(|(n, m, p)| (matrix(n..=n, m..=m), matrix(m..=m, p..=p)))
    }

    fn c4() -> BoolMatrix {
        BoolMatrix::from_bit_strings(&["100", "100", "010", "010", "001"]).unwrap()
    }

    fn block_matrix() -> BoolMatrix {
        BoolMatrix::from_bit_strings(&["11000", "11000", "00110", "00110", "00001"]).unwrap()
    }

    #[test]
    fn gram_of_c4_is_block_diagonal() {
        let m = c4();
        assert_eq!(m.bool_product(&m.transpose()).unwrap(), block_matrix());
    }

    #[test]
    fn identity_is_left_unit() {
        let a = BoolMatrix::from_bit_strings(&["1010", "0111", "0000"]).unwrap();
        assert_eq!(BoolMatrix::identity(3).bool_product(&a).unwrap(), a);
    }

    #[test]
    fn odot_of_example_system_is_block_diagonal() {
        // M_D for C1, C2, C3 of the running five-object example.
        let m = BoolMatrix::from_bit_strings(&["101010", "101010", "100101", "100101", "010110"])
            .unwrap();
        assert_eq!(m.odot_product(&m.transpose()).unwrap(), block_matrix());
    }

    #[test]
    fn odot_against_all_ones_is_all_ones() {
        let a = BoolMatrix::from_bit_strings(&["101", "000", "111", "010"]).unwrap();
        let b = BoolMatrix::ones(3, 5);
        assert!(a.odot_product(&b).unwrap().is_all_ones());
    }

    #[test]
    fn odot_clamps_the_value_two_to_one() {
        // Empty a-row and all-ones b-column: min(b - a + 1) = 2.
        let a = BoolMatrix::zeros(1, 3);
        let b = BoolMatrix::ones(3, 1);
        assert!(a.odot_product(&b).unwrap().get(0, 0));
    }

    #[test]
    fn lattice_ops() {
        let ones = BoolMatrix::ones(5, 5);
        assert!(ones.elementwise_or(&block_matrix()).unwrap().is_all_ones());
        let b = block_matrix();
        assert_eq!(b.elementwise_and(&b).unwrap(), b);
        assert_eq!(b.elementwise_or(&b).unwrap(), b);
    }

    #[test]
    fn transpose_of_c1() {
        let c1 = BoolMatrix::from_bit_strings(&["10", "10", "10", "10", "01"]).unwrap();
        let t = c1.transpose();
        assert_eq!(
            t,
            BoolMatrix::from_bit_strings(&["11110", "00001"]).unwrap()
        );
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let a = BoolMatrix::zeros(2, 3);
        let b = BoolMatrix::zeros(2, 3);
        let err = a.bool_product(&b).unwrap_err();
        assert_eq!(
            err.to_string(),
            "shape mismatch in bool_product: left is 2x3, right is 2x3"
        );
        assert!(a.odot_product(&b).is_err());
        assert!(a.elementwise_or(&BoolMatrix::zeros(3, 2)).is_err());
        assert!(a.elementwise_and(&BoolMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn empty_inner_dimension_rejected() {
        let a = BoolMatrix::zeros(2, 0);
        let b = BoolMatrix::zeros(0, 2);
        assert!(matches!(
            a.bool_product(&b),
            Err(MatrixError::EmptyInner { .. })
        ));
        assert!(matches!(
            a.odot_product(&b),
            Err(MatrixError::EmptyInner { .. })
        ));
    }

    #[test]
    fn padding_stays_clear_across_word_boundary() {
        let a = BoolMatrix::ones(3, 70);
        assert!(a.padding_is_clear());
        let n = a.not();
        assert!(n.is_all_zeros() && n.padding_is_clear());
        assert!(n.not().is_all_ones());
        let t = a.transpose();
        assert!(t.padding_is_clear() && t.is_all_ones());
        let p = BoolMatrix::zeros(3, 3)
            .odot_product(&BoolMatrix::zeros(3, 70))
            .unwrap();
        assert!(p.padding_is_clear() && p.is_all_ones());
    }

    #[test]
    fn dump_round_trip() {
        let b = block_matrix();
        assert_eq!(b.to_dump(), "11000\n11000\n00110\n00110\n00001\n");
        assert_eq!(b.to_dump().parse::<BoolMatrix>().unwrap(), b);
        assert!("10\n1".parse::<BoolMatrix>().is_err());
        assert!("1x".parse::<BoolMatrix>().is_err());
    }

    #[test]
    fn slice_and_concat() {
        let a = BoolMatrix::from_bit_strings(&["10", "01"]).unwrap();
        let b = BoolMatrix::from_bit_strings(&["111", "000"]).unwrap();
        let ab = BoolMatrix::hconcat(&[&a, &b]).unwrap();
        assert_eq!(
            ab,
            BoolMatrix::from_bit_strings(&["10111", "01000"]).unwrap()
        );
        assert_eq!(ab.column_slice(2, 5), b);
        assert_eq!(ab.column_slice(0, 2), a);
    }

    #[test]
    fn wide_matrices_cross_word_boundaries() {
        let mut a = BoolMatrix::zeros(3, 130);
        a.set(0, 0, true);
        a.set(0, 129, true);
        a.set(1, 64, true);
        a.set(2, 129, true);
        let g = a.bool_product(&a.transpose()).unwrap();
        assert_eq!(g, naive_bool(&a, &naive_transpose(&a)));
        assert!(g.get(0, 2) && !g.get(0, 1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(600))]

        #[test]
        fn bool_product_matches_triple_loop((a, b) in product_pair(8)) {
            let expected = naive_bool(&a, &b);
            let got = a.bool_product(&b).unwrap();
            prop_assert!(got.padding_is_clear());
            prop_assert_eq!(&got, &expected);
            prop_assert_eq!(&a.bool_product_rowwise(&b).unwrap(), &expected);
            prop_assert_eq!(&a.bool_product_transposed(&b.transpose()).unwrap(), &expected);
        }

        #[test]
        fn odot_product_matches_clamped_min_loop((a, b) in product_pair(8)) {
            let expected = naive_odot(&a, &b);
            let got = a.odot_product(&b).unwrap();
            prop_assert!(got.padding_is_clear());
            prop_assert_eq!(&got, &expected);
            prop_assert_eq!(&a.odot_product_rowwise(&b).unwrap(), &expected);
            prop_assert_eq!(&a.odot_product_transposed(&b.transpose()).unwrap(), &expected);
        }

        #[test]
        fn transpose_matches_index_swap(a in matrix(1..=9, 1..=9)) {
            let t = a.transpose();
            prop_assert_eq!(&t, &naive_transpose(&a));
            prop_assert_eq!(t.transpose(), a);
        }

        #[test]
        fn gram_products_are_symmetric_and_reflexive(m in matrix(1..=8, 1..=8)) {
            // Force every row nonzero.
            let mut m = m;
            for i in 0..m.rows() {
                m.set(i, 0, true);
            }
            let g = m.bool_product(&m.transpose()).unwrap();
            prop_assert!(g.is_symmetric() && g.is_reflexive());
            let p = m.odot_product(&m.transpose()).unwrap();
            prop_assert!(p.is_reflexive());
        }

        #[test]
        fn parallel_kernels_are_bit_identical((a, b) in product_pair(8)) {
            let seq = (bool_rowwise(&a, &b), odot_rowwise(&a, &b), bool_dot(&a, &b.transpose()));
            set_parallel_kernels(true);
            let par = (bool_rowwise(&a, &b), odot_rowwise(&a, &b), bool_dot(&a, &b.transpose()));
            set_parallel_kernels(false);
            prop_assert_eq!(seq, par);
        }
    }
}
