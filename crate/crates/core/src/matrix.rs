//! Dense real matrices and vectors at small dimension, plus the
//! tolerance-aware structural predicates for the block-triangular
//! classes the rest of the crate works in.
//!
//! All structural comparisons use the max-abs-entry norm and relative
//! tolerances scaled by operand norms: orbit matrices span many orders
//! of magnitude, so absolute thresholds are useless here.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Hard cap on matrix dimension. The block logic is dense and the
/// intended regime is small n.
pub const MAX_DIM: usize = 32;

/// Square real matrix with finite entries, row-major semantics.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    inner: DMatrix<f64>,
}

impl RealMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidMatrix(format!(
                "dimension {n} outside supported range 1..={MAX_DIM}"
            )));
        }
        let mut inner = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::InvalidMatrix(format!(
                        "non-finite entry at ({i}, {j})"
                    )));
                }
                inner[(i, j)] = x;
            }
        }
        Ok(Self { inner })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn norm_max(&self) -> f64 {
        self.inner.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn det(&self) -> f64 {
        self.inner.clone().lu().determinant()
    }

    pub fn try_inverse(&self) -> Option<RealMatrix> {
        self.inner.clone().try_inverse().map(|inner| Self { inner })
    }

    pub fn transpose(&self) -> RealMatrix {
        Self {
            inner: self.inner.transpose(),
        }
    }

    pub fn scale(&self, factor: f64) -> RealMatrix {
        Self {
            inner: &self.inner * factor,
        }
    }

    pub fn apply(&self, v: &RealVector) -> RealVector {
        RealVector::from_na(&self.inner * v.na())
    }

    pub fn max_abs_diff(&self, other: &RealMatrix) -> f64 {
        (&self.inner - &other.inner)
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn rows_vec(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.inner[(i, j)]).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|x| x.is_finite())
    }

    /// Largest/smallest singular value ratio; `None` when numerically singular.
    pub fn condition_number(&self) -> Option<f64> {
        let svd = self.inner.clone().svd(false, false);
        let max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let min = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        (min > 0.0).then_some(max / min)
    }

    pub(crate) fn na(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub(crate) fn from_na(inner: DMatrix<f64>) -> Self {
        debug_assert_eq!(inner.nrows(), inner.ncols());
        Self { inner }
    }
}

impl std::ops::Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, ij: (usize, usize)) -> &f64 {
        &self.inner[ij]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, ij: (usize, usize)) -> &mut f64 {
        &mut self.inner[ij]
    }
}

impl std::ops::Mul for &RealMatrix {
    type Output = RealMatrix;
    fn mul(self, rhs: &RealMatrix) -> RealMatrix {
        RealMatrix::from_na(&self.inner * &rhs.inner)
    }
}

impl std::ops::Add for &RealMatrix {
    type Output = RealMatrix;
    fn add(self, rhs: &RealMatrix) -> RealMatrix {
        RealMatrix::from_na(&self.inner + &rhs.inner)
    }
}

impl std::ops::Sub for &RealMatrix {
    type Output = RealMatrix;
    fn sub(self, rhs: &RealMatrix) -> RealMatrix {
        RealMatrix::from_na(&self.inner - &rhs.inner)
    }
}

impl Serialize for RealMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows_vec().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RealMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        RealMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

/// Real vector with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct RealVector {
    entries: Vec<f64>,
}

impl RealVector {
    pub fn from_entries(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() || entries.len() > MAX_DIM {
            return Err(Error::InvalidMatrix(format!(
                "vector dimension {} outside supported range 1..={MAX_DIM}",
                entries.len()
            )));
        }
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite vector entry at {i}"
            )));
        }
        Ok(Self { entries })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            entries: vec![0.0; n],
        }
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut entries = vec![0.0; n];
        entries[i] = 1.0;
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn norm_max(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn dot(&self, other: &RealVector) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scale(&self, factor: f64) -> RealVector {
        Self {
            entries: self.entries.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn add(&self, other: &RealVector) -> RealVector {
        Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &RealVector) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub(crate) fn na(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_column_slice(&self.entries)
    }

    pub(crate) fn from_na(v: nalgebra::DVector<f64>) -> Self {
        Self {
            entries: v.iter().cloned().collect(),
        }
    }
}

impl std::ops::Index<usize> for RealVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

impl std::ops::IndexMut<usize> for RealVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.entries[i]
    }
}

impl Serialize for RealVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RealVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<f64>::deserialize(deserializer)?;
        RealVector::from_entries(entries).map_err(D::Error::custom)
    }
}

/// 2x2 rotation-scale block `[[alpha, beta], [-beta, alpha]]`, the real
/// face of the complex scalar `alpha - i*beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SBlock {
    pub alpha: f64,
    pub beta: f64,
}

impl SBlock {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.alpha, -self.beta)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self {
            alpha: z.re,
            beta: -z.im,
        }
    }

    pub fn modulus(self) -> f64 {
        self.to_complex().norm()
    }
}

/// Block sizes of the normal-form class: `t_sizes` are the sizes of the
/// lower-triangular constant-diagonal blocks, `b_sizes` the SBlock
/// counts of the rotation-scale blocks (real size `2m` each).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    #[serde(rename = "t_blocks")]
    t_sizes: Vec<usize>,
    #[serde(rename = "b_blocks")]
    b_sizes: Vec<usize>,
}

impl BlockPartition {
    pub fn new(t_sizes: Vec<usize>, b_sizes: Vec<usize>) -> Result<Self> {
        if t_sizes.iter().any(|&n| n == 0) || b_sizes.iter().any(|&m| m == 0) {
            return Err(Error::InvalidPartition("zero-sized block".into()));
        }
        let n: usize = t_sizes.iter().sum::<usize>() + 2 * b_sizes.iter().sum::<usize>();
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidPartition(format!(
                "total dimension {n} outside supported range 1..={MAX_DIM}"
            )));
        }
        Ok(Self { t_sizes, b_sizes })
    }

    pub fn dim(&self) -> usize {
        self.t_sizes.iter().sum::<usize>() + 2 * self.b_sizes.iter().sum::<usize>()
    }

    /// Number of T-blocks.
    pub fn r(&self) -> usize {
        self.t_sizes.len()
    }

    /// Number of B-blocks.
    pub fn s(&self) -> usize {
        self.b_sizes.len()
    }

    pub fn t_sizes(&self) -> &[usize] {
        &self.t_sizes
    }

    pub fn b_sizes(&self) -> &[usize] {
        &self.b_sizes
    }

    /// Start coordinate of T-block `k`.
    pub fn t_offset(&self, k: usize) -> usize {
        self.t_sizes[..k].iter().sum()
    }

    /// Start coordinate of B-block `l`.
    pub fn b_offset(&self, l: usize) -> usize {
        self.t_sizes.iter().sum::<usize>() + 2 * self.b_sizes[..l].iter().sum::<usize>()
    }

    /// 0-based positions of the distinguished lattice directions: the
    /// second coordinate of each B-block.
    pub fn lattice_positions(&self) -> Vec<usize> {
        (0..self.s()).map(|l| self.b_offset(l) + 1).collect()
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::InvalidPartition(format!(
                "partition covers dimension {}, matrix has {n}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// All block partitions of `n`, sizes listed descending within each
    /// group. Used by the constructor sweeps and the test harness.
    pub fn enumerate_all(n: usize) -> Vec<BlockPartition> {
        fn descending_partitions(n: usize, max: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for first in (1..=n.min(max)).rev() {
                for mut rest in descending_partitions(n - first, first) {
                    let mut p = vec![first];
                    p.append(&mut rest);
                    out.push(p);
                }
            }
            out
        }
        let mut out = Vec::new();
        for b_weight in 0..=(n / 2) {
            let t_weight = n - 2 * b_weight;
            for t in descending_partitions(t_weight, n.max(1)) {
                for b in descending_partitions(b_weight, n.max(1)) {
                    if t.is_empty() && b.is_empty() {
                        continue;
                    }
                    out.push(BlockPartition {
                        t_sizes: t.clone(),
                        b_sizes: b,
                    });
                }
            }
        }
        out
    }
}

impl std::fmt::Display for BlockPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "t{:?} b{:?}", self.t_sizes, self.b_sizes)
    }
}

/// Tolerances used across the pipeline.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative threshold for "entry is zero" / "entries are equal".
    pub structural_tol: f64,
    /// Relative threshold for invertibility.
    pub det_tol: f64,
    /// Coefficient bound for integer-relation searches.
    pub relation_height: u64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            structural_tol: 1e-9,
            det_tol: 1e-12,
            relation_height: 1_000_000,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.structural_tol < 0.0 || self.det_tol < 0.0 {
            return Err(Error::InvalidArgument(
                "tolerances must be nonnegative".into(),
            ));
        }
        if self.relation_height < 2 {
            return Err(Error::InvalidArgument(
                "relation height must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Threshold for numerical-rank decisions in subspace extraction.
    pub(crate) fn rank_tol(&self, scale: f64) -> f64 {
        (100.0 * self.structural_tol).max(1e-7) * (1.0 + scale)
    }
}

/// Finite list of same-dimension generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFamily {
    pub n: usize,
    pub generators: Vec<RealMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl MatrixFamily {
    pub fn new(generators: Vec<RealMatrix>) -> Result<Self> {
        let n = generators
            .first()
            .map(|g| g.dim())
            .ok_or_else(|| Error::InvalidMatrix("family has no generators".into()))?;
        let family = Self {
            n,
            generators,
            labels: None,
        };
        family.validate()?;
        Ok(family)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_DIM {
            return Err(Error::InvalidMatrix(format!(
                "dimension {} outside supported range 1..={MAX_DIM}",
                self.n
            )));
        }
        for (i, g) in self.generators.iter().enumerate() {
            if g.dim() != self.n {
                return Err(Error::DimensionMismatch {
                    first: 0,
                    second: i,
                    dim_first: self.n,
                    dim_second: g.dim(),
                });
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.generators.len() {
                return Err(Error::InvalidMatrix(format!(
                    "{} labels for {} generators",
                    labels.len(),
                    self.generators.len()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn norm_max(&self) -> f64 {
        self.generators
            .iter()
            .fold(0.0f64, |m, g| m.max(g.norm_max()))
    }
}

/// Worst relative commutator over all generator pairs, with the pair
/// achieving it. Residual of pair (A, B) is
/// `max|AB - BA| / (1 + |A| |B|)` in the max-abs norm.
pub fn commute_residual(family: &MatrixFamily) -> Result<(f64, Option<(usize, usize)>)> {
    family.validate()?;
    let mut worst = 0.0f64;
    let mut pair = None;
    for i in 0..family.len() {
        for j in (i + 1)..family.len() {
            let a = &family.generators[i];
            let b = &family.generators[j];
            let comm = &(a * b) - &(b * a);
            let res = comm.norm_max() / (1.0 + a.norm_max() * b.norm_max());
            if res > worst {
                worst = res;
                pair = Some((i, j));
            }
        }
    }
    Ok((worst, pair))
}

/// True iff every generator pair commutes within the structural
/// tolerance, relative to the pair's norms.
pub fn commute_check(family: &MatrixFamily, tol: &ToleranceConfig) -> Result<bool> {
    let (res, _) = commute_residual(family)?;
    Ok(res <= tol.structural_tol)
}

/// Absolute deviation of `a` from exact block structure: the largest
/// entry that should vanish, or difference of entries that should match.
pub fn k_structure_residual(a: &RealMatrix, part: &BlockPartition) -> Result<f64> {
    part.check_dim(a.dim())?;
    Ok(k_structure_worst(a, part).map_or(0.0, |(_, _, d)| d))
}

/// Location and size of the worst structural deviation, if any entry
/// deviates at all.
pub fn k_structure_worst(a: &RealMatrix, part: &BlockPartition) -> Option<(usize, usize, f64)> {
    let n = a.dim();
    let mut worst: Option<(usize, usize, f64)> = None;
    let mut push = |i: usize, j: usize, d: f64| {
        if d > worst.map_or(0.0, |(_, _, w)| w) {
            worst = Some((i, j, d));
        }
    };

    // Membership of each coordinate in its block, as (block id, start).
    let mut block_of = vec![(0usize, 0usize); n];
    let mut id = 0;
    for k in 0..part.r() {
        let off = part.t_offset(k);
        for i in off..off + part.t_sizes()[k] {
            block_of[i] = (id, off);
        }
        id += 1;
    }
    for l in 0..part.s() {
        let off = part.b_offset(l);
        for i in off..off + 2 * part.b_sizes()[l] {
            block_of[i] = (id, off);
        }
        id += 1;
    }

    // Off-block entries must vanish.
    for i in 0..n {
        for j in 0..n {
            if block_of[i].0 != block_of[j].0 {
                push(i, j, a[(i, j)].abs());
            }
        }
    }

    // T-blocks: lower triangular with constant diagonal.
    for k in 0..part.r() {
        let off = part.t_offset(k);
        let nk = part.t_sizes()[k];
        for i in 0..nk {
            for j in (i + 1)..nk {
                push(off + i, off + j, a[(off + i, off + j)].abs());
            }
            push(
                off + i,
                off + i,
                (a[(off + i, off + i)] - a[(off, off)]).abs(),
            );
        }
    }

    // B-blocks: lower block triangular over SBlocks, constant diagonal SBlock.
    for l in 0..part.s() {
        let off = part.b_offset(l);
        let m = part.b_sizes()[l];
        for bi in 0..m {
            for bj in 0..m {
                let (i0, j0) = (off + 2 * bi, off + 2 * bj);
                if bj > bi {
                    for di in 0..2 {
                        for dj in 0..2 {
                            push(i0 + di, j0 + dj, a[(i0 + di, j0 + dj)].abs());
                        }
                    }
                    continue;
                }
                // SBlock shape within the 2x2 cell.
                push(i0, j0, (a[(i0, j0)] - a[(i0 + 1, j0 + 1)]).abs());
                push(i0, j0 + 1, (a[(i0, j0 + 1)] + a[(i0 + 1, j0)]).abs());
                if bj == bi {
                    // Constant diagonal: compare against the leading SBlock.
                    push(i0, j0, (a[(i0, j0)] - a[(off, off)]).abs());
                    push(i0, j0 + 1, (a[(i0, j0 + 1)] - a[(off, off + 1)]).abs());
                }
            }
        }
    }

    worst
}

/// Structure predicate for the block class, relative tolerance.
pub fn is_in_k(a: &RealMatrix, part: &BlockPartition, tol: &ToleranceConfig) -> bool {
    match k_structure_residual(a, part) {
        Ok(res) => res <= tol.structural_tol * (1.0 + a.norm_max()),
        Err(_) => false,
    }
}

/// Lower-triangular block with constant diagonal `eigenvalue`.
#[derive(Clone, Debug)]
pub struct TBlock {
    pub size: usize,
    pub eigenvalue: f64,
    pub matrix: RealMatrix,
}

/// Block of SBlocks with constant diagonal SBlock `diagonal`
/// (eigenvalue pair `alpha +/- i*beta`).
#[derive(Clone, Debug)]
pub struct BBlock {
    pub m: usize,
    pub diagonal: SBlock,
    pub matrix: RealMatrix,
}

/// Split a structured matrix into its blocks, reading the block
/// eigenvalues off the diagonal.
pub fn block_split(
    a: &RealMatrix,
    part: &BlockPartition,
    tol: &ToleranceConfig,
) -> Result<(Vec<TBlock>, Vec<BBlock>)> {
    part.check_dim(a.dim())?;
    let threshold = tol.structural_tol * (1.0 + a.norm_max());
    if let Some((i, j, dev)) = k_structure_worst(a, part) {
        if dev > threshold {
            return Err(Error::StructureViolation {
                row: i,
                col: j,
                detail: format!("deviation {dev:.3e} exceeds threshold {threshold:.3e}"),
            });
        }
    }
    let mut t_blocks = Vec::with_capacity(part.r());
    for k in 0..part.r() {
        let off = part.t_offset(k);
        let nk = part.t_sizes()[k];
        let mut m = RealMatrix::zeros(nk);
        for i in 0..nk {
            for j in 0..nk {
                m[(i, j)] = a[(off + i, off + j)];
            }
        }
        t_blocks.push(TBlock {
            size: nk,
            eigenvalue: a[(off, off)],
            matrix: m,
        });
    }
    let mut b_blocks = Vec::with_capacity(part.s());
    for l in 0..part.s() {
        let off = part.b_offset(l);
        let ml = part.b_sizes()[l];
        let mut m = RealMatrix::zeros(2 * ml);
        for i in 0..2 * ml {
            for j in 0..2 * ml {
                m[(i, j)] = a[(off + i, off + j)];
            }
        }
        b_blocks.push(BBlock {
            m: ml,
            diagonal: SBlock::new(a[(off, off)], a[(off, off + 1)]),
            matrix: m,
        });
    }
    Ok((t_blocks, b_blocks))
}

/// Reassemble a block-diagonal matrix from T- and B-blocks.
pub fn block_join(t_blocks: &[TBlock], b_blocks: &[BBlock]) -> RealMatrix {
    let n: usize = t_blocks.iter().map(|b| b.size).sum::<usize>()
        + b_blocks.iter().map(|b| 2 * b.m).sum::<usize>();
    let mut out = RealMatrix::zeros(n);
    let mut off = 0;
    for b in t_blocks {
        for i in 0..b.size {
            for j in 0..b.size {
                out[(off + i, off + j)] = b.matrix[(i, j)];
            }
        }
        off += b.size;
    }
    for b in b_blocks {
        for i in 0..2 * b.m {
            for j in 0..2 * b.m {
                out[(off + i, off + j)] = b.matrix[(i, j)];
            }
        }
        off += 2 * b.m;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> RealMatrix {
        RealMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn diag(entries: &[f64]) -> RealMatrix {
        let mut m = RealMatrix::zeros(entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    #[test]
    fn commute_check_diagonal_pair() {
        let fam = MatrixFamily::new(vec![diag(&[1.0, 2.0]), diag(&[3.0, 4.0])]).unwrap();
        assert!(commute_check(&fam, &ToleranceConfig::default()).unwrap());
    }

    #[test]
    fn commute_check_nilpotent_pair_fails() {
        // Oracle: direct multiplication gives commutator diag(1, -1).
        let a = mat(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let b = mat(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let comm = &(&a * &b) - &(&b * &a);
        assert_eq!(comm, diag(&[1.0, -1.0]));
        let fam = MatrixFamily::new(vec![a, b]).unwrap();
        assert!(!commute_check(&fam, &ToleranceConfig::default()).unwrap());
        let (res, pair) = commute_residual(&fam).unwrap();
        assert!(res > 0.4);
        assert_eq!(pair, Some((0, 1)));
    }

    #[test]
    fn commute_check_symmetric_and_conjugation_invariant() {
        let a = mat(&[&[1.0, 0.0], &[2.0, 1.0]]);
        let b = mat(&[&[3.0, 0.0], &[-1.0, 3.0]]);
        let fam_ab = MatrixFamily::new(vec![a.clone(), b.clone()]).unwrap();
        let fam_ba = MatrixFamily::new(vec![b.clone(), a.clone()]).unwrap();
        let (r1, _) = commute_residual(&fam_ab).unwrap();
        let (r2, _) = commute_residual(&fam_ba).unwrap();
        assert_eq!(r1, r2);

        let q = mat(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let qi = q.try_inverse().unwrap();
        let conj =
            MatrixFamily::new(vec![&(&q * &a) * &qi, &(&q * &b) * &qi]).unwrap();
        let (r3, _) = commute_residual(&conj).unwrap();
        let cond = q.condition_number().unwrap();
        assert!(r3 <= 1e-12 * cond * cond);
    }

    #[test]
    fn is_in_k_t_block_forms() {
        let tol = ToleranceConfig::default();
        let part = BlockPartition::new(vec![2], vec![]).unwrap();
        let e_pi = std::f64::consts::PI.exp();
        assert!(is_in_k(&diag(&[e_pi, e_pi]), &part, &tol));
        assert!(is_in_k(&RealMatrix::identity(2), &part, &tol));
        // Upper-triangular entry violates the lower-triangular form.
        assert!(!is_in_k(&mat(&[&[1.0, 1.0], &[0.0, 1.0]]), &part, &tol));
        // Non-constant diagonal violates it too.
        assert!(!is_in_k(&diag(&[1.0, 2.0]), &part, &tol));
        let finer = BlockPartition::new(vec![1, 1], vec![]).unwrap();
        assert!(is_in_k(&diag(&[1.0, 2.0]), &finer, &tol));
    }

    #[test]
    fn is_in_k_b_block_forms() {
        let tol = ToleranceConfig::default();
        let part = BlockPartition::new(vec![], vec![1, 1]).unwrap();
        assert!(is_in_k(&RealMatrix::identity(4), &part, &tol));
        let rot = mat(&[
            &[0.0, -1.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 3.0, 0.5],
            &[0.0, 0.0, -0.5, 3.0],
        ]);
        assert!(is_in_k(&rot, &part, &tol));
        // Breaking the SBlock symmetry is detected.
        let mut bad = rot.clone();
        bad[(1, 0)] = 0.9;
        assert!(!is_in_k(&bad, &part, &tol));

        let stacked = BlockPartition::new(vec![], vec![2]).unwrap();
        let m = mat(&[
            &[2.0, 1.0, 0.0, 0.0],
            &[-1.0, 2.0, 0.0, 0.0],
            &[4.0, 5.0, 2.0, 1.0],
            &[-5.0, 4.0, -1.0, 2.0],
        ]);
        assert!(is_in_k(&m, &stacked, &tol));
        // Non-constant diagonal SBlock fails.
        let mut bad2 = m.clone();
        bad2[(2, 2)] = 7.0;
        bad2[(3, 3)] = 7.0;
        assert!(!is_in_k(&bad2, &stacked, &tol));
    }

    #[test]
    fn block_split_reads_eigenvalues() {
        let tol = ToleranceConfig::default();
        let a2 = mat(&[&[-1.0, 0.0], &[-std::f64::consts::PI, -1.0]]);
        let part = BlockPartition::new(vec![2], vec![]).unwrap();
        let (t, b) = block_split(&a2, &part, &tol).unwrap();
        assert_eq!(t.len(), 1);
        assert!(b.is_empty());
        assert_eq!(t[0].eigenvalue, -1.0);

        let part4 = BlockPartition::new(vec![], vec![1, 1]).unwrap();
        let (t, b) = block_split(&RealMatrix::identity(4), &part4, &tol).unwrap();
        assert!(t.is_empty());
        assert_eq!(b.len(), 2);
        for bl in &b {
            assert_eq!(bl.diagonal, SBlock::new(1.0, 0.0));
        }

        let part11 = BlockPartition::new(vec![1, 1], vec![]).unwrap();
        let (t, _) = block_split(&diag(&[2.0, 3.0]), &part11, &tol).unwrap();
        assert_eq!(t[0].eigenvalue, 2.0);
        assert_eq!(t[1].eigenvalue, 3.0);
    }

    #[test]
    fn block_split_rejects_structure_violation() {
        let tol = ToleranceConfig::default();
        let part = BlockPartition::new(vec![1, 1], vec![]).unwrap();
        let a = mat(&[&[1.0, 0.0], &[5.0, 2.0]]);
        let err = block_split(&a, &part, &tol).unwrap_err();
        match err {
            Error::StructureViolation { row, col, .. } => {
                assert_eq!((row, col), (1, 0));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn block_join_roundtrip() {
        let tol = ToleranceConfig::default();
        let part = BlockPartition::new(vec![2, 1], vec![1]).unwrap();
        let a = mat(&[
            &[1.5, 0.0, 0.0, 0.0, 0.0],
            &[2.0, 1.5, 0.0, 0.0, 0.0],
            &[0.0, 0.0, -3.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.25, 2.0],
            &[0.0, 0.0, 0.0, -2.0, 0.25],
        ]);
        let (t, b) = block_split(&a, &part, &tol).unwrap();
        assert_eq!(block_join(&t, &b), a);
    }

    #[test]
    fn k_class_closed_under_multiplication() {
        use rand::{Rng, SeedableRng};
        let tol = ToleranceConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let part = BlockPartition::new(vec![2], vec![1]).unwrap();
        for _ in 0..50 {
            let mut sample = || {
                let mut m = RealMatrix::zeros(4);
                let mu = rng.gen_range(-2.0..2.0);
                m[(0, 0)] = mu;
                m[(1, 1)] = mu;
                m[(1, 0)] = rng.gen_range(-2.0..2.0);
                let s = SBlock::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                m[(2, 2)] = s.alpha;
                m[(3, 3)] = s.alpha;
                m[(2, 3)] = s.beta;
                m[(3, 2)] = -s.beta;
                m
            };
            let a = sample();
            let b = sample();
            assert!(is_in_k(&(&a * &b), &part, &tol));
        }
    }

    #[test]
    fn partition_enumeration_counts() {
        assert_eq!(BlockPartition::enumerate_all(1).len(), 1);
        // n=2: t[2], t[1,1], b[1]
        assert_eq!(BlockPartition::enumerate_all(2).len(), 3);
        // n=3: t[3], t[2,1], t[1,1,1], t[1]b[1]
        assert_eq!(BlockPartition::enumerate_all(3).len(), 4);
        // n=4: 5 pure-T, t[2]b[1], t[1,1]b[1], b[2], b[1,1]
        assert_eq!(BlockPartition::enumerate_all(4).len(), 9);
        for p in BlockPartition::enumerate_all(5) {
            assert_eq!(p.dim(), 5);
        }
    }

    #[test]
    fn family_json_schema() {
        let fam = MatrixFamily {
            n: 2,
            generators: vec![diag(&[1.0, 2.0])],
            labels: Some(vec!["a".into()]),
        };
        let js = serde_json::to_string(&fam).unwrap();
        assert_eq!(js, r#"{"n":2,"generators":[[[1.0,0.0],[0.0,2.0]]],"labels":["a"]}"#);
        let back: MatrixFamily = serde_json::from_str(&js).unwrap();
        assert_eq!(back, fam);

        let part = BlockPartition::new(vec![2, 1], vec![1]).unwrap();
        let js = serde_json::to_string(&part).unwrap();
        assert_eq!(js, r#"{"t_blocks":[2,1],"b_blocks":[1]}"#);
    }

    #[test]
    fn rejects_nonfinite_and_oversize() {
        assert!(RealMatrix::from_rows(&[vec![f64::NAN]]).is_err());
        let rows = vec![vec![0.0; 33]; 33];
        assert!(RealMatrix::from_rows(&rows).is_err());
        assert!(RealVector::from_entries(vec![f64::INFINITY]).is_err());
    }
}
