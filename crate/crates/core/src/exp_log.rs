//! Blockwise exponential and principal logarithm on the structured
//! class, including the `2*pi*J` branch ambiguity of the rotation-scale
//! blocks.
//!
//! Everything here exploits that a structured block is a (real or
//! complex) scalar plus a nilpotent: the exp/log series terminate at
//! the block size, so no scaling-squaring or Pade machinery is needed.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{
    block_join, block_split, BBlock, BlockPartition, RealMatrix, SBlock, TBlock, ToleranceConfig,
};

/// Principal logarithm of a structured matrix plus the directions along
/// which other logarithms differ: `exp(log + 2*pi*k_l*L_l)` reproduces
/// the input for every integer choice of `k`.
#[derive(Clone, Debug)]
pub struct KLogResult {
    pub log: RealMatrix,
    /// One embedded block-rotation generator per B-block, unscaled.
    pub branch_generators: Vec<RealMatrix>,
}

fn exp_scalar_plus_nilpotent(
    nilpotent: &DMatrix<Complex64>,
    lambda: Complex64,
) -> DMatrix<Complex64> {
    let d = nilpotent.nrows();
    let mut sum = DMatrix::<Complex64>::identity(d, d);
    let mut term = DMatrix::<Complex64>::identity(d, d);
    for j in 1..d {
        term = (&term * nilpotent) / Complex64::new(j as f64, 0.0);
        sum += &term;
    }
    sum * lambda.exp()
}

/// log(lambda*(I + M)) = Log(lambda)*I + sum_{j>=1} (-1)^{j+1} M^j / j
/// for nilpotent M; `Log` is the principal branch.
fn log_scalar_plus_nilpotent(
    unipotent_part: &DMatrix<Complex64>,
    lambda: Complex64,
) -> DMatrix<Complex64> {
    let d = unipotent_part.nrows();
    let mut sum = DMatrix::<Complex64>::identity(d, d) * lambda.ln();
    let mut term = DMatrix::<Complex64>::identity(d, d);
    let mut sign = 1.0;
    for j in 1..d {
        term = &term * unipotent_part;
        sum += &term * Complex64::new(sign / j as f64, 0.0);
        sign = -sign;
    }
    sum
}

fn t_block_to_complex(block: &RealMatrix) -> DMatrix<Complex64> {
    let d = block.dim();
    DMatrix::from_fn(d, d, |i, j| Complex64::new(block[(i, j)], 0.0))
}

fn complex_to_t_block(m: &DMatrix<Complex64>) -> RealMatrix {
    let d = m.nrows();
    let mut out = RealMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = m[(i, j)].re;
        }
    }
    out
}

/// Read a 2m x 2m matrix of SBlocks as an m x m complex matrix.
fn b_block_to_complex(block: &RealMatrix) -> DMatrix<Complex64> {
    let m = block.dim() / 2;
    DMatrix::from_fn(m, m, |i, j| {
        SBlock::new(block[(2 * i, 2 * j)], block[(2 * i, 2 * j + 1)]).to_complex()
    })
}

fn complex_to_b_block(m: &DMatrix<Complex64>) -> RealMatrix {
    let d = m.nrows();
    let mut out = RealMatrix::zeros(2 * d);
    for i in 0..d {
        for j in 0..d {
            let s = SBlock::from_complex(m[(i, j)]);
            out[(2 * i, 2 * j)] = s.alpha;
            out[(2 * i, 2 * j + 1)] = s.beta;
            out[(2 * i + 1, 2 * j)] = -s.beta;
            out[(2 * i + 1, 2 * j + 1)] = s.alpha;
        }
    }
    out
}

fn finite_or_overflow(m: RealMatrix, what: &str) -> Result<RealMatrix> {
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} overflowed double precision"
        )))
    }
}

/// Blockwise exponential. T-blocks map to positive-eigenvalue blocks,
/// B-blocks to invertible ones, so the image is exactly the positive
/// sub-class.
pub fn exp_k(b: &RealMatrix, part: &BlockPartition, tol: &ToleranceConfig) -> Result<RealMatrix> {
    let (t_blocks, b_blocks) = block_split(b, part, tol)?;
    let mut t_out = Vec::with_capacity(t_blocks.len());
    for tb in &t_blocks {
        let lambda = Complex64::new(tb.eigenvalue, 0.0);
        let nilpotent = t_block_to_complex(&tb.matrix)
            - DMatrix::<Complex64>::identity(tb.size, tb.size) * lambda;
        let e = exp_scalar_plus_nilpotent(&nilpotent, lambda);
        t_out.push(TBlock {
            size: tb.size,
            eigenvalue: tb.eigenvalue.exp(),
            matrix: complex_to_t_block(&e),
        });
    }
    let mut b_out = Vec::with_capacity(b_blocks.len());
    for bb in &b_blocks {
        let lambda = bb.diagonal.to_complex();
        let c = b_block_to_complex(&bb.matrix);
        let nilpotent = c - DMatrix::<Complex64>::identity(bb.m, bb.m) * lambda;
        let e = exp_scalar_plus_nilpotent(&nilpotent, lambda);
        b_out.push(BBlock {
            m: bb.m,
            diagonal: SBlock::from_complex(lambda.exp()),
            matrix: complex_to_b_block(&e),
        });
    }
    finite_or_overflow(block_join(&t_out, &b_out), "block exponential")
}

/// Embedded block-rotation generator for B-block `l`: zero everywhere
/// except slot `l`, which carries `diag(J_2, ..., J_2)`.
pub fn branch_generator(part: &BlockPartition, l: usize) -> RealMatrix {
    let mut out = RealMatrix::zeros(part.dim());
    let off = part.b_offset(l);
    for i in 0..part.b_sizes()[l] {
        out[(off + 2 * i, off + 2 * i + 1)] = -1.0;
        out[(off + 2 * i + 1, off + 2 * i)] = 1.0;
    }
    out
}

/// Principal logarithm on the positive sub-class. T-blocks require a
/// strictly positive eigenvalue; this is exactly why callers square
/// their generators first. B-block angles land in `(-pi, pi]`.
pub fn principal_log_k(
    a: &RealMatrix,
    part: &BlockPartition,
    tol: &ToleranceConfig,
) -> Result<KLogResult> {
    let (t_blocks, b_blocks) = block_split(a, part, tol)?;
    let mut t_out = Vec::with_capacity(t_blocks.len());
    for (k, tb) in t_blocks.iter().enumerate() {
        if tb.eigenvalue <= tol.det_tol {
            return Err(Error::NotInExpImage(format!(
                "T-block {k} has eigenvalue {:.3e} <= {:.1e}; only positive-eigenvalue blocks \
                 have a real logarithm (square the generator first)",
                tb.eigenvalue, tol.det_tol
            )));
        }
        // Pre-scale by the eigenvalue so the series sees the unipotent part.
        let mu = tb.eigenvalue;
        let scaled = t_block_to_complex(&tb.matrix.scale(1.0 / mu));
        let unipotent_part = scaled - DMatrix::<Complex64>::identity(tb.size, tb.size);
        let l = log_scalar_plus_nilpotent(&unipotent_part, Complex64::new(mu, 0.0));
        t_out.push(TBlock {
            size: tb.size,
            eigenvalue: mu.ln(),
            matrix: complex_to_t_block(&l),
        });
    }
    let mut b_out = Vec::with_capacity(b_blocks.len());
    for (l_idx, bb) in b_blocks.iter().enumerate() {
        let lambda = bb.diagonal.to_complex();
        if lambda.norm_sqr() <= tol.det_tol * tol.det_tol {
            return Err(Error::NotInExpImage(format!(
                "B-block {l_idx} has diagonal modulus {:.3e} <= {:.1e}; not invertible",
                lambda.norm(),
                tol.det_tol
            )));
        }
        let scaled = b_block_to_complex(&bb.matrix) / lambda;
        let unipotent_part = scaled - DMatrix::<Complex64>::identity(bb.m, bb.m);
        let l = log_scalar_plus_nilpotent(&unipotent_part, lambda);
        b_out.push(BBlock {
            m: bb.m,
            diagonal: SBlock::from_complex(lambda.ln()),
            matrix: complex_to_b_block(&l),
        });
    }
    let log = finite_or_overflow(block_join(&t_out, &b_out), "block logarithm")?;
    let branch_generators = (0..part.s()).map(|l| branch_generator(part, l)).collect();
    Ok(KLogResult {
        log,
        branch_generators,
    })
}

/// Pick the logarithm branch `log + sum 2*pi*k_l*L_l`.
pub fn log_branch(res: &KLogResult, k: &[i64]) -> Result<RealMatrix> {
    if k.len() != res.branch_generators.len() {
        return Err(Error::BranchLengthMismatch {
            got: k.len(),
            expected: res.branch_generators.len(),
        });
    }
    let mut out = res.log.clone();
    for (l, &kl) in k.iter().enumerate() {
        let shift = res.branch_generators[l].scale(2.0 * std::f64::consts::PI * kl as f64);
        out = &out + &shift;
    }
    Ok(out)
}
