use nalgebra::DMatrix;

use super::{inverse_psd, smw_inverse, symmetrize};
use crate::error::{Error, Result};

/// Inverse of a symmetric block matrix that slides over time: blocks are
/// appended at the back and dropped from the front, each in `O((k·m)²)`
/// with only `m x m` inner systems.
#[derive(Debug, Clone)]
pub struct SlidingBlockInverse {
    block: usize,
    inverse: DMatrix<f64>,
}

impl SlidingBlockInverse {
    pub fn new(block: usize) -> Self {
        SlidingBlockInverse {
            block,
            inverse: DMatrix::zeros(0, 0),
        }
    }

    /// Starts from a full matrix made of `block x block` tiles.
    pub fn from_matrix(block: usize, matrix: &DMatrix<f64>) -> Result<Self> {
        if block == 0 || matrix.nrows() % block != 0 {
            return Err(Error::invalid(format!(
                "matrix of size {} is not made of {block}x{block} blocks",
                matrix.nrows()
            )));
        }
        Ok(SlidingBlockInverse {
            block,
            inverse: inverse_psd(matrix)?,
        })
    }

    pub fn blocks(&self) -> usize {
        self.inverse.nrows() / self.block
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// Appends a block row/column: the matrix becomes `[[S, b], [bᵀ, c]]`.
    ///
    /// `cross` is `b` (`k·m x m`) and `diag` is `c` (`m x m`, PD). The leading
    /// block of the new inverse is `(S - b c⁻¹ bᵀ)⁻¹`, a rank-`m` Woodbury
    /// update of `S⁻¹`.
    pub fn push_back(&mut self, cross: &DMatrix<f64>, diag: &DMatrix<f64>) -> Result<()> {
        let m = self.block;
        let k = self.inverse.nrows();
        if cross.nrows() != k || cross.ncols() != m || diag.shape() != (m, m) {
            return Err(Error::invalid("push_back: block shapes do not match"));
        }
        let c_inv = inverse_psd(diag)?;
        if k == 0 {
            self.inverse = c_inv;
            return Ok(());
        }
        let u = -(cross * &c_inv);
        let leading = smw_inverse(&self.inverse, &u, &cross.transpose())?;
        let top_right = -(&leading * cross * &c_inv);
        let bottom_right = &c_inv + &c_inv * cross.transpose() * &leading * cross * &c_inv;

        let mut next = DMatrix::zeros(k + m, k + m);
        next.view_mut((0, 0), (k, k)).copy_from(&leading);
        next.view_mut((0, k), (k, m)).copy_from(&top_right);
        next.view_mut((k, 0), (m, k)).copy_from(&top_right.transpose());
        next.view_mut((k, k), (m, m)).copy_from(&bottom_right);
        symmetrize(&mut next);
        self.inverse = next;
        Ok(())
    }

    /// Drops the first block row/column. With `S⁻¹ = [[E, F], [Fᵀ, G]]` the
    /// inverse of the trailing block is `G - Fᵀ E⁻¹ F`.
    pub fn pop_front(&mut self) -> Result<()> {
        let m = self.block;
        let k = self.inverse.nrows();
        if k < m {
            return Err(Error::invalid("pop_front on an empty matrix"));
        }
        let rest = k - m;
        let e = self.inverse.view((0, 0), (m, m)).clone_owned();
        let f = self.inverse.view((0, m), (m, rest)).clone_owned();
        let g = self.inverse.view((m, m), (rest, rest)).clone_owned();
        let e_inv_f = e
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::numerical("pop_front: leading block is singular"))?;
        let mut next = g - f.transpose() * e_inv_f;
        symmetrize(&mut next);
        self.inverse = next;
        Ok(())
    }
}
