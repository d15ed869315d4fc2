use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{GateMatrix, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Holomorphic second derivatives `H̃(ℓ, ℓ')[a][b] = ∂²f̃ / ∂G_ℓ[e_a] ∂G_ℓ'[e_b]`
/// of the complex trace `f̃ = Tr[U†C(G)]` with respect to the logical gates,
/// restricted to the gate entries `e_a ∈ entries`.
///
/// Only blocks with `ℓ ≤ ℓ'` are stored. A diagonal block is nonzero only
/// when the logical gate occupies several slots.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianBlocks {
    n_logical: usize,
    entries: Vec<usize>,
    data: Vec<C64>,
    present: Vec<bool>,
}

impl HessianBlocks {
    pub fn zeros(n_logical: usize, entries: &[usize]) -> Self {
        let tri = n_logical * (n_logical + 1) / 2;
        let m = entries.len();
        HessianBlocks { n_logical, entries: entries.to_vec(), data: vec![ZERO; tri * m * m], present: vec![false; tri] }
    }

    pub fn n_logical(&self) -> usize {
        self.n_logical
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn arity(&self) -> usize {
        self.entries.len()
    }

    fn tri(&self, l: usize, l2: usize) -> usize {
        debug_assert!(l <= l2 && l2 < self.n_logical);
        l * self.n_logical - l * (l + 1) / 2 + l2
    }

    /// Adds `scale · B` (or its transpose) for a slot pair with logical ids
    /// `(la, lb)`, where `b[j * m + a]` holds `∂²/∂G_la[e_a] ∂G_lb[e_j]`.
    pub(crate) fn add_pair(&mut self, la: usize, lb: usize, b: &[C64], scale: f64) {
        let m = self.arity();
        let (l, l2, transpose) = if la <= lb { (la, lb, false) } else { (lb, la, true) };
        let t = self.tri(l, l2);
        self.present[t] = true;
        let block = &mut self.data[t * m * m..(t + 1) * m * m];
        for j in 0..m {
            for a in 0..m {
                let v = b[j * m + a] * scale;
                if la == lb {
                    block[a * m + j] += v;
                    block[j * m + a] += v;
                } else if transpose {
                    block[j * m + a] += v;
                } else {
                    block[a * m + j] += v;
                }
            }
        }
    }

    pub(crate) fn add_assign(&mut self, other: &HessianBlocks) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        for (a, b) in self.present.iter_mut().zip(&other.present) {
            *a |= b;
        }
    }

    /// Block `(l, l2)`; `None` when no slot pair contributes to it.
    pub fn block(&self, l: usize, l2: usize) -> Option<DMatrix<C64>> {
        let m = self.arity();
        let (lo, hi) = (l.min(l2), l.max(l2));
        let t = self.tri(lo, hi);
        if !self.present[t] {
            return None;
        }
        let data = &self.data[t * m * m..(t + 1) * m * m];
        let b = DMatrix::from_fn(m, m, |a, j| data[a * m + j]);
        Some(if l <= l2 { b } else { b.transpose() })
    }

    /// `(H̃ z)_ℓ = Σ_ℓ' H̃(ℓ, ℓ') z_ℓ'` on the stored entries; other entries of
    /// the result are zero.
    pub fn apply(&self, z: &[GateMatrix]) -> Result<Vec<GateMatrix>> {
        if z.len() != self.n_logical {
            return Err(Error::DimensionMismatch { expected: self.n_logical, found: z.len() });
        }
        let m = self.arity();
        let zs: Vec<Vec<C64>> = z.iter().map(|g| self.entries.iter().map(|&e| g.0[e]).collect()).collect();
        let mut out = vec![vec![ZERO; m]; self.n_logical];
        for l in 0..self.n_logical {
            for l2 in l..self.n_logical {
                let t = self.tri(l, l2);
                if !self.present[t] {
                    continue;
                }
                let block = &self.data[t * m * m..(t + 1) * m * m];
                for a in 0..m {
                    for j in 0..m {
                        let h = block[a * m + j];
                        out[l][a] += h * zs[l2][j];
                        if l != l2 {
                            out[l2][j] += h * zs[l][a];
                        }
                    }
                }
            }
        }
        Ok(out
            .into_iter()
            .map(|v| {
                let mut g = GateMatrix::zeros();
                for (&e, x) in self.entries.iter().zip(v) {
                    g.0[e] = x;
                }
                g
            })
            .collect())
    }

    /// Full symmetric matrix of size `n_logical · arity`, index `ℓ · arity + a`.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let m = self.arity();
        let dim = self.n_logical * m;
        let mut out = DMatrix::from_element(dim, dim, ZERO);
        for l in 0..self.n_logical {
            for l2 in l..self.n_logical {
                if let Some(b) = self.block(l, l2) {
                    out.view_mut((l * m, l2 * m), (m, m)).copy_from(&b);
                    out.view_mut((l2 * m, l * m), (m, m)).copy_from(&b.transpose());
                }
            }
        }
        out
    }

    /// The same blocks restricted to a subset of the stored entries.
    pub fn restrict(&self, entries: &[usize]) -> Result<HessianBlocks> {
        let pos: Vec<usize> = (entries.iter())
            .map(|e| {
                self.entries
                    .iter()
                    .position(|x| x == e)
                    .ok_or_else(|| Error::InvalidParameter(format!("entry {e} is not stored in these blocks")))
            })
            .collect::<Result<_>>()?;
        let (m, r) = (self.arity(), entries.len());
        let mut out = HessianBlocks::zeros(self.n_logical, entries);
        for t in 0..self.present.len() {
            out.present[t] = self.present[t];
            for a in 0..r {
                for j in 0..r {
                    out.data[t * r * r + a * r + j] = self.data[t * m * m + pos[a] * m + pos[j]];
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &HessianBlocks) -> f64 {
        assert_eq!(self.entries, other.entries, "blocks over different entries");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
}
