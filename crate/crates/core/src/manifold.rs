//! Riemannian geometry of the unitary group U(m) with the Euclidean metric
//! `<X, Y> = Re Tr[X†Y]`, and of products of such groups.
//!
//! Conventions: a real function `f` of a complex matrix has gradient
//! `∂_x f + i ∂_y f` entrywise, so that `d/dε f(G + εX) = Re Tr[grad† X]`.
//! The circuit objective is `f = −Re f̃` with `f̃` holomorphic; its Euclidean
//! gradient is therefore `−conj(∂f̃/∂G)` ([`euclid_gradient_from_holomorphic`]).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{GateMatrix, ALL_ENTRIES, C64, EVEN_BLOCK, ODD_BLOCK, PARITY_ZEROS};

pub type CMat = DMatrix<C64>;

/// Tolerance on `‖V†V − I‖_F` for points.
pub const POINT_TOL: f64 = 1e-10;
/// Singular values below this make the polar factor ill-defined.
pub const DEGENERATE_SV: f64 = 1e-12;

/// Anti-Hermitian part `(A − A†)/2`.
pub fn asym(a: &CMat) -> CMat {
    (a - a.adjoint()) * C64::new(0.5, 0.0)
}

/// `P_V X = V asym(V† X)`.
pub fn project(v: &CMat, x: &CMat) -> CMat {
    v * asym(&(v.adjoint() * x))
}

/// `Re Tr[X† Y]`.
pub fn inner_raw(x: &CMat, y: &CMat) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
}

/// Unitary factor of the polar decomposition `A = Q P`, computed as `W Y†`
/// from the SVD `A = W Σ Y†`.
pub fn polar_factor(a: &CMat) -> Result<CMat> {
    let svd = a.clone().svd(true, true);
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smin > DEGENERATE_SV) {
        return Err(Error::DegenerateRetraction(smin));
    }
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    Ok(u * vt)
}

/// `‖V†V − I‖_F`.
pub fn unitarity_deviation(v: &CMat) -> f64 {
    let m = v.nrows();
    (v.adjoint() * v - CMat::identity(m, m)).norm()
}

/// A point on U(m).
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryPoint {
    matrix: CMat,
}

impl UnitaryPoint {
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::ShapeMismatch(format!("{}x{} is not square", matrix.nrows(), matrix.ncols())));
        }
        let dev = unitarity_deviation(&matrix);
        if !(dev < POINT_TOL) {
            return Err(Error::NotUnitary(dev));
        }
        Ok(UnitaryPoint { matrix })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// A tangent vector `X ∈ T_V U(m)`, i.e. `V†X` anti-Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    base: UnitaryPoint,
    matrix: CMat,
}

impl TangentVector {
    pub fn base(&self) -> &UnitaryPoint {
        &self.base
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// `‖V†X + (V†X)†‖_F`; zero for exact tangents.
    pub fn tangency_defect(&self) -> f64 {
        let a = self.base.matrix.adjoint() * &self.matrix;
        (&a + a.adjoint()).norm()
    }
}

pub fn project_tangent(v: &UnitaryPoint, x: &CMat) -> Result<TangentVector> {
    if x.shape() != v.matrix.shape() {
        return Err(Error::ShapeMismatch("tangent candidate does not match base point".into()));
    }
    Ok(TangentVector { base: v.clone(), matrix: project(&v.matrix, x) })
}

/// `R_V(ξ) = q_polar(V + ξ)`.
pub fn retract_polar(xi: &TangentVector) -> Result<UnitaryPoint> {
    let q = polar_factor(&(&xi.base.matrix + &xi.matrix))?;
    Ok(UnitaryPoint { matrix: q })
}

/// `<X, Y>_V = Tr[X†Y]`, real for tangent vectors at a common base.
pub fn inner(x: &TangentVector, y: &TangentVector) -> Result<f64> {
    if x.base != y.base {
        return Err(Error::BaseMismatch);
    }
    let tr: C64 = x.matrix.iter().zip(y.matrix.iter()).map(|(a, b)| a.conj() * b).sum();
    let scale = x.matrix.norm() * y.matrix.norm();
    debug_assert!(tr.im.abs() <= 1e-12 * scale.max(1.0), "Tr[X†Y] has imaginary part {}", tr.im);
    Ok(tr.re)
}

/// Euclidean gradient `−conj(D)` of `−Re f̃` from the holomorphic derivative
/// `D = ∂f̃/∂G`.
pub fn euclid_gradient_from_holomorphic(d: &CMat) -> CMat {
    -d.map(|z| z.conj())
}

/// Riemannian Hessian `P_V(D[V asym(V† ḡ(V))](X))` expanded by the product
/// rule, given the Euclidean gradient `ḡ` at `V` and its directional
/// derivative `Dḡ[X]`.
pub fn riemannian_hessian_apply(v: &CMat, egrad: &CMat, egrad_dir: &CMat, x: &CMat) -> Result<CMat> {
    let shape = v.shape();
    if egrad.shape() != shape || egrad_dir.shape() != shape || x.shape() != shape {
        return Err(Error::ShapeMismatch("hessian operands differ in shape".into()));
    }
    let vh = v.adjoint();
    let first = x * asym(&(&vh * egrad));
    let second = v * asym(&(x.adjoint() * egrad + &vh * egrad_dir));
    Ok(project(v, &(first + second)))
}

/// Odd (`rows/cols {1, 2}`) and even (`{0, 3}`) 2x2 blocks of a
/// parity-conserving gate.
pub fn parity_split(g: &GateMatrix) -> Result<(CMat, CMat)> {
    let off = g.off_parity_magnitude();
    if off >= 1e-12 {
        return Err(Error::NotParitySparse(off));
    }
    Ok((gather_block(g, &ODD_BLOCK), gather_block(g, &EVEN_BLOCK)))
}

/// Inverse of [`parity_split`]; the eight off-pattern entries are exact zeros.
pub fn parity_join(odd: &CMat, even: &CMat) -> Result<GateMatrix> {
    if odd.shape() != (2, 2) || even.shape() != (2, 2) {
        return Err(Error::ShapeMismatch("parity blocks must be 2x2".into()));
    }
    let mut g = GateMatrix::zeros();
    scatter_block(&mut g, &ODD_BLOCK, odd);
    scatter_block(&mut g, &EVEN_BLOCK, even);
    debug_assert!(PARITY_ZEROS.iter().all(|&e| g.0[e] == C64::new(0.0, 0.0)));
    Ok(g)
}

fn gather_block(g: &GateMatrix, entries: &[usize]) -> CMat {
    let m = (entries.len() as f64).sqrt() as usize;
    CMat::from_fn(m, m, |i, j| g.0[entries[i * m + j]])
}

fn scatter_block(g: &mut GateMatrix, entries: &[usize], block: &CMat) {
    let m = block.nrows();
    for i in 0..m {
        for j in 0..m {
            g.0[entries[i * m + j]] = block[(i, j)];
        }
    }
}

pub fn gate_to_cmat(g: &GateMatrix) -> CMat {
    gather_block(g, &ALL_ENTRIES)
}

pub fn cmat_to_gate(m: &CMat) -> GateMatrix {
    let mut g = GateMatrix::zeros();
    scatter_block(&mut g, &ALL_ENTRIES, m);
    g
}

/// How each logical 4x4 gate maps onto manifold components: the whole of
/// U(4), or the two parity blocks on U(2)×U(2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GateParametrization {
    #[default]
    Full,
    Parity,
}

impl GateParametrization {
    pub fn components_per_gate(self) -> usize {
        match self {
            GateParametrization::Full => 1,
            GateParametrization::Parity => 2,
        }
    }

    /// Gate entries (row-major 4x4 indices) of component `c` of a gate, in the
    /// component's own row-major order.
    pub fn component_entries(self, c: usize) -> &'static [usize] {
        match (self, c) {
            (GateParametrization::Full, _) => &ALL_ENTRIES,
            (GateParametrization::Parity, 0) => &ODD_BLOCK,
            (GateParametrization::Parity, _) => &EVEN_BLOCK,
        }
    }

    /// Components of every gate, in gate order.
    pub fn split(self, gates: &[GateMatrix]) -> Result<Vec<CMat>> {
        let mut out = Vec::with_capacity(gates.len() * self.components_per_gate());
        for g in gates {
            match self {
                GateParametrization::Full => out.push(gate_to_cmat(g)),
                GateParametrization::Parity => {
                    let (odd, even) = parity_split(g)?;
                    out.push(odd);
                    out.push(even);
                }
            }
        }
        Ok(out)
    }

    /// Restriction of gate-shaped matrices (e.g. gradients) to components,
    /// without the sparsity check of [`Self::split`].
    pub fn gather(self, per_gate: &[GateMatrix]) -> Vec<CMat> {
        let per = self.components_per_gate();
        (0..per_gate.len() * per).map(|i| gather_block(&per_gate[i / per], self.component_entries(i % per))).collect()
    }

    /// Inverse of [`Self::gather`]; entries outside all components are zero.
    pub fn scatter(self, components: &[CMat]) -> Vec<GateMatrix> {
        let per = self.components_per_gate();
        (components.chunks(per))
            .map(|chunk| {
                let mut g = GateMatrix::zeros();
                for (c, m) in chunk.iter().enumerate() {
                    scatter_block(&mut g, self.component_entries(c), m);
                }
                g
            })
            .collect()
    }
}
