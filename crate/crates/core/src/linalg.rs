//! Dense complex linear algebra helpers: Kronecker products, commutators,
//! matrix exponentials and norms.

use nalgebra::{linalg::SymmetricEigen, ComplexField, DVector};

use crate::scalar::{cr, lit, CMatrix, Cx, Real};

pub fn identity<T: Real>(dim: usize) -> CMatrix<T> {
    CMatrix::identity(dim, dim)
}

pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

pub fn trace<T: Real>(m: &CMatrix<T>) -> Cx<T> {
    m.diagonal().iter().fold(Cx::new(T::zero(), T::zero()), |acc, z| acc + *z)
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

pub fn frobenius<T: Real>(m: &CMatrix<T>) -> T {
    m.iter()
        .fold(T::zero(), |acc, z| acc + z.modulus_squared())
        .sqrt()
}

/// Induced 1-norm (maximum absolute column sum).
pub fn one_norm<T: Real>(m: &CMatrix<T>) -> T {
    m.column_iter()
        .map(|c| c.iter().fold(T::zero(), |acc, z| acc + z.modulus()))
        .fold(T::zero(), |a, b| a.max(b))
}

/// Spectral norm via singular values.
pub fn spectral_norm<T: Real>(m: &CMatrix<T>) -> T {
    m.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |a, &b| a.max(b))
}

/// Relative Hermiticity defect `‖M − M†‖_max / max(1, ‖M‖_max)`.
pub fn hermiticity_defect<T: Real>(m: &CMatrix<T>) -> T {
    if !m.is_square() {
        return T::max_value().unwrap_or_else(|| lit(f64::MAX));
    }
    let scale = max_abs(m).max(T::one());
    max_abs(&(m - m.adjoint())) / scale
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub struct HermitianEigen<T: Real> {
    pub values: DVector<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn new(m: &CMatrix<T>) -> Self {
        // symmetrize first so tiny asymmetries from accumulated products do not leak
        let herm = (m + m.adjoint()) * cr(lit::<T>(0.5));
        let eig = SymmetricEigen::new(herm);
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[i]
                .partial_cmp(&eig.eigenvalues[j])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    /// Same decomposition, computed per connected block of the sparsity
    /// pattern. Much cheaper when `m` conserves a symmetry such as parity.
    pub fn blockwise(m: &CMatrix<T>) -> Self {
        let blocks = connected_blocks(m);
        if blocks.len() <= 1 {
            return Self::new(m);
        }
        let n = m.nrows();
        let eigs: Vec<Self> = blocks
            .iter()
            .map(|idx| Self::new(&CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])))
            .collect();
        let mut order: Vec<(T, usize, usize)> = eigs
            .iter()
            .enumerate()
            .flat_map(|(b, e)| e.values.iter().enumerate().map(move |(k, &v)| (v, b, k)))
            .collect();
        order.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
        let values = DVector::from_iterator(n, order.iter().map(|o| o.0));
        let mut vectors = CMatrix::zeros(n, n);
        for (dst, &(_, b, k)) in order.iter().enumerate() {
            for (i, &row) in blocks[b].iter().enumerate() {
                vectors[(row, dst)] = eigs[b].vectors[(i, k)];
            }
        }
        Self { values, vectors }
    }

    /// `exp(−i H t)` from the stored decomposition.
    pub fn propagator(&self, t: T) -> CMatrix<T> {
        let phases = self
            .values
            .map(|e| Cx::new(T::zero(), -e * t).exp());
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        &scaled * self.vectors.adjoint()
    }

    /// Applies `f` to the spectrum: `V f(Λ) V†`.
    pub fn map_spectrum(&self, f: impl Fn(T) -> Cx<T>) -> CMatrix<T> {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        &scaled * self.vectors.adjoint()
    }
}

/// `exp(−i H t)` for Hermitian `H`.
pub fn expm_hermitian<T: Real>(h: &CMatrix<T>, t: T) -> CMatrix<T> {
    HermitianEigen::new(h).propagator(t)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// General matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let n = a.nrows();
    assert!(a.is_square(), "expm needs a square matrix");
    if n == 0 {
        return a.clone();
    }
    let norm = crate::scalar::to_f64(one_norm(a));
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale: T = lit(0.5f64.powi(squarings));
    let a = a * cr(scale);
    let b = |k: usize| cr::<T>(lit(PADE13[k]));
    let ident = identity::<T>(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &ident * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &ident * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Computes `exp(t L) x` for a linear map `L` given only through its action, by
/// a sub-stepped truncated Taylor series. `norm_bound` must bound `‖L‖`.
pub fn expm_action<T: Real, F>(apply: F, x: &CMatrix<T>, t: T, norm_bound: T) -> CMatrix<T>
where
    F: Fn(&CMatrix<T>) -> CMatrix<T>,
{
    let total = crate::scalar::to_f64(norm_bound * t.abs());
    let substeps = total.ceil().max(1.0) as usize;
    let h = t / lit(substeps as f64);
    let tol: T = lit(1e-16);
    let mut y = x.clone();
    for _ in 0..substeps {
        let mut term = y.clone();
        let mut acc = y.clone();
        let base = frobenius(&y).max(T::min_value().unwrap_or_else(|| lit(1e-300)));
        for k in 1..80 {
            term = apply(&term) * cr(h / lit(k as f64));
            acc += &term;
            if frobenius(&term) <= tol * base && k > 3 {
                break;
            }
        }
        y = acc;
    }
    y
}

/// Index sets of the connected components of `m`'s nonzero pattern, each
/// sorted, ordered by smallest index.
pub fn connected_blocks<T: Real>(m: &CMatrix<T>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..j {
            if m[(i, j)] != Cx::new(T::zero(), T::zero()) || m[(j, i)] != Cx::new(T::zero(), T::zero()) {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}
