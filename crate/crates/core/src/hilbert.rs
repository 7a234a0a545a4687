//! Truncated qubit ⊗ oscillator Hilbert space: ladder and Pauli operators,
//! tensor embedding, coherent states, displacements and photon parity.
//!
//! Qubit basis convention: index 0 is the ground state, index 1 the excited
//! state, and `σ_z|0⟩ = +|0⟩`. The raising operator `σ_+ = |1⟩⟨0|` therefore
//! excites the qubit, and `−(ω_q/2)σ_z` puts the excited state higher in energy.
//! Joint indices are qubit-major: `index(q, n) = q·(n_max + 1) + n`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{ComplexField, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, HermitianEigen};
use crate::scalar::{cr, lit, to_f64, tolerance, CMatrix, CVector, Cx, Real};

/// Photon-number truncation of the resonator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceSpec {
    n_max: usize,
}

impl SpaceSpec {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidTruncation(n_max));
        }
        Ok(Self { n_max })
    }

    /// Smallest space obeying the truncation guard `n_max ≥ 4|α|²` for the given
    /// peak coherent amplitude, plus `margin` extra levels.
    pub fn for_amplitude(alpha_max: f64, margin: usize) -> Self {
        let guard = (4.0 * alpha_max * alpha_max).ceil() as usize;
        Self {
            n_max: (guard + margin).max(1),
        }
    }

    /// Space sized for degenerate Rabi dynamics at coupling ratio `r`, whose
    /// coherent excursions peak at `|α| = 2r`.
    pub fn for_coupling_ratio(r: f64, margin: usize) -> Self {
        Self::for_amplitude(2.0 * r.abs(), margin)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim_res(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim_total(&self) -> usize {
        2 * self.dim_res()
    }

    /// Joint index of qubit level `q` and photon number `n`.
    pub fn index(&self, q: usize, n: usize) -> usize {
        debug_assert!(q < 2 && n <= self.n_max);
        q * self.dim_res() + n
    }
}

/// Which factor of the joint space an operator or state lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Support {
    Qubit,
    Resonator(SpaceSpec),
    Joint(SpaceSpec),
}

impl Support {
    pub fn dim(&self) -> usize {
        match self {
            Support::Qubit => 2,
            Support::Resonator(s) => s.dim_res(),
            Support::Joint(s) => s.dim_total(),
        }
    }

    pub fn space(&self) -> Option<SpaceSpec> {
        match self {
            Support::Qubit => None,
            Support::Resonator(s) | Support::Joint(s) => Some(*s),
        }
    }
}

/// Dense operator on one factor or on the joint space.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumOperator<T: Real> {
    support: Support,
    matrix: CMatrix<T>,
    hermitian: bool,
}

impl<T: Real> QuantumOperator<T> {
    pub fn new(support: Support, matrix: CMatrix<T>) -> Result<Self> {
        check_square(&matrix, support.dim())?;
        Ok(Self {
            support,
            matrix,
            hermitian: false,
        })
    }

    /// Builds an operator flagged Hermitian, verifying the flag to machine
    /// precision relative to the matrix scale.
    pub fn hermitian(support: Support, matrix: CMatrix<T>) -> Result<Self> {
        check_square(&matrix, support.dim())?;
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > tolerance::<T>(1e-12) {
            return Err(Error::NotHermitian(to_f64(defect)));
        }
        Ok(Self {
            support,
            matrix,
            hermitian: true,
        })
    }

    pub(crate) fn from_parts(support: Support, matrix: CMatrix<T>, hermitian: bool) -> Self {
        debug_assert_eq!(matrix.nrows(), support.dim());
        Self {
            support,
            matrix,
            hermitian,
        }
    }

    pub fn identity(support: Support) -> Self {
        Self::from_parts(support, linalg::identity(support.dim()), true)
    }

    pub fn zeros(support: Support) -> Self {
        let d = support.dim();
        Self::from_parts(support, CMatrix::zeros(d, d), true)
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermiticity_defect(&self) -> T {
        linalg::hermiticity_defect(&self.matrix)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.support, self.matrix.adjoint(), self.hermitian)
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        let herm = self.hermitian && s.im == T::zero();
        Self::from_parts(self.support, &self.matrix * s, herm)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        assert_eq!(self.support, other.support, "commutator of operators on different supports");
        Self::from_parts(self.support, linalg::commutator(&self.matrix, &other.matrix), false)
    }

    /// Lifts a single-factor operator onto the joint space (identity on the
    /// other factor). Joint operators are returned unchanged.
    pub fn to_joint(&self, space: SpaceSpec) -> Result<Self> {
        let matrix = match self.support {
            Support::Joint(s) if s == space => return Ok(self.clone()),
            Support::Joint(s) => {
                return Err(Error::DimensionMismatch {
                    expected: space.dim_total(),
                    found: s.dim_total(),
                })
            }
            Support::Qubit => linalg::kron(&self.matrix, &linalg::identity(space.dim_res())),
            Support::Resonator(s) => {
                if s != space {
                    return Err(Error::DimensionMismatch {
                        expected: space.dim_res(),
                        found: s.dim_res(),
                    });
                }
                linalg::kron(&linalg::identity(2), &self.matrix)
            }
        };
        Ok(Self::from_parts(Support::Joint(space), matrix, self.hermitian))
    }

    /// Tensor product `qubit ⊗ resonator`.
    pub fn tensor(qubit: &Self, resonator: &Self) -> Result<Self> {
        let space = match (qubit.support, resonator.support) {
            (Support::Qubit, Support::Resonator(s)) => s,
            (q, r) => {
                return Err(Error::Precondition(format!(
                    "tensor needs qubit and resonator factors, got {q:?} and {r:?}"
                )))
            }
        };
        let mut op = embed(&qubit.matrix, &resonator.matrix, space)?;
        op.hermitian = qubit.hermitian && resonator.hermitian;
        Ok(op)
    }
}

fn check_square<T: Real>(m: &CMatrix<T>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: if m.nrows() != dim { m.nrows() } else { m.ncols() },
        });
    }
    Ok(())
}

impl<'a, T: Real> Add<&'a QuantumOperator<T>> for &'a QuantumOperator<T> {
    type Output = QuantumOperator<T>;
    fn add(self, rhs: &'a QuantumOperator<T>) -> QuantumOperator<T> {
        assert_eq!(self.support, rhs.support, "adding operators on different supports");
        QuantumOperator::from_parts(
            self.support,
            &self.matrix + &rhs.matrix,
            self.hermitian && rhs.hermitian,
        )
    }
}

impl<'a, T: Real> Sub<&'a QuantumOperator<T>> for &'a QuantumOperator<T> {
    type Output = QuantumOperator<T>;
    fn sub(self, rhs: &'a QuantumOperator<T>) -> QuantumOperator<T> {
        assert_eq!(self.support, rhs.support, "subtracting operators on different supports");
        QuantumOperator::from_parts(
            self.support,
            &self.matrix - &rhs.matrix,
            self.hermitian && rhs.hermitian,
        )
    }
}

impl<'a, T: Real> Mul<&'a QuantumOperator<T>> for &'a QuantumOperator<T> {
    type Output = QuantumOperator<T>;
    fn mul(self, rhs: &'a QuantumOperator<T>) -> QuantumOperator<T> {
        assert_eq!(self.support, rhs.support, "multiplying operators on different supports");
        QuantumOperator::from_parts(self.support, &self.matrix * &rhs.matrix, false)
    }
}

/// Resonator annihilation operator `a` with `a[n−1, n] = √n`.
pub fn annihilation<T: Real>(space: SpaceSpec) -> QuantumOperator<T> {
    let d = space.dim_res();
    let mut m = CMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = cr(lit::<T>(n as f64).sqrt());
    }
    QuantumOperator::from_parts(Support::Resonator(space), m, false)
}

pub fn creation<T: Real>(space: SpaceSpec) -> QuantumOperator<T> {
    annihilation(space).adjoint()
}

/// Photon-number operator `a†a` (diagonal).
pub fn number<T: Real>(space: SpaceSpec) -> QuantumOperator<T> {
    let d = space.dim_res();
    let m = CMatrix::from_diagonal(&DVector::from_fn(d, |n, _| cr(lit::<T>(n as f64))));
    QuantumOperator::from_parts(Support::Resonator(space), m, true)
}

/// Photon parity `Π = Σ (−1)^n |n⟩⟨n|`.
pub fn parity_operator<T: Real>(space: SpaceSpec) -> QuantumOperator<T> {
    let d = space.dim_res();
    let m = CMatrix::from_diagonal(&DVector::from_fn(d, |n, _| {
        cr(if n % 2 == 0 { T::one() } else { -T::one() })
    }));
    QuantumOperator::from_parts(Support::Resonator(space), m, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    /// `σ_+ = |1⟩⟨0|`, excites the qubit.
    Plus,
    /// `σ_− = |0⟩⟨1|`.
    Minus,
}

pub fn pauli<T: Real>(which: Pauli) -> QuantumOperator<T> {
    let z = Cx::new(T::zero(), T::zero());
    let o = cr(T::one());
    let i = Cx::new(T::zero(), T::one());
    let (m, herm) = match which {
        Pauli::X => (CMatrix::from_row_slice(2, 2, &[z, o, o, z]), true),
        Pauli::Y => (CMatrix::from_row_slice(2, 2, &[z, -i, i, z]), true),
        Pauli::Z => (CMatrix::from_row_slice(2, 2, &[o, z, z, -o]), true),
        Pauli::Plus => (CMatrix::from_row_slice(2, 2, &[z, z, o, z]), false),
        Pauli::Minus => (CMatrix::from_row_slice(2, 2, &[z, o, z, z]), false),
    };
    QuantumOperator::from_parts(Support::Qubit, m, herm)
}

/// Kronecker product `op_qubit ⊗ op_res` on the joint space, qubit factor first.
pub fn embed<T: Real>(
    op_qubit: &CMatrix<T>,
    op_res: &CMatrix<T>,
    space: SpaceSpec,
) -> Result<QuantumOperator<T>> {
    check_square(op_qubit, 2)?;
    check_square(op_res, space.dim_res())?;
    Ok(QuantumOperator::from_parts(
        Support::Joint(space),
        linalg::kron(op_qubit, op_res),
        false,
    ))
}

/// Displacement `D(α) = exp(α a† − α* a)` on the truncated space, computed from
/// the eigen-decomposition of the Hermitian generator `i(α a† − α* a)`.
pub fn displacement<T: Real>(alpha: Cx<T>, space: SpaceSpec) -> QuantumOperator<T> {
    let a = annihilation::<T>(space);
    let gen = a.matrix.adjoint() * alpha - &a.matrix * alpha.conj();
    let herm = gen * Cx::new(T::zero(), T::one());
    let d = HermitianEigen::new(&herm).propagator(T::one());
    QuantumOperator::from_parts(Support::Resonator(space), d, false)
}

/// Generalized Laguerre polynomials `L_j^{(k)}(x)` for `j = 0..len`.
fn laguerre_column<T: Real>(k: usize, x: T, len: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    let kf = lit::<T>(k as f64);
    out.push(T::one());
    if len > 1 {
        out.push(T::one() + kf - x);
    }
    for j in 1..len.saturating_sub(1) {
        let jf = lit::<T>(j as f64);
        let next = ((lit::<T>(2.0) * jf + T::one() + kf - x) * out[j] - (jf + kf) * out[j - 1])
            / (jf + T::one());
        out.push(next);
    }
    out
}

/// Top-left `dim × dim` block of the untruncated displacement `D(β)`, from the
/// closed-form Fock matrix elements
/// `⟨m|D(β)|n⟩ = √(n!/m!) β^{m−n} e^{−|β|²/2} L_n^{(m−n)}(|β|²)` for `m ≥ n`.
pub fn displacement_block<T: Real>(beta: Cx<T>, dim: usize) -> CMatrix<T> {
    let x = beta.norm_sqr();
    let mut out = CMatrix::zeros(dim, dim);
    if x == T::zero() {
        return CMatrix::identity(dim, dim);
    }
    let ln_abs = beta.modulus().ln();
    let theta = beta.im.atan2(beta.re);
    let mut ln_fact = vec![T::zero(); dim + 1];
    for n in 1..=dim {
        ln_fact[n] = ln_fact[n - 1] + lit::<T>(n as f64).ln();
    }
    let half = lit::<T>(0.5);
    for k in 0..dim {
        let lag = laguerre_column(k, x, dim - k);
        let kf = lit::<T>(k as f64);
        let phase = Cx::new(T::zero(), kf * theta).exp();
        for (n, l) in lag.iter().enumerate() {
            let m = n + k;
            let mag = (half * (ln_fact[n] - ln_fact[m]) + kf * ln_abs - half * x).exp() * *l;
            out[(m, n)] = phase * mag;
            if k > 0 {
                // ⟨n|D(β)|m⟩ = √(n!/m!) (−β*)^{m−n} e^{−|β|²/2} L_n^{(m−n)}(|β|²)
                let sign = if k % 2 == 0 { T::one() } else { -T::one() };
                out[(n, m)] = phase.conj() * (mag * sign);
            }
        }
    }
    out
}

/// Initial qubit states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitBasis {
    Ground,
    Excited,
    Plus,
    Minus,
}

impl QubitBasis {
    pub fn amplitudes<T: Real>(self) -> CVector<T> {
        let s = cr(lit::<T>(std::f64::consts::FRAC_1_SQRT_2));
        let (c0, c1) = match self {
            QubitBasis::Ground => (cr(T::one()), cr(T::zero())),
            QubitBasis::Excited => (cr(T::zero()), cr(T::one())),
            QubitBasis::Plus => (s, s),
            QubitBasis::Minus => (s, -s),
        };
        CVector::from_vec(vec![c0, c1])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateData<T: Real> {
    Pure(CVector<T>),
    Mixed(CMatrix<T>),
}

/// Pure or mixed state on one factor or on the joint space.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState<T: Real> {
    support: Support,
    data: StateData<T>,
}

impl<T: Real> QuantumState<T> {
    /// Pure state; must have unit norm within 1e-10.
    pub fn pure(support: Support, amplitudes: CVector<T>) -> Result<Self> {
        if amplitudes.len() != support.dim() {
            return Err(Error::DimensionMismatch {
                expected: support.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - T::one()).abs() > tolerance::<T>(1e-10) {
            return Err(Error::InvalidState(format!(
                "pure state norm {} differs from 1",
                to_f64(norm)
            )));
        }
        Ok(Self {
            support,
            data: StateData::Pure(amplitudes),
        })
    }

    /// Pure state normalized on construction; errors on a zero vector.
    pub fn pure_normalized(support: Support, amplitudes: CVector<T>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm <= T::zero() {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::pure(support, amplitudes / cr(norm))
    }

    /// Density matrix; Hermitian, unit trace within 1e-10 and minimum eigenvalue
    /// at least −1e-8.
    pub fn mixed(support: Support, rho: CMatrix<T>) -> Result<Self> {
        check_square(&rho, support.dim())?;
        validate_density(&rho)?;
        Ok(Self {
            support,
            data: StateData::Mixed(rho),
        })
    }

    pub(crate) fn from_parts(support: Support, data: StateData<T>) -> Self {
        Self { support, data }
    }

    pub fn fock(n: usize, space: SpaceSpec) -> Result<Self> {
        if n > space.n_max() {
            return Err(Error::Precondition(format!(
                "Fock level {n} exceeds n_max = {}",
                space.n_max()
            )));
        }
        let mut v = CVector::zeros(space.dim_res());
        v[n] = cr(T::one());
        Ok(Self::from_parts(Support::Resonator(space), StateData::Pure(v)))
    }

    pub fn vacuum(space: SpaceSpec) -> Self {
        Self::fock(0, space).expect("vacuum is always representable")
    }

    pub fn qubit(basis: QubitBasis) -> Self {
        Self::from_parts(Support::Qubit, StateData::Pure(basis.amplitudes()))
    }

    /// Product state `|q⟩ ⊗ |resonator⟩`. Both factors must be pure.
    pub fn product(qubit: &Self, resonator: &Self) -> Result<Self> {
        let space = match (qubit.support, resonator.support) {
            (Support::Qubit, Support::Resonator(s)) => s,
            (q, r) => {
                return Err(Error::Precondition(format!(
                    "product needs qubit and resonator factors, got {q:?} and {r:?}"
                )))
            }
        };
        match (&qubit.data, &resonator.data) {
            (StateData::Pure(q), StateData::Pure(r)) => Ok(Self::from_parts(
                Support::Joint(space),
                StateData::Pure(q.kronecker(r)),
            )),
            _ => {
                let rho = qubit.density_matrix().kronecker(&resonator.density_matrix());
                Ok(Self::from_parts(Support::Joint(space), StateData::Mixed(rho)))
            }
        }
    }

    /// `|basis⟩ ⊗ |n⟩` on the joint space.
    pub fn joint_basis(basis: QubitBasis, n: usize, space: SpaceSpec) -> Result<Self> {
        Self::product(&Self::qubit(basis), &Self::fock(n, space)?)
    }

    pub fn maximally_mixed(support: Support) -> Self {
        let d = support.dim();
        let rho = CMatrix::identity(d, d) * cr(T::one() / lit(d as f64));
        Self::from_parts(support, StateData::Mixed(rho))
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn data(&self) -> &StateData<T> {
        &self.data
    }

    pub fn is_pure_vector(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn density_matrix(&self) -> CMatrix<T> {
        match &self.data {
            StateData::Pure(v) => v * v.adjoint(),
            StateData::Mixed(m) => m.clone(),
        }
    }

    pub fn to_mixed(&self) -> Self {
        Self::from_parts(self.support, StateData::Mixed(self.density_matrix()))
    }

    pub fn trace(&self) -> T {
        match &self.data {
            StateData::Pure(v) => v.norm_squared(),
            StateData::Mixed(m) => linalg::trace(m).re,
        }
    }

    pub fn purity(&self) -> T {
        match &self.data {
            StateData::Pure(v) => v.norm_squared() * v.norm_squared(),
            StateData::Mixed(m) => (m * m).trace().re,
        }
    }

    /// `tr(ρ O)`; the operator must share this state's support.
    pub fn expectation(&self, op: &QuantumOperator<T>) -> Result<Cx<T>> {
        if op.support != self.support {
            return Err(Error::DimensionMismatch {
                expected: self.support.dim(),
                found: op.dim(),
            });
        }
        Ok(match &self.data {
            StateData::Pure(v) => v.dotc(&(&op.matrix * v)),
            StateData::Mixed(m) => linalg::trace(&(&op.matrix * m)),
        })
    }

    /// `U|ψ⟩` or `UρU†`.
    pub fn evolve(&self, u: &CMatrix<T>) -> Self {
        let data = match &self.data {
            StateData::Pure(v) => StateData::Pure(u * v),
            StateData::Mixed(m) => StateData::Mixed(u * m * u.adjoint()),
        };
        Self::from_parts(self.support, data)
    }

    /// Checks the normalization invariants for this state's kind.
    pub fn validate(&self) -> Result<()> {
        match &self.data {
            StateData::Pure(v) => {
                let norm = v.norm();
                if (norm - T::one()).abs() > tolerance::<T>(1e-9) {
                    return Err(Error::InvalidState(format!("norm {}", to_f64(norm))));
                }
                Ok(())
            }
            StateData::Mixed(m) => validate_density(m),
        }
    }

    /// Fidelity `F = (tr√(√ρ σ √ρ))²`, computed through whichever side is pure
    /// when possible.
    pub fn fidelity(&self, other: &Self) -> Result<T> {
        if self.support != other.support {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(match (&self.data, &other.data) {
            (StateData::Pure(a), StateData::Pure(b)) => a.dotc(b).norm_sqr(),
            (StateData::Pure(a), StateData::Mixed(m)) | (StateData::Mixed(m), StateData::Pure(a)) => {
                a.dotc(&(m * a)).re
            }
            (StateData::Mixed(a), StateData::Mixed(b)) => mixed_fidelity(a, b),
        })
    }
}

pub(crate) fn mixed_fidelity<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let sqrt_a = HermitianEigen::new(a).map_spectrum(|x| cr(x.max(T::zero()).sqrt()));
    let inner = &sqrt_a * b * &sqrt_a;
    let s = HermitianEigen::new(&inner)
        .values
        .iter()
        .fold(T::zero(), |acc, &x| acc + x.max(T::zero()).sqrt());
    s * s
}

fn validate_density<T: Real>(rho: &CMatrix<T>) -> Result<()> {
    let defect = linalg::hermiticity_defect(rho);
    if defect > tolerance::<T>(1e-10) {
        return Err(Error::InvalidState(format!(
            "density matrix not Hermitian (defect {})",
            to_f64(defect)
        )));
    }
    let tr = linalg::trace(rho);
    if (tr.re - T::one()).abs() > tolerance::<T>(1e-10) || tr.im.abs() > tolerance::<T>(1e-10) {
        return Err(Error::InvalidState(format!(
            "density matrix trace {} + {}i",
            to_f64(tr.re),
            to_f64(tr.im)
        )));
    }
    let min_eig = HermitianEigen::new(rho).values.min();
    if min_eig < -tolerance::<T>(1e-8) {
        return Err(Error::InvalidState(format!(
            "density matrix has eigenvalue {}",
            to_f64(min_eig)
        )));
    }
    Ok(())
}

/// Coherent state `|α⟩` truncated at `n_max` and renormalized. Fails when the
/// truncation discards more than 1e-6 of the norm.
pub fn coherent_state<T: Real>(alpha: Cx<T>, space: SpaceSpec) -> Result<QuantumState<T>> {
    let d = space.dim_res();
    let mut v = CVector::zeros(d);
    let mut c = cr((-alpha.norm_sqr() / lit(2.0)).exp());
    v[0] = c;
    for n in 1..d {
        c = c * alpha / cr(lit::<T>(n as f64).sqrt());
        v[n] = c;
    }
    let kept = v.norm_squared();
    if kept < T::one() - lit(1e-6) {
        return Err(Error::TruncationLoss {
            alpha_sq: to_f64(alpha.norm_sqr()),
            lost: 1.0 - to_f64(kept),
            n_max: space.n_max(),
        });
    }
    let v = v / cr(kept.sqrt());
    Ok(QuantumState::from_parts(
        Support::Resonator(space),
        StateData::Pure(v),
    ))
}

/// Normalized cat state `|α⟩ + sign·|−α⟩` (even for `sign = +1`, odd for `−1`).
pub fn cat_state<T: Real>(alpha: Cx<T>, sign: T, space: SpaceSpec) -> Result<QuantumState<T>> {
    let plus = coherent_state(alpha, space)?;
    let minus = coherent_state(-alpha, space)?;
    let (StateData::Pure(a), StateData::Pure(b)) = (plus.data, minus.data) else {
        unreachable!("coherent states are pure")
    };
    QuantumState::pure_normalized(Support::Resonator(space), a + b * cr(sign))
}
