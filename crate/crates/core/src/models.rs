//! Hamiltonian builders for the Rabi, Jaynes-Cummings and anti-Jaynes-Cummings
//! models, and the closed-form solution of the degenerate-qubit Rabi model.
//!
//! Parameters are cyclic frequencies in MHz; builders return `H/ħ` in rad/μs.

use nalgebra::ComplexField;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hilbert::{
    annihilation, number, parity_operator, pauli, Pauli, QuantumOperator, SpaceSpec,
};
use crate::scalar::{angular, cr, lit, Cx, Real};

/// Parameters of the simulated Rabi Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiParams<T: Real> {
    /// Coupling `g_R` (MHz).
    pub g: T,
    /// Simulated resonator frequency `ω_rR` (MHz); zero means `r → ∞`.
    pub omega_r: T,
    /// Simulated qubit frequency `ω_qR` (MHz).
    pub omega_q: T,
    /// Self-Kerr coefficient (MHz) of the `(K/2) a†a†aa` term.
    pub kerr: T,
    /// Resonator energy decay time (μs); `None` means no decay.
    pub t1_res: Option<T>,
}

impl<T: Real> RabiParams<T> {
    pub fn new(g: T, omega_r: T, omega_q: T) -> Result<Self> {
        if g <= T::zero() {
            return Err(invalid("g", "coupling must be positive"));
        }
        Ok(Self {
            g,
            omega_r,
            omega_q,
            kerr: T::zero(),
            t1_res: None,
        })
    }

    /// Degenerate-qubit parameters at coupling ratio `r = g/ω_rR`.
    pub fn degenerate(g: T, r: T) -> Result<Self> {
        if r <= T::zero() {
            return Err(invalid("r", "coupling ratio must be positive"));
        }
        Self::new(g, g / r, T::zero())
    }

    pub fn with_kerr(mut self, kerr: T) -> Self {
        self.kerr = kerr;
        self
    }

    pub fn with_t1_res(mut self, t1: T) -> Result<Self> {
        if t1 <= T::zero() {
            return Err(invalid("t1_res", "decay time must be positive"));
        }
        self.t1_res = Some(t1);
        Ok(self)
    }

    /// `r = g_R / ω_rR`, undefined for `ω_rR = 0`.
    pub fn ratio(&self) -> Option<T> {
        if self.omega_r == T::zero() {
            None
        } else {
            Some(self.g / self.omega_r)
        }
    }

    /// Resonator period `1/|ω_rR|` (μs), the revival period of the
    /// degenerate model.
    pub fn revival_period(&self) -> Option<T> {
        if self.omega_r == T::zero() {
            None
        } else {
            Some(T::one() / self.omega_r.abs())
        }
    }
}

fn joint<T: Real>(op: &QuantumOperator<T>, space: SpaceSpec) -> QuantumOperator<T> {
    op.to_joint(space).expect("factor operators built on the same space")
}

/// `H/ħ = −(ω_q/2)σ_z + ω_r a†a + g(a + a†)(σ_+ + σ_−) + (K/2)a†a†aa`.
pub fn build_rabi<T: Real>(p: &RabiParams<T>, space: SpaceSpec) -> QuantumOperator<T> {
    let a = annihilation::<T>(space);
    let ad = a.adjoint();
    let x_field = &a + &ad;
    let coupling = QuantumOperator::tensor(&pauli(Pauli::X), &x_field).expect("same space");
    let sz = joint(&pauli::<T>(Pauli::Z), space);
    let n = joint(&number::<T>(space), space);
    let kerr_res = &(&ad * &ad) * &(&a * &a);
    let kerr = joint(&kerr_res, space);

    let half = lit::<T>(0.5);
    let h = &(&(&sz.scale(cr(-angular(p.omega_q) * half)) + &n.scale(cr(angular(p.omega_r))))
        + &coupling.scale(cr(angular(p.g))))
        + &kerr.scale(cr(angular(p.kerr) * half));
    QuantumOperator::from_parts(h.support(), h.into_matrix(), true)
}

/// `H_jc/ħ = −(Δ_q/2)σ_z + Δ_r a†a + g(aσ_+ + a†σ_−)`.
pub fn build_jc<T: Real>(g: T, delta_r: T, delta_q: T, space: SpaceSpec) -> QuantumOperator<T> {
    let a = annihilation::<T>(space);
    let exchange = &QuantumOperator::tensor(&pauli(Pauli::Plus), &a).expect("same space")
        + &QuantumOperator::tensor(&pauli(Pauli::Minus), &a.adjoint()).expect("same space");
    detuned(exchange, g, delta_r, delta_q, space)
}

/// `H_ajc = σ_x H_jc σ_x = +(Δ_q/2)σ_z + Δ_r a†a + g(aσ_− + a†σ_+)`.
pub fn build_ajc<T: Real>(g: T, delta_r: T, delta_q: T, space: SpaceSpec) -> QuantumOperator<T> {
    let a = annihilation::<T>(space);
    let exchange = &QuantumOperator::tensor(&pauli(Pauli::Minus), &a).expect("same space")
        + &QuantumOperator::tensor(&pauli(Pauli::Plus), &a.adjoint()).expect("same space");
    detuned(exchange, g, delta_r, -delta_q, space)
}

fn detuned<T: Real>(
    exchange: QuantumOperator<T>,
    g: T,
    delta_r: T,
    delta_q: T,
    space: SpaceSpec,
) -> QuantumOperator<T> {
    let sz = joint(&pauli::<T>(Pauli::Z), space);
    let n = joint(&number::<T>(space), space);
    let h = &(&sz.scale(cr(-angular(delta_q) * lit(0.5))) + &n.scale(cr(angular(delta_r))))
        + &exchange.scale(cr(angular(g)));
    QuantumOperator::from_parts(h.support(), h.into_matrix(), true)
}

/// Excitation number `a†a + σ_+σ_−`, conserved by the JC model.
pub fn excitation_number<T: Real>(space: SpaceSpec) -> QuantumOperator<T> {
    let qubit_exc = &pauli::<T>(Pauli::Plus) * &pauli(Pauli::Minus);
    &joint(&number::<T>(space), space) + &joint(&qubit_exc, space)
}

/// `a†a − σ_+σ_−`, conserved by the anti-JC model.
pub fn anti_jc_charge<T: Real>(space: SpaceSpec) -> QuantumOperator<T> {
    let qubit_exc = &pauli::<T>(Pauli::Plus) * &pauli(Pauli::Minus);
    &joint(&number::<T>(space), space) - &joint(&qubit_exc, space)
}

/// Total parity `σ_z ⊗ Π`, conserved by the Rabi model.
pub fn total_parity<T: Real>(space: SpaceSpec) -> QuantumOperator<T> {
    QuantumOperator::tensor(&pauli(Pauli::Z), &parity_operator(space)).expect("same space")
}

/// Closed-form observables of the degenerate (`ω_qR = 0`) Rabi model started
/// in `|1⟩|0⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegenerateSnapshot<T: Real> {
    /// Coherent amplitude of the resonator branch correlated with `σ_x = +1`.
    pub alpha_plus: Cx<T>,
    /// Amplitude of the `σ_x = −1` branch, always `−alpha_plus`.
    pub alpha_minus: Cx<T>,
    /// Normalized qubit parity `(1 + e^{−2|α|²})/2`.
    pub qubit_parity: T,
    /// Normalized photon parity `(1 + e^{−2|α|²})/2`.
    pub photon_parity: T,
    /// Mean photon number `|α|²`.
    pub mean_n: T,
}

/// Degenerate-qubit Rabi dynamics: each `σ_x` branch drives the oscillator
/// around a circle of radius `r` centred on `∓r`, so
/// `α_±(t) = ∓r(1 − e^{−i 2π ω_rR t})` and `|α| ≤ 2r`.
pub fn degenerate_oracle<T: Real>(p: &RabiParams<T>, t: T) -> Result<DegenerateSnapshot<T>> {
    if p.omega_q != T::zero() {
        return Err(Error::Precondition("degenerate oracle needs ω_qR = 0".into()));
    }
    if p.kerr != T::zero() || p.t1_res.is_some() {
        return Err(Error::Precondition(
            "degenerate oracle needs no Kerr term and no decay".into(),
        ));
    }
    let r = p
        .ratio()
        .ok_or_else(|| Error::Precondition("degenerate oracle needs ω_rR ≠ 0".into()))?;
    let phase = Cx::new(T::zero(), -angular(p.omega_r) * t).exp();
    let alpha_plus = (cr(T::one()) - phase) * cr(-r);
    let mean_n = alpha_plus.norm_sqr();
    let overlap = (lit::<T>(-2.0) * mean_n).exp();
    let parity = (T::one() + overlap) * lit(0.5);
    Ok(DegenerateSnapshot {
        alpha_plus,
        alpha_minus: -alpha_plus,
        qubit_parity: parity,
        photon_parity: parity,
        mean_n,
    })
}

/// Largest coherent amplitude reached by degenerate dynamics up to time `t`:
/// `|α(t)| = 2r|sin(π ω_rR t)|`, bounded by both `2r` and `2π g t`. Used to
/// size the truncation when `ω_rR → 0`.
pub fn peak_amplitude<T: Real>(g: T, omega_r: T, t: T) -> T {
    let linear = T::two_pi() * g.abs() * t.abs();
    if omega_r == T::zero() {
        return linear;
    }
    let r = (g / omega_r).abs();
    let x = T::pi() * omega_r.abs() * t.abs();
    if x >= T::frac_pi_2() {
        (lit::<T>(2.0) * r).min(linear)
    } else {
        lit::<T>(2.0) * r * x.sin()
    }
}

/// Reference exchange period `1/√(4g² + Δ²)` (μs) of a JC interaction with
/// qubit-resonator detuning `Δ` (MHz).
pub fn jc_reference_period<T: Real>(g: T, delta: T) -> Result<T> {
    if g <= T::zero() {
        return Err(invalid("g", "coupling must be positive"));
    }
    Ok(T::one() / (lit::<T>(4.0) * g * g + delta * delta).sqrt())
}
