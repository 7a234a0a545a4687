//! Analog and digital Jaynes-Cummings chevrons: swap dynamics from `|1,0⟩`
//! versus qubit-resonator detuning and interaction time.
//!
//! In digital mode the interaction is chopped into JC pulses of length
//! `pulse_len`; each off-window between pulses adds a qubit phase `off_phase`
//! (the excited state picks up `e^{−i·off_phase}`). Resonances then appear
//! wherever `Δ·pulse_len + off_phase/2π` is an integer.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hilbert::{QuantumState, QubitBasis, SpaceSpec};
use crate::linalg::HermitianEigen;
use crate::measure::{mean_photon, photon_parity, qubit_parity};
use crate::models::build_jc;
use crate::scalar::{lit, CMatrix, Cx, Real};
use crate::trotter::apply_qubit_gate_vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChevronMode {
    Analog,
    Digital,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChevronObservable {
    /// Probability of the qubit being excited.
    QubitExcitation,
    MeanPhoton,
    PhotonParity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChevronSpec<T> {
    /// JC coupling g (MHz).
    pub g: T,
    /// Qubit minus resonator frequency (MHz), sorted.
    pub detunings: Vec<T>,
    /// Total interaction times (μs), sorted.
    pub durations: Vec<T>,
    /// On-pulse length in digital mode (μs).
    pub pulse_len: T,
    /// Qubit phase accrued per off-window (rad).
    pub off_phase: T,
    pub mode: ChevronMode,
}

/// Values on a detuning × duration grid; `values[(i_duration, i_detuning)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChevronGrid<T: Real> {
    pub detunings: Vec<T>,
    pub durations: Vec<T>,
    pub values: nalgebra::DMatrix<T>,
}

fn sorted<T: Real>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

impl<T: Real> ChevronSpec<T> {
    pub fn analog(g: T, detunings: Vec<T>, durations: Vec<T>) -> Result<Self> {
        let s = Self {
            g,
            detunings,
            durations,
            pulse_len: T::one(),
            off_phase: T::zero(),
            mode: ChevronMode::Analog,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn digital(g: T, detunings: Vec<T>, durations: Vec<T>, pulse_len: T, off_phase: T) -> Result<Self> {
        let s = Self {
            g,
            detunings,
            durations,
            pulse_len,
            off_phase,
            mode: ChevronMode::Digital,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.detunings.is_empty() || !sorted(&self.detunings) {
            return Err(invalid("detunings", "must be non-empty and sorted"));
        }
        if self.durations.is_empty() || !sorted(&self.durations) {
            return Err(invalid("durations", "must be non-empty and sorted"));
        }
        if self.durations[0] < T::zero() {
            return Err(invalid("durations", "must be non-negative"));
        }
        if !(self.g >= T::zero()) {
            return Err(invalid("g", "coupling must be non-negative"));
        }
        if self.mode == ChevronMode::Digital && !(self.pulse_len > T::zero()) {
            return Err(invalid("pulse_len", "digital mode needs a positive pulse length"));
        }
        Ok(())
    }

    pub fn with_off_phase(&self, off_phase: T) -> Self {
        Self {
            off_phase,
            ..self.clone()
        }
    }
}

// |1,0⟩ only couples to |0,1⟩, so one photon of headroom is exact.
fn space() -> SpaceSpec {
    SpaceSpec::new(1).expect("n_max = 1 is valid")
}

fn observe<T: Real>(psi: &QuantumState<T>, obs: ChevronObservable) -> Result<T> {
    match obs {
        ChevronObservable::QubitExcitation => qubit_parity(psi),
        ChevronObservable::MeanPhoton => mean_photon(psi),
        ChevronObservable::PhotonParity => photon_parity(psi),
    }
}

/// One detuning column of the chevron, in `spec.durations` order.
pub fn chevron_column<T: Real>(spec: &ChevronSpec<T>, detuning: T, obs: ChevronObservable) -> Result<Vec<T>> {
    spec.validate()?;
    let sp = space();
    let h = build_jc(spec.g, T::zero(), detuning, sp);
    let eig = HermitianEigen::new(h.matrix());
    let psi0 = QuantumState::joint_basis(QubitBasis::Excited, 0, sp)?;
    let vec0 = match psi0.data() {
        crate::hilbert::StateData::Pure(v) => v.clone(),
        _ => unreachable!("basis states are pure"),
    };
    let wrap = |v| QuantumState::pure(psi0.support(), v);
    match spec.mode {
        ChevronMode::Analog => spec
            .durations
            .iter()
            .map(|&t| observe(&wrap(eig.propagator(t) * &vec0)?, obs))
            .collect(),
        ChevronMode::Digital => {
            let pulse = eig.propagator(spec.pulse_len);
            let gate = off_window_gate(spec.off_phase);
            let tol: T = lit(1e-9);
            // walk forward through whole pulses, reusing the last state
            let mut state = vec0;
            let mut done = 0usize;
            let mut out = Vec::with_capacity(spec.durations.len());
            for &t in &spec.durations {
                let ratio = t / spec.pulse_len;
                let mut m = (ratio + tol).floor();
                if m < T::zero() {
                    m = T::zero();
                }
                let m = nalgebra::try_convert::<T, f64>(m).unwrap_or(0.0) as usize;
                while done < m {
                    if done > 0 {
                        state = apply_qubit_gate_vec(&gate, &state);
                    }
                    state = &pulse * &state;
                    done += 1;
                }
                let rest = t - spec.pulse_len * lit(m as f64);
                let psi = if rest > tol * spec.pulse_len {
                    let mut s = state.clone();
                    if m > 0 {
                        s = apply_qubit_gate_vec(&gate, &s);
                    }
                    eig.propagator(rest) * s
                } else {
                    state.clone()
                };
                out.push(observe(&wrap(psi)?, obs)?);
            }
            Ok(out)
        }
    }
}

/// Qubit phase of one off-window: `|1⟩ → e^{−iφ}|1⟩`.
pub fn off_window_gate<T: Real>(phi: T) -> CMatrix<T> {
    let mut g = CMatrix::identity(2, 2);
    g[(1, 1)] = Cx::new(phi.cos(), -phi.sin());
    g
}

pub fn run_chevron<T: Real>(spec: &ChevronSpec<T>, obs: ChevronObservable) -> Result<ChevronGrid<T>> {
    spec.validate()?;
    let cols = spec
        .detunings
        .iter()
        .map(|&d| chevron_column(spec, d, obs))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(spec, &cols))
}

/// Builds a grid from precomputed columns (one per detuning).
pub fn assemble<T: Real>(spec: &ChevronSpec<T>, cols: &[Vec<T>]) -> ChevronGrid<T> {
    let values = nalgebra::DMatrix::from_fn(spec.durations.len(), spec.detunings.len(), |i, j| cols[j][i]);
    ChevronGrid {
        detunings: spec.detunings.clone(),
        durations: spec.durations.clone(),
        values,
    }
}

impl<T: Real> ChevronGrid<T> {
    /// Time-averaged swapped population `1 − ⟨P_e⟩` per detuning, from a
    /// qubit-excitation grid.
    pub fn swap_contrast(&self) -> Vec<T> {
        let n: T = lit(self.durations.len() as f64);
        (0..self.detunings.len())
            .map(|j| T::one() - self.values.column(j).sum() / n)
            .collect()
    }

    /// Detunings of the local maxima of the swap contrast, strongest first,
    /// keeping those above `min_fraction` of the strongest.
    pub fn resonances(&self, min_fraction: T) -> Vec<T> {
        let c = self.swap_contrast();
        let mut peaks: Vec<(T, T)> = (0..c.len())
            .filter(|&j| (j == 0 || c[j] >= c[j - 1]) && (j + 1 == c.len() || c[j] > c[j + 1]))
            .filter(|&j| j != 0 && j + 1 != c.len())
            .map(|j| (c[j], self.detunings[j]))
            .collect();
        peaks.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        let top = peaks.first().map_or(T::zero(), |p| p.0);
        peaks
            .into_iter()
            .filter(|p| p.0 >= top * min_fraction)
            .map(|p| p.1)
            .collect()
    }
}

/// Sweeps a compensation phase `c ∈ [0, 2π)` added to every off-window and
/// returns the one that maximizes the time-averaged on-resonance swap,
/// sampled at whole-pulse interaction times. Zero off-time (analog mode)
/// needs no compensation.
pub fn find_compensation_phase<T: Real>(spec: &ChevronSpec<T>, sweep_points: usize) -> Result<T> {
    spec.validate()?;
    if spec.mode == ChevronMode::Analog {
        return Ok(T::zero());
    }
    if sweep_points == 0 {
        return Err(invalid("sweep_points", "need at least one phase"));
    }
    let t_max = spec.durations[spec.durations.len() - 1];
    let pulses = nalgebra::try_convert::<T, f64>((t_max / spec.pulse_len).floor()).unwrap_or(0.0) as usize;
    let times: Vec<T> = (1..=pulses.max(1)).map(|m| spec.pulse_len * lit(m as f64)).collect();
    let mut best = (T::zero(), -T::one());
    for k in 0..sweep_points {
        let c = T::two_pi() * lit(k as f64 / sweep_points as f64);
        let probe = ChevronSpec {
            detunings: vec![T::zero()],
            durations: times.clone(),
            off_phase: spec.off_phase + c,
            ..spec.clone()
        };
        let col = chevron_column(&probe, T::zero(), ChevronObservable::QubitExcitation)?;
        let contrast = T::one() - col.iter().fold(T::zero(), |a, &b| a + b) / lit(col.len() as f64);
        if contrast > best.1 + lit(1e-12) {
            best = (c, contrast);
        }
    }
    Ok(best.0)
}
