//! Observables and emulated meters: parities, photon-number meters, Wigner
//! sampling, reduced and conditional states, entanglement entropy.
//!
//! Parities are reported normalized to `[0, 1]`. Qubit parity is
//! `(1 − ⟨σ_z⟩)/2`, so the excited initial state reads 1.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hilbert::{displacement_block, QuantumState, QubitBasis, SpaceSpec, StateData, Support};
use crate::scalar::{cr, lit, to_f64, CMatrix, Cx, Real};

/// Resonator density matrix of a joint or resonator-only state.
pub fn reduced_resonator<T: Real>(state: &QuantumState<T>) -> Result<CMatrix<T>> {
    match state.support() {
        Support::Resonator(_) => Ok(state.density_matrix()),
        Support::Joint(s) => {
            let d = s.dim_res();
            Ok(match state.data() {
                StateData::Pure(v) => {
                    let (a, b) = (v.rows(0, d), v.rows(d, d));
                    a * a.adjoint() + b * b.adjoint()
                }
                StateData::Mixed(m) => m.view((0, 0), (d, d)) + m.view((d, d), (d, d)),
            })
        }
        Support::Qubit => Err(Error::Precondition("state has no resonator".into())),
    }
}

/// 2×2 qubit density matrix of a joint or qubit-only state.
pub fn reduced_qubit<T: Real>(state: &QuantumState<T>) -> Result<CMatrix<T>> {
    match state.support() {
        Support::Qubit => Ok(state.density_matrix()),
        Support::Joint(s) => {
            let d = s.dim_res();
            let mut out = CMatrix::zeros(2, 2);
            match state.data() {
                StateData::Pure(v) => {
                    for i in 0..2 {
                        for j in 0..2 {
                            out[(i, j)] = v.rows(j * d, d).dotc(&v.rows(i * d, d));
                        }
                    }
                }
                StateData::Mixed(m) => {
                    for i in 0..2 {
                        for j in 0..2 {
                            out[(i, j)] = m.view((i * d, j * d), (d, d)).trace();
                        }
                    }
                }
            }
            Ok(out)
        }
        Support::Resonator(_) => Err(Error::Precondition("state has no qubit".into())),
    }
}

/// Raw `⟨σ_z⟩`.
pub fn sigma_z<T: Real>(state: &QuantumState<T>) -> Result<T> {
    let q = reduced_qubit(state)?;
    Ok(q[(0, 0)].re - q[(1, 1)].re)
}

/// Normalized qubit parity `(1 − ⟨σ_z⟩)/2`: 1 for `|1⟩`, 0.5 when maximally mixed.
pub fn qubit_parity<T: Real>(state: &QuantumState<T>) -> Result<T> {
    Ok((T::one() - sigma_z(state)?) * lit(0.5))
}

/// Raw photon parity `⟨Π⟩` of the resonator.
pub fn parity_expectation<T: Real>(state: &QuantumState<T>) -> Result<T> {
    Ok(photon_distribution(state)?
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (n, &p)| if n % 2 == 0 { acc + p } else { acc - p }))
}

/// Normalized photon parity `(1 + ⟨Π⟩)/2`.
pub fn photon_parity<T: Real>(state: &QuantumState<T>) -> Result<T> {
    Ok((T::one() + parity_expectation(state)?) * lit(0.5))
}

/// Photon-number distribution `P(n)` of the resonator.
pub fn photon_distribution<T: Real>(state: &QuantumState<T>) -> Result<Vec<T>> {
    match (state.support(), state.data()) {
        // skip the O(d²) reduced matrix for pure joint states
        (Support::Joint(s), StateData::Pure(v)) => {
            let d = s.dim_res();
            Ok((0..d).map(|n| v[n].norm_sqr() + v[d + n].norm_sqr()).collect())
        }
        _ => Ok(reduced_resonator(state)?.diagonal().iter().map(|z| z.re).collect()),
    }
}

pub fn mean_photon<T: Real>(state: &QuantumState<T>) -> Result<T> {
    Ok(photon_distribution(state)?
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (n, &p)| acc + p * lit(n as f64)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeterMode {
    /// Ramsey sequence with a π/2 phase offset: response `(1 + sin θ_j)/2`.
    Ramsey,
    /// Ramsey separation `1/(2|2χ|)`: response `(1 + cos θ_j)/2`, a parity readout.
    Parity,
}

/// Dispersive photon-number meter. Photon number `j` rotates the meter qubit
/// by `θ_j = (j − d)·2π·chi2·tau_eff`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonMeterSpec<T: Real> {
    /// Effective Ramsey separation (μs).
    pub tau_eff: T,
    /// Dispersive shift 2χ (MHz, signed).
    pub chi2: T,
    /// Reference photon number where the response is centred.
    pub d: usize,
    pub mode: MeterMode,
}

/// Measured dispersive shift of the reference device, 2χ/2π = −1.26 MHz.
pub const CHI2_MHZ: f64 = -1.26;

impl<T: Real> PhotonMeterSpec<T> {
    pub fn ramsey(tau_eff: T, chi2: T, d: usize) -> Result<Self> {
        let spec = Self {
            tau_eff,
            chi2,
            d,
            mode: MeterMode::Ramsey,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parity meter with `tau_eff = 1/(2|chi2|)`.
    pub fn parity(chi2: T) -> Result<Self> {
        if chi2 == T::zero() {
            return Err(invalid("chi2", "dispersive shift must be nonzero"));
        }
        Ok(Self {
            tau_eff: parity_tau(chi2),
            chi2,
            d: 0,
            mode: MeterMode::Parity,
        })
    }

    /// Low-dynamic-range meter (τ ≈ 18.7 ns) centred at 3 photons.
    pub fn ldr() -> Self {
        Self::ramsey(lit(0.0187), lit(CHI2_MHZ), 3).expect("valid preset")
    }

    /// High-dynamic-range meter (τ ≈ 6.5 ns) centred at 9 photons.
    pub fn hdr() -> Self {
        Self::ramsey(lit(0.0065), lit(CHI2_MHZ), 9).expect("valid preset")
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_eff <= T::zero() {
            return Err(invalid("tau_eff", "Ramsey separation must be positive"));
        }
        if self.chi2 == T::zero() {
            return Err(invalid("chi2", "dispersive shift must be nonzero"));
        }
        if self.mode == MeterMode::Parity {
            let phase = self.chi2.abs() * self.tau_eff;
            if (phase - lit(0.5)).abs() > lit(1e-6) {
                return Err(invalid(
                    "tau_eff",
                    format!("parity mode needs |chi2|·tau_eff = 1/2, got {}", to_f64(phase)),
                ));
            }
        }
        Ok(())
    }

    /// Meter rotation angle for photon number `j` (rad).
    pub fn theta(&self, j: usize) -> T {
        (lit::<T>(j as f64) - lit(self.d as f64)) * T::two_pi() * self.chi2 * self.tau_eff
    }

    /// Photon-number window where `|θ_j| ≤ 30°`.
    pub fn linear_window(&self) -> (T, T) {
        let half = T::one() / (lit::<T>(12.0) * (self.chi2 * self.tau_eff).abs());
        let d: T = lit(self.d as f64);
        (d - half, d + half)
    }
}

/// Ramsey separation `π/|2χ|` (angular) = `1/(2|chi2|)` (cyclic) that turns the
/// meter into a parity measurement.
pub fn parity_tau<T: Real>(chi2: T) -> T {
    T::one() / (lit::<T>(2.0) * chi2.abs())
}

/// Exact meter response `Σ_j P(j)(1 + sin θ_j)/2` (Ramsey) or
/// `Σ_j P(j)(1 + cos θ_j)/2` (parity).
pub fn ramsey_meter_response<T: Real>(state: &QuantumState<T>, spec: &PhotonMeterSpec<T>) -> Result<T> {
    spec.validate()?;
    let p = photon_distribution(state)?;
    Ok(meter_response_from_distribution(&p, spec))
}

pub fn meter_response_from_distribution<T: Real>(p: &[T], spec: &PhotonMeterSpec<T>) -> T {
    p.iter().enumerate().fold(T::zero(), |acc, (j, &w)| {
        let th = spec.theta(j);
        let s = match spec.mode {
            MeterMode::Ramsey => th.sin(),
            MeterMode::Parity => th.cos(),
        };
        acc + w * (T::one() + s) * lit(0.5)
    })
}

/// Linearized inversion `n̂ = d + (2p − 1)/(2π·chi2·tau_eff)`. Biased outside
/// the linear window, where larger photon numbers wrap around.
pub fn invert_meter<T: Real>(p: T, spec: &PhotonMeterSpec<T>) -> Result<T> {
    if spec.mode != MeterMode::Ramsey {
        return Err(Error::Precondition("only a Ramsey meter can be inverted to n̄".into()));
    }
    spec.validate()?;
    Ok(lit::<T>(spec.d as f64) + (lit::<T>(2.0) * p - T::one()) / (T::two_pi() * spec.chi2 * spec.tau_eff))
}

/// Binomial sampling of a probability with `shots` repetitions; returns the
/// observed fraction.
pub fn sample_probability<R: Rng + ?Sized>(p: f64, shots: u64, rng: &mut R) -> Result<f64> {
    if shots == 0 {
        return Err(invalid("shots", "need at least one shot"));
    }
    let dist = Binomial::new(shots, p.clamp(0.0, 1.0)).map_err(|e| invalid("p", e.to_string()))?;
    Ok(dist.sample(rng) as f64 / shots as f64)
}

/// `W(α) = (2/π) tr[D(α) Π D†(α) ρ]` from the analytic displaced-parity
/// matrix elements, so the only truncation is that of ρ itself.
pub fn wigner_point<T: Real>(state: &QuantumState<T>, alpha: Cx<T>) -> Result<T> {
    let rho = reduced_resonator(state)?;
    Ok(wigner_from_density(&rho, alpha))
}

pub(crate) fn wigner_from_density<T: Real>(rho: &CMatrix<T>, alpha: Cx<T>) -> T {
    let m = displaced_parity(alpha, rho.nrows());
    // tr[M ρ] = Σ M_mn ρ_nm
    let mut acc = Cx::new(T::zero(), T::zero());
    for m_ in 0..rho.nrows() {
        for n in 0..rho.ncols() {
            acc += m[(m_, n)] * rho[(n, m_)];
        }
    }
    acc.re * lit(2.0) / T::pi()
}

/// Matrix of `D(α) Π D†(α) = D(2α) Π` on the first `dim` Fock levels.
pub fn displaced_parity<T: Real>(alpha: Cx<T>, dim: usize) -> CMatrix<T> {
    let mut m = displacement_block(alpha * cr(lit(2.0)), dim);
    for n in (1..dim).step_by(2) {
        m.column_mut(n).neg_mut();
    }
    m
}

/// Wigner function on a rectangular grid; entry `(iy, ix)` is `W(x + iy)`.
pub fn wigner_grid<T: Real>(state: &QuantumState<T>, xs: &[T], ys: &[T]) -> Result<DMatrix<T>> {
    let rho = reduced_resonator(state)?;
    Ok(DMatrix::from_fn(ys.len(), xs.len(), |iy, ix| {
        wigner_from_density(&rho, Cx::new(xs[ix], ys[iy]))
    }))
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy<T: Real>(rho: &CMatrix<T>) -> Result<T> {
    if !rho.is_square() {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            found: rho.ncols(),
        });
    }
    let herm = (rho + rho.adjoint()) * cr(lit::<T>(0.5));
    let eig = nalgebra::linalg::SymmetricEigen::new(herm);
    let cutoff: T = lit(1e-15);
    let s = eig.eigenvalues.iter().fold(T::zero(), |acc, &p| {
        if p > cutoff {
            acc - p * p.log2()
        } else {
            acc
        }
    });
    // an eigenvalue a hair above 1 would otherwise give −0
    Ok(s.max(T::zero()))
}

/// Qubit entanglement entropy of a joint pure state (or entropy of the
/// reduced qubit of a mixed state), in bits.
pub fn qubit_entropy<T: Real>(state: &QuantumState<T>) -> Result<T> {
    von_neumann_entropy(&reduced_qubit(state)?)
}

/// Resonator state after observing the qubit in `outcome`, with the outcome
/// probability.
pub fn conditional_resonator<T: Real>(
    state: &QuantumState<T>,
    outcome: QubitBasis,
) -> Result<(CMatrix<T>, T)> {
    let space = match state.support() {
        Support::Joint(s) => s,
        other => {
            return Err(Error::Precondition(format!(
                "conditioning needs a joint state, got {other:?}"
            )))
        }
    };
    let b = outcome.amplitudes::<T>();
    let d = space.dim_res();
    let rho = state.density_matrix();
    // ⟨b|ρ|b⟩ over the qubit factor
    let mut out = CMatrix::zeros(d, d);
    for i in 0..2 {
        for j in 0..2 {
            let w = b[i].conj() * b[j];
            if w != Cx::new(T::zero(), T::zero()) {
                out += rho.view((i * d, j * d), (d, d)) * w;
            }
        }
    }
    let p = out.trace().re;
    if p < lit(1e-12) {
        return Err(Error::ImprobableOutcome(to_f64(p)));
    }
    Ok((out * cr(T::one() / p), p))
}

/// Locates the first revival of a parity trace: the largest value with time in
/// `[period/2, 3·period/2]`. Returns `(index, time, value)`.
pub fn revival_peak<T: Real>(times: &[T], values: &[T], period: T) -> Option<(usize, T, T)> {
    let lo = period * lit(0.5);
    let hi = period * lit(1.5);
    times
        .iter()
        .zip(values)
        .enumerate()
        .filter(|(_, (&t, _))| t >= lo && t <= hi)
        .max_by(|a, b| a.1 .1.partial_cmp(b.1 .1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, (&t, &v))| (i, t, v))
}

/// Resonator space a state lives on, if any.
pub fn resonator_space<T: Real>(state: &QuantumState<T>) -> Option<SpaceSpec> {
    state.support().space()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{cat_state, coherent_state};

    fn space(n: usize) -> SpaceSpec {
        SpaceSpec::new(n).unwrap()
    }

    #[test]
    fn parity_landmarks() {
        let s = space(20);
        let exc = QuantumState::<f64>::joint_basis(QubitBasis::Excited, 0, s).unwrap();
        assert_eq!(qubit_parity(&exc).unwrap(), 1.0);
        assert_eq!(photon_parity(&exc).unwrap(), 1.0);
        let mixed = QuantumState::product(
            &QuantumState::maximally_mixed(Support::Qubit),
            &QuantumState::vacuum(s),
        )
        .unwrap();
        assert!((qubit_parity::<f64>(&mixed).unwrap() - 0.5).abs() < 1e-15);
        let one = QuantumState::<f64>::fock(1, s).unwrap();
        assert!(photon_parity(&one).unwrap().abs() < 1e-15);
        let coh = coherent_state(Cx::new(1.0, 0.0), s).unwrap();
        assert!((photon_parity(&coh).unwrap() - (1.0 + (-2.0f64).exp()) / 2.0).abs() < 1e-9);
        let three = QuantumState::<f64>::fock(3, s).unwrap();
        assert_eq!(mean_photon(&three).unwrap(), 3.0);
    }

    #[test]
    fn meter_examples() {
        let s = space(12);
        let spec = PhotonMeterSpec::ramsey(0.0187, -1.26, 0).unwrap();
        let vac = QuantumState::<f64>::vacuum(s);
        assert!((ramsey_meter_response(&vac, &spec).unwrap() - 0.5).abs() < 1e-15);
        let one = QuantumState::<f64>::fock(1, s).unwrap();
        let p = ramsey_meter_response(&one, &spec).unwrap();
        let want = 0.5 * (1.0 + (std::f64::consts::TAU * -1.26 * 0.0187).sin());
        assert!((p - want).abs() < 1e-14 && (p - 0.427).abs() < 1e-3);
        let centred = PhotonMeterSpec::ramsey(0.0187, -1.26, 4).unwrap();
        let four = QuantumState::<f64>::fock(4, s).unwrap();
        assert!((ramsey_meter_response(&four, &centred).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(invert_meter(0.5, &centred).unwrap(), 4.0);
    }

    #[test]
    fn parity_meter_reads_photon_parity() {
        let s = space(25);
        let spec = PhotonMeterSpec::<f64>::parity(-1.26).unwrap();
        assert!((spec.tau_eff * 1000.0 - 396.825).abs() < 1e-2);
        for alpha in [0.0, 0.6, 1.3, 2.2] {
            let coh = coherent_state(Cx::new(alpha, 0.3), s).unwrap();
            let meter = ramsey_meter_response(&coh, &spec).unwrap();
            assert!((meter - photon_parity(&coh).unwrap()).abs() < 1e-12);
        }
        let bad = PhotonMeterSpec { tau_eff: 0.3, ..spec };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn wigner_landmarks() {
        let s = space(15);
        let two_pi = 2.0 / std::f64::consts::PI;
        let vac = QuantumState::<f64>::vacuum(s);
        assert!((wigner_point(&vac, Cx::new(0.0, 0.0)).unwrap() - two_pi).abs() < 1e-14);
        let one = QuantumState::<f64>::fock(1, s).unwrap();
        assert!((wigner_point(&one, Cx::new(0.0, 0.0)).unwrap() + two_pi).abs() < 1e-14);
        // vacuum is a Gaussian of width 0.5: log W linear in |α|² with slope −1/(2σ²) = −2
        for r in [0.3, 0.7, 1.1] {
            let w = wigner_point(&vac, Cx::new(r, 0.0)).unwrap();
            assert!((w.ln() - two_pi.ln() + 2.0 * r * r).abs() < 1e-10);
        }
        // coherent state is the vacuum shifted to α
        let alpha = Cx::new(0.8, -0.5);
        let coh = coherent_state(alpha, s).unwrap();
        for b in [Cx::new(0.1, 0.2), Cx::new(-0.4, 0.9)] {
            let a = wigner_point(&coh, alpha + b).unwrap();
            let v = wigner_point(&vac, b).unwrap();
            assert!((a - v).abs() < 1e-9);
        }
    }

    #[test]
    fn wigner_at_origin_is_parity() {
        let s = space(20);
        let cat = cat_state(Cx::new(1.2, 0.4), -1.0, s).unwrap();
        let w0 = wigner_point(&cat, Cx::new(0.0, 0.0)).unwrap();
        let pp = photon_parity(&cat).unwrap();
        assert!((pp - (1.0 + std::f64::consts::FRAC_PI_2 * w0) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn entropy_and_conditioning() {
        let s = space(40);
        let vac = QuantumState::<f64>::vacuum(s);
        let prod = QuantumState::product(&QuantumState::qubit(QubitBasis::Plus), &vac).unwrap();
        assert!(qubit_entropy(&prod).unwrap().abs() < 1e-12);
        let (res, p) = conditional_resonator(&prod, QubitBasis::Plus).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!((res - vac.density_matrix()).norm() < 1e-12);
        assert!(matches!(
            conditional_resonator(&prod, QubitBasis::Minus),
            Err(Error::ImprobableOutcome(_))
        ));

        // (|+⟩|α⟩ − |−⟩|−α⟩)/√2, the cat the Rabi dynamics produce from |1,0⟩
        // with large α is maximally entangled
        let alpha = Cx::new(2.5, 0.0);
        let bell = bell_cat(alpha, s);
        let ent = qubit_entropy(&bell).unwrap();
        assert!((ent - 1.0).abs() < 1e-6, "{ent}");
        // σ_z outcome 0 leaves an odd cat with negative W(0)
        let (odd, _) = conditional_resonator(&bell, QubitBasis::Ground).unwrap();
        let odd = QuantumState::mixed(Support::Resonator(s), odd).unwrap();
        assert!(wigner_point(&odd, Cx::new(0.0, 0.0)).unwrap() < -0.6);
        // σ_x outcomes select the coherent branches
        let (plus, _) = conditional_resonator(&bell, QubitBasis::Plus).unwrap();
        let plus = QuantumState::mixed(Support::Resonator(s), plus).unwrap();
        let coh = coherent_state(alpha, s).unwrap();
        assert!((plus.fidelity(&coh).unwrap() - 1.0).abs() < 1e-8);
    }

    fn bell_cat(alpha: Cx<f64>, s: SpaceSpec) -> QuantumState<f64> {
        let plus = QuantumState::product(&QuantumState::qubit(QubitBasis::Plus), &coherent_state(alpha, s).unwrap())
            .unwrap();
        let minus = QuantumState::product(&QuantumState::qubit(QubitBasis::Minus), &coherent_state(-alpha, s).unwrap())
            .unwrap();
        let (StateData::Pure(a), StateData::Pure(b)) = (plus.data(), minus.data()) else {
            unreachable!()
        };
        QuantumState::pure_normalized(plus.support(), a - b).unwrap()
    }

    #[test]
    fn intermediate_cat_entropy_matches_overlap_formula() {
        // eigenvalues of the reduced qubit are (1 ± e^{−2|α|²})/2
        let s = space(30);
        let alpha = Cx::new(0.6, 0.0);
        let bell = bell_cat(alpha, s);
        let o: f64 = (-2.0 * alpha.norm_sqr()).exp();
        let (p, q) = ((1.0 + o) / 2.0, (1.0 - o) / 2.0);
        let want = -(p * p.log2() + q * q.log2());
        assert!((qubit_entropy(&bell).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn revival_peak_finds_window_maximum() {
        let times: Vec<f64> = (0..=60).map(|k| k as f64 * 0.02).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| 0.5 + 0.5 * (-(t - 0.56f64).powi(2) / 0.001).exp() + if t > 1.0 { 0.6 } else { 0.0 })
            .collect();
        let (i, t, _) = revival_peak(&times, &values, 0.56).unwrap();
        assert_eq!(i, 28);
        assert!((t - 0.56).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_seeded() {
        use rand::SeedableRng;
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x = sample_probability(0.3, 1000, &mut a).unwrap();
        let y = sample_probability(0.3, 1000, &mut b).unwrap();
        assert_eq!(x, y);
        assert!((x - 0.3).abs() < 0.06);
    }
}
