//! Time-evolution engines: exact unitary evolution, the Trotterized pulse
//! sequence, and Lindblad evolution with resonator photon loss.

use nalgebra::ComplexField;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hilbert::{QuantumOperator, QuantumState, SpaceSpec, StateData, Support};
use crate::linalg::{expm, hermiticity_defect, one_norm, HermitianEigen};
use crate::models::{build_jc, build_rabi, RabiParams};
use crate::scalar::{cr, lit, to_f64, CMatrix, CVector, Cx, Real};
use crate::trotter::{apply_qubit_gate_rho, bit_flip, TrotterOrder, TrotterPlan, TrotterPropagator};

/// Where a trajectory came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance<T: Real> {
    /// Evolution under a bare Hamiltonian or segment list.
    Hamiltonian,
    Rabi(RabiParams<T>),
    Trotter(TrotterPlan<T>),
}

#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<QuantumState<T>>,
    pub params: Provenance<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn with_params(mut self, params: Provenance<T>) -> Self {
        self.params = params;
        self
    }

    pub fn final_state(&self) -> Option<&QuantumState<T>> {
        self.states.last()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &QuantumState<T>)> {
        self.times.iter().copied().zip(&self.states)
    }

    /// Evaluates `f` on every sample.
    pub fn map<R>(&self, f: impl FnMut(&QuantumState<T>) -> R) -> Vec<R> {
        self.states.iter().map(f).collect()
    }

    /// Real part of `⟨op⟩` along the trajectory.
    pub fn expectation(&self, op: &QuantumOperator<T>) -> Result<Vec<T>> {
        self.states
            .iter()
            .map(|s| s.expectation(op).map(|z| z.re))
            .collect()
    }
}

fn check_times<T: Real>(times: &[T]) -> Result<()> {
    if let Some(&first) = times.first() {
        if first < T::zero() {
            return Err(invalid("times", "sample times must be non-negative"));
        }
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times", "sample times must be sorted"));
    }
    Ok(())
}

fn check_support<T: Real>(expected: Support, state: &QuantumState<T>) -> Result<()> {
    if state.support() != expected {
        return Err(Error::DimensionMismatch {
            expected: expected.dim(),
            found: state.dim(),
        });
    }
    Ok(())
}

/// `exp(−iHt)ψ_0` at each requested time, from a single eigendecomposition.
pub fn evolve_unitary<T: Real>(
    h: &QuantumOperator<T>,
    psi0: &QuantumState<T>,
    times: &[T],
) -> Result<Trajectory<T>> {
    let mut out = evolve_unitary_many(h, std::slice::from_ref(psi0), times)?;
    Ok(out.remove(0))
}

/// Several initial states under the same Hamiltonian, sharing the
/// eigendecomposition.
pub fn evolve_unitary_many<T: Real>(
    h: &QuantumOperator<T>,
    initial: &[QuantumState<T>],
    times: &[T],
) -> Result<Vec<Trajectory<T>>> {
    let defect = hermiticity_defect(h.matrix());
    if defect > lit(1e-10) {
        return Err(Error::NotHermitian(to_f64(defect)));
    }
    check_times(times)?;
    for psi0 in initial {
        check_support(h.support(), psi0)?;
    }
    let eig = HermitianEigen::blockwise(h.matrix());
    let v = &eig.vectors;
    let phases = |t: T| -> CVector<T> { eig.values.map(|e| Cx::new(T::zero(), -e * t).exp()) };
    let run = |psi0: &QuantumState<T>| -> Trajectory<T> {
        let support = psi0.support();
        let states = match psi0.data() {
            StateData::Pure(psi) => {
                let c = v.adjoint() * psi;
                times
                    .iter()
                    .map(|&t| {
                        let out = v * c.component_mul(&phases(t));
                        QuantumState::from_parts(support, StateData::Pure(out))
                    })
                    .collect()
            }
            StateData::Mixed(rho) => {
                let r = v.adjoint() * rho * v;
                times
                    .iter()
                    .map(|&t| {
                        let p = phases(t);
                        let rt = CMatrix::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, j)] * p[i] * p[j].conj());
                        QuantumState::from_parts(support, StateData::Mixed(v * rt * v.adjoint()))
                    })
                    .collect()
            }
        };
        Trajectory {
            times: times.to_vec(),
            states,
            params: Provenance::Hamiltonian,
        }
    };
    Ok(initial.iter().map(run).collect())
}

/// Exact evolution under the Rabi Hamiltonian; uses the Lindblad engine when
/// `params.t1_res` is set.
pub fn evolve_rabi<T: Real>(
    params: &RabiParams<T>,
    psi0: &QuantumState<T>,
    times: &[T],
    space: SpaceSpec,
    options: &LindbladOptions,
) -> Result<Trajectory<T>> {
    let h = build_rabi(params, space);
    let traj = match params.t1_res {
        None => evolve_unitary(&h, psi0, times)?,
        Some(t1) => evolve_lindblad_times(&h, psi0, t1, times, options)?,
    };
    Ok(traj.with_params(Provenance::Rabi(*params)))
}

/// Runs the Trotter sequence, sampling after every step (`n_steps + 1` samples).
pub fn evolve_trotter<T: Real>(
    plan: &TrotterPlan<T>,
    psi0: &QuantumState<T>,
    space: SpaceSpec,
) -> Result<Trajectory<T>> {
    let states = TrotterPropagator::new(*plan, space)?.states(psi0)?;
    Ok(Trajectory {
        times: (0..=plan.n_steps).map(|n| plan.time_of_step(n)).collect(),
        states,
        params: Provenance::Trotter(*plan),
    })
}

// ---------------------------------------------------------------------------
// Lindblad evolution

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiouvillianMethod {
    /// Dense superoperator exponential when the space fits the budget,
    /// Taylor action on ρ otherwise.
    Auto,
    Superoperator,
    TaylorAction,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladOptions {
    pub method: LiouvillianMethod,
    /// Largest Hilbert dimension for which the dense `d²×d²` superoperator is
    /// exponentiated.
    pub superop_budget: usize,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        Self {
            method: LiouvillianMethod::Auto,
            superop_budget: 16,
        }
    }
}

/// Resonator Fock number of each basis index of `support`.
fn photon_numbers(support: Support) -> Result<Vec<usize>> {
    match support {
        Support::Qubit => Err(Error::Precondition(
            "photon decay needs a resonator degree of freedom".into(),
        )),
        Support::Resonator(s) => Ok((0..s.dim_res()).collect()),
        Support::Joint(s) => Ok((0..s.dim_total()).map(|i| i % s.dim_res()).collect()),
    }
}

/// `a ρ a†` with `a` acting on the resonator factor.
fn jump<T: Real>(numbers: &[usize], n_max: usize, rho: &CMatrix<T>) -> CMatrix<T> {
    let d = rho.nrows();
    let mut out = CMatrix::zeros(d, d);
    for j in 0..d {
        let nj = numbers[j];
        if nj == n_max {
            continue;
        }
        let sj: T = lit(((nj + 1) as f64).sqrt());
        for i in 0..d {
            let ni = numbers[i];
            if ni == n_max {
                continue;
            }
            let si: T = lit(((ni + 1) as f64).sqrt());
            out[(i, j)] = rho[(i + 1, j + 1)] * cr(si * sj);
        }
    }
    out
}

/// Nonzero entries of a sparse operator.
struct Sparse<T: Real> {
    entries: Vec<(usize, usize, Cx<T>)>,
}

impl<T: Real> Sparse<T> {
    /// Keeps `m` only if at most a quarter of its entries are nonzero.
    fn try_from_dense(m: &CMatrix<T>) -> Option<Self> {
        let zero = Cx::new(T::zero(), T::zero());
        let entries: Vec<_> = (0..m.ncols())
            .flat_map(|c| (0..m.nrows()).map(move |r| (r, c)))
            .filter(|&(r, c)| m[(r, c)] != zero)
            .map(|(r, c)| (r, c, m[(r, c)]))
            .collect();
        (entries.len() * 4 <= m.len()).then_some(Self { entries })
    }

    /// `−i(H x − x H†)`
    fn commutator_like(&self, x: &CMatrix<T>) -> CMatrix<T> {
        let d = x.nrows();
        let mut out = CMatrix::zeros(d, d);
        for &(r, c, v) in &self.entries {
            // (H x)[r, :] += v x[c, :]
            for j in 0..d {
                out[(r, j)] += v * x[(c, j)];
            }
            // (x H†)[:, r] += conj(v) x[:, c]
            let vc = v.conj();
            for i in 0..d {
                out[(i, r)] -= x[(i, c)] * vc;
            }
        }
        out * Cx::new(T::zero(), -T::one())
    }
}

enum Engine<T: Real> {
    Dense(CMatrix<T>),
    Action {
        /// `H − iκ a†a/2`
        heff: CMatrix<T>,
        sparse: Option<Sparse<T>>,
        bound: T,
    },
}

/// Propagator of the master equation `dρ/dt = −i[H,ρ] + κ(aρa† − ½{a†a,ρ})`
/// over a fixed duration.
pub struct LindbladPropagator<T: Real> {
    support: Support,
    kappa: T,
    duration: T,
    numbers: Vec<usize>,
    n_max: usize,
    engine: Engine<T>,
}

impl<T: Real> LindbladPropagator<T> {
    pub fn new(h: &QuantumOperator<T>, kappa: T, duration: T, options: &LindbladOptions) -> Result<Self> {
        if kappa < T::zero() {
            return Err(invalid("kappa", "decay rate must be non-negative"));
        }
        if duration < T::zero() {
            return Err(invalid("duration", "segment duration must be non-negative"));
        }
        let defect = hermiticity_defect(h.matrix());
        if defect > lit(1e-10) {
            return Err(Error::NotHermitian(to_f64(defect)));
        }
        let support = h.support();
        let numbers = photon_numbers(support)?;
        let n_max = support.space().expect("resonator present").n_max();
        let d = h.dim();
        let mut heff = h.matrix().clone();
        for (i, &n) in numbers.iter().enumerate() {
            heff[(i, i)] -= Cx::new(T::zero(), kappa * lit(0.5 * n as f64));
        }
        let dense = match options.method {
            LiouvillianMethod::Superoperator => {
                if d > options.superop_budget {
                    return Err(Error::MemoryBudget {
                        dim: d,
                        budget: options.superop_budget,
                    });
                }
                true
            }
            LiouvillianMethod::Auto => d <= options.superop_budget,
            LiouvillianMethod::TaylorAction => false,
        };
        let engine = if dense {
            let l = liouvillian(&heff, &numbers, n_max, kappa);
            Engine::Dense(expm(&(l * cr(duration))))
        } else {
            let bound = lit::<T>(2.0) * one_norm(&heff) + kappa * lit(n_max as f64);
            let sparse = Sparse::try_from_dense(&heff);
            Engine::Action { heff, sparse, bound }
        };
        Ok(Self {
            support,
            kappa,
            duration,
            numbers,
            n_max,
            engine,
        })
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn apply(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let d = rho.nrows();
        let out = match &self.engine {
            Engine::Dense(p) => {
                let v = CVector::from_column_slice(rho.as_slice());
                let w = p * v;
                CMatrix::from_column_slice(d, d, w.as_slice())
            }
            Engine::Action { heff, sparse, bound } => {
                let mi = Cx::new(T::zero(), -T::one());
                let kappa = self.kappa;
                let heff_dag = heff.adjoint();
                let gen = |x: &CMatrix<T>| {
                    let coherent = match sparse {
                        Some(sp) => sp.commutator_like(x),
                        None => (heff * x - x * &heff_dag) * mi,
                    };
                    if kappa > T::zero() {
                        coherent + jump(&self.numbers, self.n_max, x) * cr(kappa)
                    } else {
                        coherent
                    }
                };
                crate::linalg::expm_action(gen, rho, self.duration, *bound)
            }
        };
        // remove the anti-Hermitian rounding residue; the trace is left untouched
        (&out + out.adjoint()) * cr(lit::<T>(0.5))
    }
}

/// Column-stacked Liouvillian: `vec(AρB) = (Bᵀ ⊗ A) vec ρ`.
fn liouvillian<T: Real>(heff: &CMatrix<T>, numbers: &[usize], n_max: usize, kappa: T) -> CMatrix<T> {
    let d = heff.nrows();
    let eye = CMatrix::<T>::identity(d, d);
    let mi = Cx::new(T::zero(), -T::one());
    let mut l = eye.kronecker(heff) * mi + heff.map(|z| z.conj()).kronecker(&eye) * (-mi);
    if kappa > T::zero() {
        let mut a = CMatrix::<T>::zeros(d, d);
        for i in 0..d {
            if numbers[i] < n_max {
                a[(i, i + 1)] = cr(lit(((numbers[i] + 1) as f64).sqrt()));
            }
        }
        l += a.kronecker(&a) * cr(kappa);
    }
    l
}

/// Exact amplitude-damping channel for resonator decay over `duration` with no
/// Hamiltonian, in Kraus form.
pub fn amplitude_damping<T: Real>(rho: &CMatrix<T>, support: Support, kappa: T, duration: T) -> Result<CMatrix<T>> {
    let numbers = photon_numbers(support)?;
    let eta = (-kappa * duration).exp();
    let n_max = support.space().expect("resonator present").n_max();
    let d = rho.nrows();
    let mut out = CMatrix::zeros(d, d);
    for l in 0..=n_max {
        // K_l |n⟩ = sqrt(C(n,l) η^{n−l} (1−η)^l) |n−l⟩
        let mut k = CMatrix::<T>::zeros(d, d);
        let mut any = false;
        for (i, &n) in numbers.iter().enumerate() {
            if n < l {
                continue;
            }
            let c = binomial(n, l) * to_f64(eta).powi((n - l) as i32) * to_f64(T::one() - eta).powi(l as i32);
            if c > 0.0 {
                k[(i - l, i)] = cr(lit(c.sqrt()));
                any = true;
            }
        }
        if any {
            out += &k * rho * k.adjoint();
        }
    }
    Ok(out)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A piece of a piecewise-constant Lindblad schedule.
#[derive(Clone, Debug)]
pub enum Segment<T: Real> {
    /// Evolve under `hamiltonian` with decay for `duration`, then record a sample.
    Evolve {
        hamiltonian: QuantumOperator<T>,
        duration: T,
    },
    /// Instantaneous unitary; not sampled.
    Gate(QuantumOperator<T>),
}

/// Master-equation evolution over a segment list, sampling at t = 0 and after
/// every `Evolve` segment.
pub fn evolve_lindblad<T: Real>(
    segments: &[Segment<T>],
    rho0: &QuantumState<T>,
    t1_res: T,
    options: &LindbladOptions,
) -> Result<Trajectory<T>> {
    if t1_res <= T::zero() {
        return Err(invalid("t1_res", "resonator lifetime must be positive"));
    }
    let kappa = T::one() / t1_res;
    let support = rho0.support();
    let mut rho = rho0.density_matrix();
    let mut t = T::zero();
    let mut times = vec![t];
    let mut states = vec![QuantumState::from_parts(support, StateData::Mixed(rho.clone()))];
    // consecutive segments usually repeat, so keep the last propagator
    let mut cache: Option<(CMatrix<T>, T, LindbladPropagator<T>)> = None;
    for seg in segments {
        match seg {
            Segment::Gate(u) => {
                if u.support() != support {
                    return Err(Error::DimensionMismatch {
                        expected: support.dim(),
                        found: u.dim(),
                    });
                }
                rho = u.matrix() * &rho * u.matrix().adjoint();
            }
            Segment::Evolve { hamiltonian, duration } => {
                if hamiltonian.support() != support {
                    return Err(Error::DimensionMismatch {
                        expected: support.dim(),
                        found: hamiltonian.dim(),
                    });
                }
                let hit = matches!(&cache, Some((h, d, _)) if d == duration && h == hamiltonian.matrix());
                if !hit {
                    let p = LindbladPropagator::new(hamiltonian, kappa, *duration, options)?;
                    cache = Some((hamiltonian.matrix().clone(), *duration, p));
                }
                rho = cache.as_ref().expect("filled above").2.apply(&rho);
                t += *duration;
                times.push(t);
                states.push(QuantumState::from_parts(support, StateData::Mixed(rho.clone())));
            }
        }
    }
    Ok(Trajectory {
        times,
        states,
        params: Provenance::Hamiltonian,
    })
}

/// Master-equation evolution under a constant Hamiltonian sampled at `times`.
pub fn evolve_lindblad_times<T: Real>(
    h: &QuantumOperator<T>,
    rho0: &QuantumState<T>,
    t1_res: T,
    times: &[T],
    options: &LindbladOptions,
) -> Result<Trajectory<T>> {
    check_times(times)?;
    let mut segments = Vec::new();
    let mut prev = T::zero();
    let mut lead = None;
    for (k, &t) in times.iter().enumerate() {
        if k == 0 {
            lead = Some(t);
        }
        if k > 0 || t > T::zero() {
            segments.push(Segment::Evolve {
                hamiltonian: h.clone(),
                duration: t - prev,
            });
        }
        prev = t;
    }
    let mut traj = evolve_lindblad(&segments, rho0, t1_res, options)?;
    // drop the implicit t = 0 sample when the grid does not start there
    if lead.is_some_and(|t| t > T::zero()) {
        traj.times.remove(0);
        traj.states.remove(0);
    }
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayPlacement {
    /// Photon loss acts during every JC segment.
    Continuous,
    /// Unitary Trotter steps separated by exact amplitude-damping channels of
    /// the same total duration.
    BetweenSteps,
}

/// Resonator decay settings for a Trotterized run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterDecay<T: Real> {
    pub t1_res: T,
    pub placement: DecayPlacement,
    /// Extra decay time per step outside the JC segments (bit flips, buffers),
    /// in μs. Zero keeps the ideal instantaneous-gate picture.
    pub idle_per_step: T,
    pub options: LindbladOptions,
}

impl<T: Real> TrotterDecay<T> {
    pub fn new(t1_res: T) -> Self {
        Self {
            t1_res,
            placement: DecayPlacement::Continuous,
            idle_per_step: T::zero(),
            options: LindbladOptions::default(),
        }
    }

    pub fn with_placement(mut self, placement: DecayPlacement) -> Self {
        self.placement = placement;
        self
    }

    pub fn with_idle(mut self, idle: T) -> Self {
        self.idle_per_step = idle;
        self
    }
}

/// Trotter sequence with resonator photon loss. Decay acts for the physical
/// duration of the JC segments (2τ per step) plus `idle_per_step`; samples are
/// labelled with simulated time `nτ`.
pub fn evolve_trotter_lindblad<T: Real>(
    plan: &TrotterPlan<T>,
    rho0: &QuantumState<T>,
    space: SpaceSpec,
    decay: &TrotterDecay<T>,
) -> Result<Trajectory<T>> {
    let mut states = Vec::with_capacity(plan.n_steps + 1);
    visit_trotter_lindblad(plan, rho0, space, decay, |_, s| states.push(s.clone()))?;
    Ok(Trajectory {
        times: (0..=plan.n_steps).map(|n| plan.time_of_step(n)).collect(),
        states,
        params: Provenance::Trotter(*plan),
    })
}

/// Streaming form of [`evolve_trotter_lindblad`]: calls `visit(n, ρ_n)` for
/// `n = 0..=n_steps` without keeping the trajectory.
pub fn visit_trotter_lindblad<T: Real>(
    plan: &TrotterPlan<T>,
    rho0: &QuantumState<T>,
    space: SpaceSpec,
    decay: &TrotterDecay<T>,
    mut visit: impl FnMut(usize, &QuantumState<T>),
) -> Result<()> {
    plan.validate()?;
    if decay.t1_res <= T::zero() {
        return Err(invalid("t1_res", "resonator lifetime must be positive"));
    }
    if decay.idle_per_step < T::zero() {
        return Err(invalid("idle_per_step", "idle time must be non-negative"));
    }
    let support = Support::Joint(space);
    check_support(support, rho0)?;
    let kappa = T::one() / decay.t1_res;
    let mut rho = rho0.density_matrix();
    visit(0, &QuantumState::from_parts(support, StateData::Mixed(rho.clone())));
    let idle = |r: CMatrix<T>| -> Result<CMatrix<T>> {
        if decay.idle_per_step > T::zero() {
            amplitude_damping(&r, support, kappa, decay.idle_per_step)
        } else {
            Ok(r)
        }
    };

    match decay.placement {
        DecayPlacement::BetweenSteps => {
            let per_step = plan.tau * lit(2.0) + decay.idle_per_step;
            for n in 1..=plan.n_steps {
                let step = crate::trotter::trotter_step(plan, n, space)?;
                rho = step.matrix() * &rho * step.matrix().adjoint();
                rho = amplitude_damping(&rho, support, kappa, per_step)?;
                visit(n, &QuantumState::from_parts(support, StateData::Mixed(rho.clone())));
            }
        }
        DecayPlacement::Continuous => {
            let jc = build_jc(plan.g, T::zero(), plan.delta_q_jc, space);
            let core = build_jc(plan.g, T::zero(), T::zero(), space);
            let opts = &decay.options;
            let core_p = LindbladPropagator::new(&core, kappa, plan.tau, opts)?;
            let (full_p, half_p) = match plan.order {
                TrotterOrder::First => (Some(LindbladPropagator::new(&jc, kappa, plan.tau, opts)?), None),
                TrotterOrder::Second => (
                    None,
                    Some(LindbladPropagator::new(&jc, kappa, plan.tau * lit(0.5), opts)?),
                ),
            };
            for n in 1..=plan.n_steps {
                let (phi1, phi2) = plan.phases(n);
                let r1 = bit_flip(phi1).into_matrix();
                let r2 = bit_flip(phi2).into_matrix();
                if let Some(h) = &half_p {
                    rho = h.apply(&rho);
                }
                rho = apply_qubit_gate_rho(&r1, &rho);
                rho = core_p.apply(&rho);
                rho = apply_qubit_gate_rho(&r2, &rho);
                rho = match (&full_p, &half_p) {
                    (Some(f), _) => f.apply(&rho),
                    (None, Some(h)) => h.apply(&rho),
                    (None, None) => unreachable!(),
                };
                rho = idle(rho)?;
                visit(n, &QuantumState::from_parts(support, StateData::Mixed(rho.clone())));
            }
        }
    }
    Ok(())
}
