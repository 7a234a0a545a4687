//! Flux-pulse predistortion: kernels from sampled step responses, triangular
//! Toeplitz inversion, parametric step forms and their fits, kernel
//! composition and flatness checks.
//!
//! Time is in ns throughout this module.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::scalar::{lit, to_f64, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    StepResponse,
    ImpulseResponse,
}

/// Uniformly sampled causal response; samples before index 0 are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTrace<T> {
    pub dt: T,
    pub samples: Vec<T>,
    pub kind: TraceKind,
}

impl<T: Real> KernelTrace<T> {
    pub fn step(dt: T, samples: Vec<T>) -> Result<Self> {
        Self::checked(dt, samples, TraceKind::StepResponse)
    }

    pub fn impulse(dt: T, samples: Vec<T>) -> Result<Self> {
        Self::checked(dt, samples, TraceKind::ImpulseResponse)
    }

    fn checked(dt: T, samples: Vec<T>, kind: TraceKind) -> Result<Self> {
        let t = Self { dt, samples, kind };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) {
            return Err(invalid("dt", "sampling period must be positive"));
        }
        if self.samples.is_empty() {
            return Err(invalid("samples", "trace is empty"));
        }
        if self.samples.iter().any(|x| !x.is_finite()) {
            return Err(invalid("samples", "trace contains non-finite values"));
        }
        Ok(())
    }

    /// Identity kernel: unit impulse, or unit step.
    pub fn identity(dt: T, n: usize, kind: TraceKind) -> Self {
        let samples = match kind {
            TraceKind::ImpulseResponse => (0..n).map(|k| if k == 0 { T::one() } else { T::zero() }).collect(),
            TraceKind::StepResponse => vec![T::one(); n],
        };
        Self { dt, samples, kind }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len()).map(|k| self.dt * lit(k as f64)).collect()
    }

    pub fn to_impulse(&self) -> Self {
        match self.kind {
            TraceKind::ImpulseResponse => self.clone(),
            TraceKind::StepResponse => impulse_from_step(self),
        }
    }

    pub fn to_step(&self) -> Self {
        match self.kind {
            TraceKind::StepResponse => self.clone(),
            TraceKind::ImpulseResponse => step_from_impulse(self),
        }
    }

    /// Every `factor`-th sample of the step response, at `factor·dt`.
    pub fn downsample(&self, factor: usize) -> Self {
        let step = self.to_step();
        Self {
            dt: self.dt * lit(factor.max(1) as f64),
            samples: step.samples.iter().step_by(factor.max(1)).copied().collect(),
            kind: TraceKind::StepResponse,
        }
    }
}

/// `h[n] = x[n] − x[n−1]`.
pub fn impulse_from_step<T: Real>(trace: &KernelTrace<T>) -> KernelTrace<T> {
    let x = &trace.samples;
    let samples = (0..x.len())
        .map(|n| if n == 0 { x[0] } else { x[n] - x[n - 1] })
        .collect();
    KernelTrace {
        dt: trace.dt,
        samples,
        kind: TraceKind::ImpulseResponse,
    }
}

pub fn step_from_impulse<T: Real>(trace: &KernelTrace<T>) -> KernelTrace<T> {
    let mut acc = T::zero();
    let samples = trace
        .samples
        .iter()
        .map(|&h| {
            acc += h;
            acc
        })
        .collect();
    KernelTrace {
        dt: trace.dt,
        samples,
        kind: TraceKind::StepResponse,
    }
}

/// Lower-triangular Toeplitz matrix with `h[j]` on the j-th lower diagonal.
pub fn transfer_matrix<T: Real>(impulse: &KernelTrace<T>, n: usize) -> Result<DMatrix<T>> {
    let h = impulse.to_impulse().samples;
    if n > h.len() {
        return Err(invalid("n", format!("{n} exceeds trace length {}", h.len())));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| if i >= j { h[i - j] } else { T::zero() }))
}

/// Impulse response `k` with `h * k = δ` on the first `n` samples, by forward
/// substitution on the triangular Toeplitz system.
pub fn inverse_impulse<T: Real>(h: &[T], n: usize) -> Result<Vec<T>> {
    if n > h.len() {
        return Err(invalid("n", format!("{n} exceeds trace length {}", h.len())));
    }
    let h0 = h[0];
    if h0 == T::zero() || !h0.is_finite() {
        return Err(Error::NotInvertible);
    }
    let mut k = vec![T::zero(); n];
    k[0] = T::one() / h0;
    for m in 1..n {
        let mut acc = T::zero();
        for j in 1..=m {
            acc += h[j] * k[m - j];
        }
        k[m] = -acc / h0;
    }
    Ok(k)
}

/// Step response of the predistortion kernel that undoes the sampled system
/// step response `step` over `n` samples.
pub fn invert_kernel<T: Real>(step: &KernelTrace<T>, n: usize) -> Result<KernelTrace<T>> {
    step.validate()?;
    let h = step.to_impulse().samples;
    let k = inverse_impulse(&h, n)?;
    Ok(step_from_impulse(&KernelTrace {
        dt: step.dt,
        samples: k,
        kind: TraceKind::ImpulseResponse,
    }))
}

/// Causal convolution `y[k] = Σ_j h[j] x[k − j]`, truncated to `x.len()`.
pub fn convolve<T: Real>(h: &[T], x: &[T]) -> Vec<T> {
    (0..x.len())
        .map(|k| {
            let top = k.min(h.len().saturating_sub(1));
            (0..=top).fold(T::zero(), |acc, j| acc + h[j] * x[k - j])
        })
        .collect()
}

/// Applies a kernel (step or impulse form) to a waveform sampled at the kernel's `dt`.
pub fn apply_kernel<T: Real>(kernel: &KernelTrace<T>, waveform: &[T]) -> Vec<T> {
    convolve(&kernel.to_impulse().samples, waveform)
}

/// Series connection of kernels: the convolution of their impulse responses,
/// truncated to the shortest length. Returned as an impulse response.
pub fn compose_kernels<T: Real>(kernels: &[KernelTrace<T>]) -> Result<KernelTrace<T>> {
    let first = kernels.first().ok_or_else(|| invalid("kernels", "nothing to compose"))?;
    let n = kernels.iter().map(KernelTrace::len).min().unwrap_or(0);
    let tol: T = lit(1e-9);
    let mut acc = first.to_impulse().samples[..n].to_vec();
    for k in &kernels[1..] {
        if (k.dt - first.dt).abs() > tol * first.dt {
            return Err(invalid("kernels", "sampling periods differ"));
        }
        acc = convolve(&k.to_impulse().samples, &acc);
    }
    Ok(KernelTrace {
        dt: first.dt,
        samples: acc,
        kind: TraceKind::ImpulseResponse,
    })
}

/// Step response of `system` after predistortion by `kernel`.
pub fn corrected_step<T: Real>(system: &KernelTrace<T>, kernel: &KernelTrace<T>) -> Vec<T> {
    let n = system.len().min(kernel.len());
    let unit = vec![T::one(); n];
    apply_kernel(system, &apply_kernel(kernel, &unit))
}

/// Largest `|y[k] − 1|` for `k ≥ settle`.
pub fn flatness<T: Real>(response: &[T], settle: usize) -> T {
    response
        .iter()
        .skip(settle)
        .fold(T::zero(), |m, &y| m.max((y - T::one()).abs()))
}

/// First sample index after `factor` times `tau` (default factor 5).
pub fn settle_index<T: Real>(dt: T, tau: T, factor: T) -> usize {
    let k = to_f64(factor * tau / dt).ceil();
    if k.is_finite() && k > 0.0 {
        k as usize
    } else {
        0
    }
}

/// Analytic step responses `s(t)u(t)` of the distortion and correction forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum StepForm<T> {
    /// `1 + a·t`.
    LinearRamp { a: T },
    /// `1 + α·exp(−t/τ)`.
    ExpApproach { alpha: T, tau: T },
    /// `1 + c1·t + c2·t²`.
    Quadratic { c1: T, c2: T },
    /// `1 − erf(α/(21·√(t + 1)))`, α in dB at 1 GHz, t in ns.
    SkinEffect { alpha_db: T },
    /// `exp(−t/τ)`: an AC-coupling (bias-tee) high-pass.
    HighPass { tau: T },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    LinearRamp,
    ExpApproach,
    Quadratic,
    SkinEffect,
    HighPass,
}

fn erf<T: Real>(x: T) -> T {
    lit(statrs::function::erf::erf(to_f64(x)))
}

impl<T: Real> StepForm<T> {
    pub fn kind(&self) -> FormKind {
        match self {
            Self::LinearRamp { .. } => FormKind::LinearRamp,
            Self::ExpApproach { .. } => FormKind::ExpApproach,
            Self::Quadratic { .. } => FormKind::Quadratic,
            Self::SkinEffect { .. } => FormKind::SkinEffect,
            Self::HighPass { .. } => FormKind::HighPass,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::ExpApproach { tau, .. } | Self::HighPass { tau } if !(tau > T::zero()) => {
                Err(invalid("tau", "time constant must be positive"))
            }
            Self::SkinEffect { alpha_db } if alpha_db < T::zero() => {
                Err(invalid("alpha_db", "attenuation must be non-negative"))
            }
            _ => Ok(()),
        }
    }

    pub fn params(&self) -> Vec<T> {
        match *self {
            Self::LinearRamp { a } => vec![a],
            Self::ExpApproach { alpha, tau } => vec![alpha, tau],
            Self::Quadratic { c1, c2 } => vec![c1, c2],
            Self::SkinEffect { alpha_db } => vec![alpha_db],
            Self::HighPass { tau } => vec![tau],
        }
    }

    pub fn from_params(kind: FormKind, p: &[T]) -> Result<Self> {
        let need = match kind {
            FormKind::ExpApproach | FormKind::Quadratic => 2,
            _ => 1,
        };
        if p.len() != need {
            return Err(invalid("params", format!("{kind:?} takes {need} parameters, got {}", p.len())));
        }
        let form = match kind {
            FormKind::LinearRamp => Self::LinearRamp { a: p[0] },
            FormKind::ExpApproach => Self::ExpApproach { alpha: p[0], tau: p[1] },
            FormKind::Quadratic => Self::Quadratic { c1: p[0], c2: p[1] },
            FormKind::SkinEffect => Self::SkinEffect { alpha_db: p[0] },
            FormKind::HighPass => Self::HighPass { tau: p[0] },
        };
        form.validate()?;
        Ok(form)
    }

    /// Step response at `t ≥ 0` (ns).
    pub fn step_value(&self, t: T) -> T {
        match *self {
            Self::LinearRamp { a } => T::one() + a * t,
            Self::ExpApproach { alpha, tau } => T::one() + alpha * (-t / tau).exp(),
            Self::Quadratic { c1, c2 } => T::one() + c1 * t + c2 * t * t,
            Self::SkinEffect { alpha_db } => T::one() - erf(alpha_db / (lit::<T>(21.0) * (t + T::one()).sqrt())),
            Self::HighPass { tau } => (-t / tau).exp(),
        }
    }

    /// Derivatives of the step response with respect to `params()`.
    fn gradient(&self, t: T) -> Vec<T> {
        match *self {
            Self::LinearRamp { .. } => vec![t],
            Self::ExpApproach { alpha, tau } => {
                let e = (-t / tau).exp();
                vec![e, alpha * e * t / (tau * tau)]
            }
            Self::Quadratic { .. } => vec![t, t * t],
            Self::SkinEffect { alpha_db } => {
                let root = lit::<T>(21.0) * (t + T::one()).sqrt();
                let x = alpha_db / root;
                vec![-lit::<T>(2.0) / T::pi().sqrt() * (-x * x).exp() / root]
            }
            Self::HighPass { tau } => {
                let e = (-t / tau).exp();
                vec![e * t / (tau * tau)]
            }
        }
    }

    /// Longest time constant of the form, when it has one.
    pub fn time_constant(&self) -> Option<T> {
        match *self {
            Self::LinearRamp { a } if a != T::zero() => Some(T::one() / a.abs()),
            Self::ExpApproach { tau, .. } | Self::HighPass { tau } => Some(tau),
            _ => None,
        }
    }

    /// Closed-form step response of the inverse system, where one exists:
    /// `1 + a·t → e^{−at}` and `1 + α e^{−t/τ} → 1 − α/(1+α)·e^{−t/(τ(1+α))}`.
    pub fn analytic_inverse_step(&self, t: T) -> Option<T> {
        match *self {
            Self::LinearRamp { a } => Some((-a * t).exp()),
            Self::ExpApproach { alpha, tau } => {
                let s = T::one() + alpha;
                Some(T::one() - alpha / s * (-t / (tau * s)).exp())
            }
            Self::HighPass { tau } => Some(T::one() + t / tau),
            _ => None,
        }
    }

    pub fn sample(&self, dt: T, n: usize) -> Result<KernelTrace<T>> {
        self.validate()?;
        KernelTrace::step(dt, (0..n).map(|k| self.step_value(dt * lit(k as f64))).collect())
    }
}

/// Sampled step response of `form`, as an impulse kernel.
pub fn parametric_kernel<T: Real>(form: &StepForm<T>, dt: T, n: usize) -> Result<KernelTrace<T>> {
    if n == 0 {
        return Err(invalid("n", "need at least one sample"));
    }
    Ok(impulse_from_step(&form.sample(dt, n)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepFit<T: Real> {
    pub form: StepForm<T>,
    pub residual_rms: T,
    pub converged: bool,
}

/// Least-squares fit of a step-response trace to a parametric form.
pub fn fit_step_form<T: Real>(trace: &KernelTrace<T>, kind: FormKind) -> Result<StepFit<T>> {
    trace.validate()?;
    let step = trace.to_step();
    let ts = step.times();
    let ys = step.samples.clone();
    let n = ys.len();
    let t_end = ts[n - 1];
    let y0 = ys[0];
    let y_end = ys[n - 1];
    let p0: Vec<T> = match kind {
        FormKind::LinearRamp => vec![if t_end > T::zero() { (y_end - y0) / t_end } else { T::zero() }],
        FormKind::Quadratic => vec![T::zero(), T::zero()],
        FormKind::ExpApproach => {
            let alpha = y0 - y_end;
            // time at which the excess has fallen to 1/e
            let target = y_end + alpha * lit(std::f64::consts::E.recip());
            let idx = ys.iter().position(|&y| (y - target) * alpha.signum() <= T::zero()).unwrap_or(n / 3);
            vec![alpha, ts[idx.max(1)]]
        }
        FormKind::SkinEffect => {
            let d = T::one() - y0;
            // invert 1 − erf(α/21) at t = 0 with the small-argument slope
            vec![(d * lit::<T>(21.0) * T::pi().sqrt() / lit(2.0)).max(lit(1e-3))]
        }
        FormKind::HighPass => {
            let ratio = y_end.max(lit(1e-12)).min(T::one() - lit(1e-12));
            vec![-t_end / ratio.ln()]
        }
    };
    let res = levenberg_marquardt(
        |p: &DVector<T>| {
            let form = unchecked_form(kind, p.as_slice());
            let k = p.len();
            let mut r = DVector::zeros(n);
            let mut jac = DMatrix::zeros(n, k);
            for i in 0..n {
                r[i] = form.step_value(ts[i]) - ys[i];
                for (j, g) in form.gradient(ts[i]).into_iter().enumerate() {
                    jac[(i, j)] = g;
                }
            }
            (r, jac)
        },
        |p: &mut DVector<T>| match kind {
            FormKind::ExpApproach => p[1] = p[1].max(step.dt * lit(0.1)),
            FormKind::HighPass => p[0] = p[0].max(step.dt * lit(0.1)),
            FormKind::SkinEffect => p[0] = p[0].max(T::zero()),
            _ => {}
        },
        DVector::from_vec(p0),
        &LmOptions {
            max_iter: 1000,
            ..LmOptions::default()
        },
    );
    Ok(StepFit {
        form: StepForm::from_params(kind, res.params.as_slice())?,
        residual_rms: res.rms(),
        converged: res.converged,
    })
}

fn unchecked_form<T: Real>(kind: FormKind, p: &[T]) -> StepForm<T> {
    match kind {
        FormKind::LinearRamp => StepForm::LinearRamp { a: p[0] },
        FormKind::ExpApproach => StepForm::ExpApproach { alpha: p[0], tau: p[1] },
        FormKind::Quadratic => StepForm::Quadratic { c1: p[0], c2: p[1] },
        FormKind::SkinEffect => StepForm::SkinEffect { alpha_db: p[0] },
        FormKind::HighPass => StepForm::HighPass { tau: p[0] },
    }
}
