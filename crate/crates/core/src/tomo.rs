//! Direct Wigner tomography: synthetic displaced-parity data, maximum-likelihood
//! density-matrix reconstruction and double-Gaussian phase-space fits.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::hilbert::{QuantumState, SpaceSpec, Support};
use crate::linalg::spectral_norm;
use crate::measure::{displaced_parity, sample_probability, wigner_point};
use crate::scalar::{cr, lit, to_f64, CMatrix, Cx, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WignerPoint<T: Real> {
    pub alpha: Cx<T>,
    pub value: T,
    pub shots: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerDataset<T: Real> {
    pub points: Vec<WignerPoint<T>>,
    /// Space the displaced parity operators are built in.
    pub space_build: SpaceSpec,
    /// Space the density matrix is reconstructed in.
    pub space_trunc: SpaceSpec,
}

impl<T: Real> WignerDataset<T> {
    pub fn new(points: Vec<WignerPoint<T>>, space_build: SpaceSpec, space_trunc: SpaceSpec) -> Result<Self> {
        let ds = Self {
            points,
            space_build,
            space_trunc,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(invalid("points", "dataset is empty"));
        }
        if self.space_build.n_max() < self.space_trunc.n_max() {
            return Err(invalid("space_build", "build space must contain the reconstruction space"));
        }
        let max_a2 = self.points.iter().fold(0.0f64, |m, p| m.max(to_f64(p.alpha.norm_sqr())));
        // the same guard as for coherent states: |α|² ≤ n_max/4
        if (self.space_build.n_max() as f64) < 4.0 * max_a2 {
            return Err(Error::Precondition(format!(
                "build space n_max = {} too small for |α|² up to {max_a2:.2}",
                self.space_build.n_max()
            )));
        }
        let bound = 2.0 / std::f64::consts::PI;
        for (i, p) in self.points.iter().enumerate() {
            let eps = match p.shots {
                Some(0) => return Err(invalid("points.shots", format!("point {i}: must be positive"))),
                Some(n) => 1e-9 + 5.0 * bound / (n as f64).sqrt(),
                None => 1e-9,
            };
            let v = to_f64(p.value);
            if !v.is_finite() || v.abs() > bound + eps {
                return Err(invalid("points.value", format!("point {i}: {v} outside ±2/π")));
            }
        }
        Ok(())
    }

    /// Replaces each value by a binomially sampled estimate of the displaced
    /// parity with `shots` repetitions.
    pub fn with_shot_noise<R: Rng + ?Sized>(mut self, shots: u64, rng: &mut R) -> Result<Self> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        for p in &mut self.points {
            let pe = (1.0 + half_pi * to_f64(p.value)) / 2.0;
            let est = sample_probability(pe, shots, rng)?;
            p.value = lit((2.0 * est - 1.0) / half_pi);
            p.shots = Some(shots);
        }
        Ok(self)
    }
}

/// Square grid of `n × n` displacements covering `[-extent, extent]²`.
pub fn square_grid<T: Real>(extent: T, n: usize) -> Vec<Cx<T>> {
    let axis = linspace(-extent, extent, n);
    axis.iter()
        .flat_map(|&y| axis.iter().map(move |&x| Cx::new(x, y)))
        .collect()
}

pub(crate) fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    match n {
        0 => vec![],
        1 => vec![(a + b) * lit(0.5)],
        _ => (0..n)
            .map(|k| a + (b - a) * lit(k as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Noiseless displaced-parity data of `state` at the given displacements.
pub fn synthesize_dataset<T: Real>(
    state: &QuantumState<T>,
    alphas: &[Cx<T>],
    space_build: SpaceSpec,
    space_trunc: SpaceSpec,
) -> Result<WignerDataset<T>> {
    let points = alphas
        .iter()
        .map(|&alpha| {
            Ok(WignerPoint {
                alpha,
                value: wigner_point(state, alpha)?,
                shots: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    WignerDataset::new(points, space_build, space_trunc)
}

#[derive(Clone, Debug)]
pub struct MeasurementOps<T: Real> {
    /// `D(α) Π D†(α)` cropped to the reconstruction space, one per point.
    pub ops: Vec<CMatrix<T>>,
    /// Number of real dimensions of Hermitian matrices spanned by `ops`.
    pub span_rank: usize,
    /// Whether the span covers all `dim²` real dimensions.
    pub informationally_complete: bool,
}

pub fn build_measurement_ops<T: Real>(dataset: &WignerDataset<T>) -> Result<MeasurementOps<T>> {
    dataset.validate()?;
    let db = dataset.space_build.dim_res();
    let d = dataset.space_trunc.dim_res();
    let ops: Vec<CMatrix<T>> = dataset
        .points
        .iter()
        .map(|p| displaced_parity(p.alpha, db).view((0, 0), (d, d)).into_owned())
        .collect();
    let span_rank = hermitian_span_rank(&ops, d);
    Ok(MeasurementOps {
        informationally_complete: span_rank == d * d,
        span_rank,
        ops,
    })
}

fn hermitian_span_rank<T: Real>(ops: &[CMatrix<T>], d: usize) -> usize {
    let dims = d * d;
    let mut a = DMatrix::<f64>::zeros(ops.len().max(1), dims);
    for (row, m) in ops.iter().enumerate() {
        let mut k = 0;
        for i in 0..d {
            a[(row, k)] = to_f64(m[(i, i)].re);
            k += 1;
            for j in i + 1..d {
                a[(row, k)] = to_f64(m[(i, j)].re);
                a[(row, k + 1)] = to_f64(m[(i, j)].im);
                k += 2;
            }
        }
    }
    let sv = a.singular_values();
    let top = sv.iter().fold(0.0f64, |m, &s| m.max(s));
    sv.iter().filter(|&&s| s > 1e-10 * top.max(1e-300)).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub max_iter: usize,
    /// Log-likelihood improvement regarded as negligible.
    pub tol: f64,
    /// Consecutive negligible improvements needed to stop.
    pub patience: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-10,
            patience: 10,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MleDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    /// Log-likelihood after each accepted iteration (non-decreasing).
    pub history: Vec<f64>,
    pub informationally_complete: bool,
    pub span_rank: usize,
    /// RMS of `v_i − (2/π) tr[M_i ρ]`.
    pub residual_rms: f64,
}

#[derive(Clone, Debug)]
pub struct Reconstruction<T: Real> {
    pub state: QuantumState<T>,
    pub diagnostics: MleDiagnostics,
}

struct Objective<'a, T: Real> {
    ops: &'a [CMatrix<T>],
    values: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> Objective<'_, T> {
    fn predictions(&self, rho: &CMatrix<T>) -> Vec<T> {
        let scale = lit::<T>(2.0) / T::pi();
        self.ops.iter().map(|m| trace_product(m, rho) * scale).collect()
    }

    /// Gaussian log-likelihood `−½ Σ w_i (v_i − f_i)²`.
    fn log_likelihood(&self, f: &[T]) -> T {
        f.iter()
            .zip(&self.values)
            .zip(&self.weights)
            .fold(T::zero(), |acc, ((&fi, &vi), &wi)| acc - wi * (vi - fi) * (vi - fi))
            * lit(0.5)
    }

    /// Gradient of the log-likelihood with respect to ρ.
    fn gradient(&self, f: &[T]) -> CMatrix<T> {
        let d = self.ops[0].nrows();
        let scale = lit::<T>(2.0) / T::pi();
        let mut r = CMatrix::zeros(d, d);
        for ((m, &fi), (&vi, &wi)) in self.ops.iter().zip(f).zip(self.values.iter().zip(&self.weights)) {
            r += m * cr(wi * (vi - fi) * scale);
        }
        r
    }
}

/// `Re tr[A B]` for Hermitian `A`, `B`.
fn trace_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let mut acc = T::zero();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let x = a[(i, j)] * b[(j, i)];
            acc += x.re;
        }
    }
    acc
}

/// Per-point weights: uniform, or the inverse binomial variance of the
/// displaced-parity estimate when shot counts are given.
fn weights<T: Real>(dataset: &WignerDataset<T>) -> Vec<T> {
    let scale = 2.0 / std::f64::consts::PI;
    dataset
        .points
        .iter()
        .map(|p| match p.shots {
            None => T::one(),
            Some(n) => {
                let n = n as f64;
                let pe = ((1.0 + to_f64(p.value) / scale) / 2.0).clamp(1.0 / (n + 2.0), 1.0 - 1.0 / (n + 2.0));
                let var = scale * scale * 4.0 * pe * (1.0 - pe) / n;
                lit(1.0 / var)
            }
        })
        .collect()
}

/// Maximum-likelihood reconstruction with the diluted `RρR` iteration
/// `ρ ← (I + εR̃)ρ(I + εR̃)/tr`, where `R̃` is the likelihood gradient with its
/// `ρ`-weighted trace removed. `ε` grows after accepted steps and is halved
/// until the likelihood does not decrease, so the iteration is monotone.
pub fn mle_reconstruct<T: Real>(
    dataset: &WignerDataset<T>,
    ops: &MeasurementOps<T>,
    opts: &MleOptions,
) -> Result<Reconstruction<T>> {
    dataset.validate()?;
    if ops.ops.len() != dataset.points.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.points.len(),
            found: ops.ops.len(),
        });
    }
    let d = dataset.space_trunc.dim_res();
    if ops.ops[0].nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: ops.ops[0].nrows(),
        });
    }
    let obj = Objective {
        ops: &ops.ops,
        values: dataset.points.iter().map(|p| p.value).collect(),
        weights: weights(dataset),
    };
    let eye = CMatrix::<T>::identity(d, d);
    let mut rho = &eye * cr(T::one() / lit(d as f64));
    let mut f = obj.predictions(&rho);
    let mut ll = obj.log_likelihood(&f);
    let mut history = vec![to_f64(ll)];
    let mut kappa: T = lit(0.5);
    let kappa_min: T = lit(1e-12);
    let kappa_max: T = lit(1e6);
    let tol: T = lit(opts.tol);
    let mut quiet = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let grad = obj.gradient(&f);
        let shift = trace_product(&grad, &rho);
        let rt = &grad - &eye * cr(shift);
        let norm = spectral_norm(&rt);
        let mut gain = T::zero();
        if norm > T::zero() {
            loop {
                let eps = kappa / norm;
                let a = &eye + &rt * cr(eps);
                let mut trial = &a * &rho * &a;
                let tr = trial.trace().re;
                trial *= cr(T::one() / tr);
                let ft = obj.predictions(&trial);
                let lt = obj.log_likelihood(&ft);
                if lt >= ll {
                    gain = lt - ll;
                    rho = (&trial + trial.adjoint()) * cr(lit::<T>(0.5));
                    f = ft;
                    ll = lt;
                    kappa = (kappa * lit(1.5)).min(kappa_max);
                    break;
                }
                kappa *= lit(0.5);
                if kappa < kappa_min {
                    kappa = kappa_min;
                    break;
                }
            }
        }
        history.push(to_f64(ll));
        if gain < tol {
            quiet += 1;
            if quiet >= opts.patience {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }

    let n = f.len() as f64;
    let residual_rms = (f
        .iter()
        .zip(&obj.values)
        .map(|(&fi, &vi)| to_f64((fi - vi) * (fi - vi)))
        .sum::<f64>()
        / n)
        .sqrt();
    let state = QuantumState::mixed(Support::Resonator(dataset.space_trunc), rho)?;
    Ok(Reconstruction {
        state,
        diagnostics: MleDiagnostics {
            iterations,
            converged,
            log_likelihood: to_f64(ll),
            history,
            informationally_complete: ops.informationally_complete,
            span_rank: ops.span_rank,
            residual_rms,
        },
    })
}

/// Conjugation by `exp(iθ a†a)`: rotates phase space by `θ`.
pub fn systematic_phase_correction<T: Real>(rho: &CMatrix<T>, theta: T) -> CMatrix<T> {
    CMatrix::from_fn(rho.nrows(), rho.ncols(), |m, n| {
        let phase = theta * (lit::<T>(m as f64) - lit(n as f64));
        rho[(m, n)] * Cx::new(phase.cos(), phase.sin())
    })
}

/// Wigner samples on a rectangular grid; `values[(iy, ix)]` belongs to
/// `xs[ix] + i·ys[iy]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceGrid<T: Real> {
    pub xs: Vec<T>,
    pub ys: Vec<T>,
    pub values: DMatrix<T>,
}

impl<T: Real> PhaseSpaceGrid<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>, values: DMatrix<T>) -> Result<Self> {
        if values.nrows() != ys.len() || values.ncols() != xs.len() {
            return Err(Error::DimensionMismatch {
                expected: ys.len() * xs.len(),
                found: values.len(),
            });
        }
        Ok(Self { xs, ys, values })
    }

    pub fn from_state(state: &QuantumState<T>, xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        let values = crate::measure::wigner_grid(state, &xs, &ys)?;
        Ok(Self { xs, ys, values })
    }

    /// Relabels the axes by `factor`, as a miscalibrated displacement would.
    pub fn scale_axes(&self, factor: T) -> Self {
        Self {
            xs: self.xs.iter().map(|&x| x * factor).collect(),
            ys: self.ys.iter().map(|&y| y * factor).collect(),
            values: self.values.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPeak<T: Real> {
    pub center: Cx<T>,
    /// Standard deviation σ of `A·exp(−|α − c|²/(2σ²))`.
    pub width: T,
    pub amplitude: T,
    /// Integrated volume `2πσ²A`.
    pub weight: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoubleGaussianFit<T: Real> {
    /// One or two peaks, heaviest first.
    pub peaks: Vec<GaussianPeak<T>>,
    pub residual_rms: T,
    /// Set when the peaks could not be separated and a single Gaussian was fit.
    pub degenerate: bool,
    pub converged: bool,
}

impl<T: Real> DoubleGaussianFit<T> {
    pub fn mean_width(&self) -> T {
        let n: T = lit(self.peaks.len() as f64);
        self.peaks.iter().fold(T::zero(), |a, p| a + p.width) / n
    }
}

fn local_maxima<T: Real>(grid: &PhaseSpaceGrid<T>) -> Vec<(usize, usize)> {
    let (ny, nx) = grid.values.shape();
    let v = &grid.values;
    let mut out = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let c = v[(iy, ix)];
            let mut is_max = true;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (y, x) = (iy as i64 + dy, ix as i64 + dx);
                    if y < 0 || x < 0 || y >= ny as i64 || x >= nx as i64 {
                        continue;
                    }
                    if v[(y as usize, x as usize)] > c {
                        is_max = false;
                    }
                }
            }
            if is_max {
                out.push((iy, ix));
            }
        }
    }
    out.sort_by(|a, b| v[*b].partial_cmp(&v[*a]).unwrap_or(std::cmp::Ordering::Equal));
    out
}

fn fit_gaussians<T: Real>(grid: &PhaseSpaceGrid<T>, init: &[(T, T, T, T)]) -> (Vec<GaussianPeak<T>>, T, bool) {
    let k = init.len();
    let (ny, nx) = grid.values.shape();
    let mut p0 = Vec::with_capacity(4 * k);
    for &(a, x, y, s) in init {
        p0.extend([a, x, y, s]);
    }
    let res = levenberg_marquardt(
        |p: &DVector<T>| {
            let m = nx * ny;
            let mut r = DVector::zeros(m);
            let mut jac = DMatrix::zeros(m, 4 * k);
            for iy in 0..ny {
                for ix in 0..nx {
                    let row = iy * nx + ix;
                    let (x, y) = (grid.xs[ix], grid.ys[iy]);
                    let mut model = T::zero();
                    for g in 0..k {
                        let (a, cx, cy, s) = (p[4 * g], p[4 * g + 1], p[4 * g + 2], p[4 * g + 3]);
                        let (dx, dy) = (x - cx, y - cy);
                        let q = (dx * dx + dy * dy) / (s * s);
                        let e = (-q * lit(0.5)).exp();
                        model += a * e;
                        jac[(row, 4 * g)] = e;
                        jac[(row, 4 * g + 1)] = a * e * dx / (s * s);
                        jac[(row, 4 * g + 2)] = a * e * dy / (s * s);
                        jac[(row, 4 * g + 3)] = a * e * q / s;
                    }
                    r[row] = model - grid.values[(iy, ix)];
                }
            }
            (r, jac)
        },
        |p: &mut DVector<T>| {
            for g in 0..k {
                p[4 * g + 3] = p[4 * g + 3].abs().max(lit(1e-3));
            }
        },
        DVector::from_vec(p0),
        &LmOptions::default(),
    );
    let p = &res.params;
    let mut peaks: Vec<GaussianPeak<T>> = (0..k)
        .map(|g| {
            let (a, s) = (p[4 * g], p[4 * g + 3]);
            GaussianPeak {
                center: Cx::new(p[4 * g + 1], p[4 * g + 2]),
                width: s,
                amplitude: a,
                weight: T::two_pi() * s * s * a,
            }
        })
        .collect();
    peaks.sort_by(|a, b| b.weight.partial_cmp(&a.weight).unwrap_or(std::cmp::Ordering::Equal));
    (peaks, res.rms(), res.converged)
}

/// Two-Gaussian least-squares fit of a Wigner grid, initialized at the two
/// largest well-separated local maxima. Falls back to a single Gaussian
/// (flagged) when there is only one peak or the fitted centres end up closer
/// than one width.
pub fn double_gaussian_fit<T: Real>(grid: &PhaseSpaceGrid<T>) -> Result<DoubleGaussianFit<T>> {
    if grid.xs.len() < 3 || grid.ys.len() < 3 {
        return Err(invalid("grid", "need at least 3×3 samples"));
    }
    let nominal: T = lit(0.5);
    let maxima = local_maxima(grid);
    let at = |(iy, ix): (usize, usize)| (grid.values[(iy, ix)], grid.xs[ix], grid.ys[iy], nominal);
    let first = at(maxima[0]);
    let second = maxima.iter().skip(1).map(|&m| at(m)).find(|c| {
        let (dx, dy) = (c.1 - first.1, c.2 - first.2);
        (dx * dx + dy * dy).sqrt() > nominal && c.0 > first.0 * lit(0.1)
    });
    if let Some(second) = second {
        let (peaks, rms, converged) = fit_gaussians(grid, &[first, second]);
        let sep = (peaks[0].center - peaks[1].center).norm_sqr().sqrt();
        let ok = peaks.iter().all(|p| p.amplitude > T::zero()) && sep >= peaks[0].width.max(peaks[1].width);
        if ok {
            return Ok(DoubleGaussianFit {
                peaks,
                residual_rms: rms,
                degenerate: false,
                converged,
            });
        }
    }
    let (peaks, rms, converged) = fit_gaussians(grid, &[first]);
    Ok(DoubleGaussianFit {
        peaks,
        residual_rms: rms,
        degenerate: true,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{cat_state, coherent_state};

    fn s(n: usize) -> SpaceSpec {
        SpaceSpec::new(n).unwrap()
    }

    #[test]
    fn ops_landmarks() {
        let alphas = vec![Cx::new(0.0, 0.0), Cx::new(1.0, 0.5), Cx::new(-2.0, 0.0), Cx::new(0.3, -1.9)];
        let vac = QuantumState::<f64>::vacuum(s(8));
        let ds = synthesize_dataset(&vac, &alphas, s(30), s(8)).unwrap();
        let ops = build_measurement_ops(&ds).unwrap();
        for (k, i) in (0..9).enumerate() {
            let want = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((ops.ops[0][(i, i)].re - want).abs() < 1e-15);
        }
        for (m, a) in ops.ops.iter().zip(&alphas) {
            assert!((m[(0, 0)].re - (-2.0 * a.norm_sqr()).exp()).abs() < 1e-8);
            assert!((m - m.adjoint()).norm() < 1e-12);
        }
        assert!(!ops.informationally_complete);
        assert_eq!(ops.span_rank, 4);
    }

    #[test]
    fn dataset_guards() {
        let vac = QuantumState::<f64>::vacuum(s(8));
        let far = vec![Cx::new(3.0, 0.0)];
        assert!(synthesize_dataset(&vac, &far, s(20), s(8)).is_err());
        assert!(synthesize_dataset(&vac, &far, s(40), s(41)).is_err());
        let bad = WignerDataset::new(
            vec![WignerPoint {
                alpha: Cx::new(0.0, 0.0),
                value: 0.9,
                shots: None,
            }],
            s(10),
            s(5),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn reconstructs_vacuum() {
        let vac = QuantumState::<f64>::vacuum(s(8));
        let ds = synthesize_dataset(&vac, &square_grid(2.0, 11), s(40), s(8)).unwrap();
        let ops = build_measurement_ops(&ds).unwrap();
        assert!(ops.informationally_complete);
        let rec = mle_reconstruct(&ds, &ops, &MleOptions::default()).unwrap();
        let fid = rec.state.fidelity(&vac).unwrap();
        assert!(fid > 0.999, "{fid}");
        assert!(rec.diagnostics.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn phase_correction_rotates() {
        let sp = s(25);
        let a = Cx::new(1.2, 0.0);
        let rho = coherent_state(a, sp).unwrap().density_matrix();
        assert_eq!(systematic_phase_correction(&rho, 0.0), rho);
        let th = 0.7f64;
        let rot = systematic_phase_correction(&rho, th);
        let want = coherent_state(a * Cx::new(th.cos(), th.sin()), sp).unwrap().density_matrix();
        assert!((rot - want).norm() < 1e-12);
    }

    #[test]
    fn fits_two_coherent_peaks() {
        let sp = s(40);
        let a = 1.8;
        let rho = (coherent_state(Cx::new(a, 0.0), sp).unwrap().density_matrix()
            + coherent_state(Cx::new(-a, 0.0), sp).unwrap().density_matrix())
            * cr(0.5);
        let mix = QuantumState::mixed(Support::Resonator(sp), rho).unwrap();
        let axis = linspace(-4.0, 4.0, 61);
        let grid = PhaseSpaceGrid::from_state(&mix, axis.clone(), axis).unwrap();
        let fit = double_gaussian_fit(&grid).unwrap();
        assert!(!fit.degenerate);
        let mut xs: Vec<f64> = fit.peaks.iter().map(|p| p.center.re).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((xs[0] + a).abs() < 0.02 && (xs[1] - a).abs() < 0.02, "{xs:?}");
        for p in &fit.peaks {
            assert!((p.width - 0.5).abs() < 0.02);
            assert!(p.center.im.abs() < 0.02);
        }
        let scaled = double_gaussian_fit(&grid.scale_axes(1.05)).unwrap();
        assert!((scaled.mean_width() - 0.525).abs() < 1e-3);
    }

    #[test]
    fn vacuum_fit_is_degenerate() {
        let vac = QuantumState::<f64>::vacuum(s(10));
        let axis = linspace(-3.0, 3.0, 41);
        let grid = PhaseSpaceGrid::from_state(&vac, axis.clone(), axis).unwrap();
        let fit = double_gaussian_fit(&grid).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.peaks.len(), 1);
        assert!((fit.peaks[0].width - 0.5).abs() < 1e-6);
        // cat interference does not stop the fit from returning
        let cat = cat_state(Cx::new(1.5, 0.0), -1.0, s(30)).unwrap();
        let axis = linspace(-3.5, 3.5, 41);
        let grid = PhaseSpaceGrid::from_state(&cat, axis.clone(), axis).unwrap();
        assert!(double_gaussian_fit(&grid).is_ok());
    }
}
