//! Sweep drivers, one per experiment. Columns run on the rayon pool the
//! caller installs; assembly is sequential and ordered, so output does not
//! depend on the worker count.

use rabisim::chevron::{assemble, chevron_column, find_compensation_phase, ChevronObservable, ChevronSpec};
use rabisim::dynamics::{evolve_rabi, evolve_unitary_many, visit_trotter_lindblad, LindbladOptions, TrotterDecay};
use rabisim::hilbert::{QuantumState, QubitBasis, SpaceSpec, StateData, Support};
use rabisim::measure::{
    conditional_resonator, invert_meter, mean_photon, photon_parity, qubit_entropy, qubit_parity,
    ramsey_meter_response, sample_probability, wigner_grid, wigner_point, MeterMode, PhotonMeterSpec,
};
use rabisim::models::{build_rabi, RabiParams};
use rabisim::predistort::{
    compose_kernels, corrected_step, flatness, invert_kernel, parametric_kernel, settle_index, KernelTrace,
};
use rabisim::trotter::{to_effective_frame, TrotterOrder, TrotterPlan, TrotterPropagator};
use rabisim::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map};

use crate::config::{ConditionBasis, Experiment, ExperimentConfig, SweepPoint};
use crate::output::{Axis, Grid, Output};
use crate::CliError;

type Res<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug)]
enum Obs {
    PhotonParity,
    QubitParity,
    MeanPhoton,
    Entropy,
    Meter(PhotonMeterSpec<f64>),
}

fn eval(o: Obs, s: &QuantumState<f64>) -> rabisim::Result<f64> {
    match o {
        Obs::PhotonParity => photon_parity(s),
        Obs::QubitParity => qubit_parity(s),
        Obs::MeanPhoton => mean_photon(s),
        Obs::Entropy => qubit_entropy(s),
        Obs::Meter(spec) => ramsey_meter_response(s, &spec),
    }
}

fn order_of(cfg: &ExperimentConfig) -> Res<TrotterOrder> {
    Ok(TrotterOrder::from_int(cfg.plan.order.unwrap_or(2))?)
}

fn plan_for(cfg: &ExperimentConfig, omega_r: f64, omega_q: f64, tau: f64, n_steps: usize, order: TrotterOrder) -> Res<TrotterPlan<f64>> {
    let g = cfg.physics.g.unwrap_or(0.0);
    Ok(TrotterPlan::for_rabi(g, omega_r, omega_q, tau, n_steps, order)?
        .with_merging(cfg.plan.merge_half_steps.unwrap_or(true)))
}

/// Runs a plan from `|initial, 0⟩`, calling `visit(n, state)` after each step.
/// Pure states when there is no decay, Lindblad evolution otherwise.
fn run_plan(
    cfg: &ExperimentConfig,
    plan: &TrotterPlan<f64>,
    space: SpaceSpec,
    initial: QubitBasis,
    mut visit: impl FnMut(usize, &QuantumState<f64>) -> rabisim::Result<()>,
) -> Res<()> {
    let psi0 = QuantumState::joint_basis(initial, 0, space)?;
    let mut err: Option<rabisim::Error> = None;
    match cfg.physics.t1_res {
        None => {
            let StateData::Pure(v) = psi0.data() else {
                unreachable!("basis states are pure")
            };
            let support = Support::Joint(space);
            let prop = TrotterPropagator::new(*plan, space)?;
            prop.run_pure(v, |n, psi| {
                if err.is_none() {
                    if let Err(e) = QuantumState::pure(support, psi.clone()).and_then(|s| visit(n, &s)) {
                        err = Some(e);
                    }
                }
            });
        }
        Some(t1) => {
            let decay = TrotterDecay::new(t1).with_idle(cfg.physics.idle_per_step.unwrap_or(0.0));
            visit_trotter_lindblad(plan, &psi0, space, &decay, |n, s| {
                if err.is_none() {
                    if let Err(e) = visit(n, s) {
                        err = Some(e);
                    }
                }
            })?;
        }
    }
    match err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// Observable traces (`[obs][step]`) for one sweep column.
fn trace_column(
    cfg: &ExperimentConfig,
    omega_r: f64,
    omega_q: f64,
    order: TrotterOrder,
    initial: QubitBasis,
    obs: &[Obs],
) -> Res<Vec<Vec<f64>>> {
    let tau = cfg.plan.tau.unwrap_or(0.0);
    let n_steps = cfg.plan.n_steps.unwrap_or(0);
    let plan = plan_for(cfg, omega_r, omega_q, tau, n_steps, order)?;
    let space = cfg.space_for(omega_r, tau);
    let mut out = vec![Vec::with_capacity(n_steps + 1); obs.len()];
    run_plan(cfg, &plan, space, initial, |_, s| {
        for (k, o) in obs.iter().enumerate() {
            out[k].push(eval(*o, s)?);
        }
        Ok(())
    })?;
    Ok(out)
}

/// All sweep columns in parallel: `[column][obs][step]`.
fn sweep(
    cfg: &ExperimentConfig,
    points: &[SweepPoint],
    omega_q: f64,
    order: TrotterOrder,
    initial: QubitBasis,
    obs: &[Obs],
) -> Res<Vec<Vec<Vec<f64>>>> {
    points
        .par_iter()
        .map(|p| trace_column(cfg, p.omega_r, omega_q, order, initial, obs))
        .collect()
}

fn times(cfg: &ExperimentConfig) -> Vec<f64> {
    let tau = cfg.plan.tau.unwrap_or(0.0);
    (0..=cfg.plan.n_steps.unwrap_or(0)).map(|n| n as f64 * tau).collect()
}

fn sweep_grid(
    cfg: &ExperimentConfig,
    name: &str,
    quantity: Axis,
    columns: Vec<Vec<f64>>,
    provenance: String,
) -> Grid {
    let points = cfg.sweep_points();
    let (axis, unit) = cfg.sweep_axis();
    let g = cfg.physics.g.unwrap_or(0.0);
    let labels: Vec<f64> = points.iter().map(|p| p.label).collect();
    let tau = cfg.plan.tau.unwrap_or(0.0);
    Grid::from_columns(name, quantity, Axis::new("time", "us"), times(cfg), Axis::new(axis, unit), &labels, &columns)
        .with_provenance(provenance)
        .with_extra("omega_r_mhz", points.iter().map(|p| p.omega_r).collect::<Vec<_>>())
        .with_extra("omega_r_over_g", points.iter().map(|p| p.omega_r / g).collect::<Vec<_>>())
        // r → ∞ columns serialize as null
        .with_extra("r", points.iter().map(|p| finite(g / p.omega_r)).collect::<Vec<_>>())
        .with_extra("n_max", points.iter().map(|p| cfg.space_for(p.omega_r, tau).n_max()).collect::<Vec<_>>())
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn describe(cfg: &ExperimentConfig, order: TrotterOrder) -> String {
    let decay = match cfg.physics.t1_res {
        Some(t1) => format!(", resonator T1 = {t1} us"),
        None => String::new(),
    };
    format!(
        "Trotterized Rabi simulation, order {}, g = {} MHz, tau = {} us, {} steps{decay}",
        order.as_int(),
        cfg.physics.g.unwrap_or(0.0),
        cfg.plan.tau.unwrap_or(0.0),
        cfg.plan.n_steps.unwrap_or(0)
    )
}

/// Splits `[column][obs][step]` into per-observable column lists.
fn by_observable(data: Vec<Vec<Vec<f64>>>, n_obs: usize) -> Vec<Vec<Vec<f64>>> {
    let mut out = vec![Vec::with_capacity(data.len()); n_obs];
    for col in data {
        for (k, trace) in col.into_iter().enumerate() {
            out[k].push(trace);
        }
    }
    out
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Res<Vec<Output>> {
    match cfg.experiment {
        Experiment::ParityChevron => parity_chevron(cfg),
        Experiment::PhotonChevron => photon_chevron(cfg),
        Experiment::WignerMovie => wigner_movie(cfg),
        Experiment::CatConditional => cat_conditional(cfg),
        Experiment::Nondegenerate => nondegenerate(cfg),
        Experiment::TrotterCompare => trotter_compare(cfg),
        Experiment::StepsizeCompare => stepsize_compare(cfg),
        Experiment::EntropyChevron => entropy_chevron(cfg),
        Experiment::JcChevron => jc_chevron(cfg),
        Experiment::PredistortDemo => predistort_demo(cfg),
        Experiment::InitCompare => init_compare(cfg),
    }
}

fn omega_q(cfg: &ExperimentConfig) -> f64 {
    cfg.physics.omega_q.unwrap_or(0.0)
}

fn parity_chevron(cfg: &ExperimentConfig) -> Res<Vec<Output>> {
    let order = order_of(cfg)?;
    let obs = [Obs::PhotonParity, Obs::QubitParity];
    let data = by_observable(sweep(cfg, &cfg.sweep_points(), omega_q(cfg), order, QubitBasis::Excited, &obs)?, 2);
    let mut it = data.into_iter();
    Ok(vec![
        Output::Grid(sweep_grid(cfg, "photon_parity", Axis::new("photon_parity", "normalized"), it.next().unwrap_or_default(), describe(cfg, order))),
        Output::Grid(sweep_grid(cfg, "qubit_parity", Axis::new("qubit_parity", "normalized"), it.next().unwrap_or_default(), describe(cfg, order))),
    ])
}

fn entropy_chevron(cfg: &ExperimentConfig) -> Res<Vec<Output>> {
    let order = order_of(cfg)?;
    let data = by_observable(
        sweep(cfg, &cfg.sweep_points(), omega_q(cfg), order, QubitBasis::Excited, &[Obs::Entropy])?,
        1,
    );
    Ok(vec![Output::Grid(sweep_grid(
        cfg,
        "qubit_entropy",
        Axis::new("qubit_entropy", "bits"),
        data.into_iter().next().unwrap_or_default(),
        describe(cfg, order),
    ))])
}

fn trotter_compare(cfg: &ExperimentConfig) -> Res<Vec<Output>> {
    let obs = [Obs::PhotonParity, Obs::QubitParity];
    let mut out = Vec::new();
    for order in [TrotterOrder::First, TrotterOrder::Second] {
        let data = by_observable(sweep(cfg, &cfg.sweep_points(), omega_q(cfg), order, QubitBasis::Excited, &obs)?, 2);
        let mut it = data.into_iter();
        let k = order.as_int();
        out.push(Output::Grid(sweep_grid(
            cfg,
            &format!("photon_parity_order{k}"),
            Axis::new("photon_parity", "normalized"),
            it.next().unwrap_or_default(),
            describe(cfg, order),
        )));
        out.push(Output::Grid(sweep_grid(
            cfg,
            &format!("qubit_parity_order{k}"),
            Axis::new("qubit_parity", "normalized"),
            it.next().unwrap_or_default(),
            describe(cfg, order),
        )));
    }
    Ok(out)
}

/// Photon parity under exact evolution from `|0,0⟩` and `|1,0⟩`: `[initial][step]`.
fn exact_parity_pair(cfg: &ExperimentConfig, omega_r: f64, omega_q: f64) -> Res<[Vec<f64>; 2]> {
    let space = cfg.space_for(omega_r, cfg.plan.tau.unwrap_or(0.0));
    let mut params = RabiParams::new(cfg.physics.g.unwrap_or(0.0), omega_r, omega_q)?;
    let starts = [
        QuantumState::joint_basis(QubitBasis::Ground, 0, space)?,
        QuantumState::joint_basis(QubitBasis::Excited, 0, space)?,
    ];
    let ts = times(cfg);
    let trajs = match cfg.physics.t1_res {
        None => evolve_unitary_many(&build_rabi(&params, space), &starts, &ts)?,
        Some(t1) => {
            params = params.with_t1_res(t1)?;
            starts
                .iter()
                .map(|s| evolve_rabi(&params, s, &ts, space, &LindbladOptions::default()))
                .collect::<rabisim::Result<_>>()?
        }
    };
    let parity = |k: usize| trajs[k].states.iter().map(photon_parity).collect::<rabisim::Result<Vec<f64>>>();
    Ok([parity(0)?, parity(1)?])
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn init_compare(cfg: &ExperimentConfig) -> Res<Vec<Output>> {
    let order = order_of(cfg)?;
    let points = cfg.sweep_points();
    let wq = omega_q(cfg);
    let mut trotter = Vec::new();
    for initial in [QubitBasis::Ground, QubitBasis::Excited] {
        let data = by_observable(sweep(cfg, &points, wq, order, initial, &[Obs::PhotonParity])?, 1);
        trotter.push(data.into_iter().next().unwrap_or_default());
    }
    let pairs: Vec<[Vec<f64>; 2]> = points
        .par_iter()
        .map(|p| exact_parity_pair(cfg, p.omega_r, wq))
        .collect::<Res<_>>()?;
    let exact: Vec<Vec<Vec<f64>>> = (0..2).map(|k| pairs.iter().map(|p| p[k].clone()).collect()).collect();
    let trotter_diff = max_diff(&trotter[0], &trotter[1]);
    let exact_diff = max_diff(&exact[0], &exact[1]);
    let mut out = Vec::new();
    for (k, name) in ["ground", "excited"].iter().enumerate() {
        out.push(Output::Grid(
            sweep_grid(
                cfg,
                &format!("photon_parity_from_{name}"),
                Axis::new("photon_parity", "normalized"),
                trotter[k].clone(),
                format!("{}, qubit initialized in |{name}>", describe(cfg, order)),
            )
            .with_extra("max_abs_difference", trotter_diff),
        ));
        out.push(Output::Grid(
            sweep_grid(
                cfg,
                &format!("exact_photon_parity_from_{name}"),
                Axis::new("photon_parity", "normalized"),
                exact[k].clone(),
                format!("exact Rabi evolution, qubit initialized in |{name}>"),
            )
            .with_extra("max_abs_difference", exact_diff),
        ));
    }
    Ok(out)
}

fn photon_chevron(cfg: &ExperimentConfig) -> Res<Vec<Output>> {
    let order = order_of(cfg)?;
    let spec = cfg.meter_spec()?;
    let points = cfg.sweep_points();
    let obs = [Obs::MeanPhoton, Obs::Meter(spec)];
    let data = by_observable(sweep(cfg, &points, omega_q(cfg), order, QubitBasis::Excited, &obs)?, 2);
    let mut it = data.into_iter();
    let mean = it.next().unwrap_or_default();
    let mut prob = it.next().unwrap_or_default();
    if let Some(shots) = cfg.meter.shots {
        // one stream per column keeps sampling independent of the worker count
        prob = prob
            .par_iter()
            .enumerate()
            .map(|(c, col)| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(c as u64);
                col.iter()
                    .map(|&p| sample_probability(p, shots, &mut rng))
                    .collect::<rabisim::Result<Vec<f64>>>()
            })
            .collect::<rabisim::Result<_>>()?;
    }
    let base = describe(cfg, order);
    let meter = format!(
        "{base}; photon meter tau_eff = {} us, 2chi = {} MHz, d = {}, shots = {}",
        spec.tau_eff,
        spec.chi2,
        spec.d,
        cfg.meter.shots.map_or("exact".to_string(), |s| s.to_string())
    );
    let mut out = vec![
        Output::Grid(sweep_grid(cfg, "mean_photon", Axis::new("mean_photon", "photons"), mean, base)),
        Output::Grid(sweep_grid(cfg, "meter_probability", Axis::new("meter_probability", "1"), prob.clone(), meter.clone())),
    ];
    if spec.mode == MeterMode::Ramsey {
        let est: Vec<Vec<f64>> = prob
            .iter()
            .map(|col| col.iter().map(|&p| invert_meter(p, &spec)).collect::<rabisim::Result<_>>())
            .collect::<rabisim::Result<_>>()?;
        let (lo, hi) = spec.linear_window();
        out.push(Output::Grid(
            sweep_grid(cfg, "meter_photon_estimate", Axis::new("mean_photon_estimate", "photons"), est, meter)
                .with_extra("linear_window", [lo, hi]),
        ));
    }
    Ok(out)
}

fn nondegenerate(cfg: &ExperimentConfig) -> Res<Vec<Output>> {
    let order = order_of(cfg)?;
    let points = cfg.sweep_points();
    let g = cfg.physics.g.unwrap_or(0.0);
    let ts = times(cfg);
    let mut out = Vec::new();
    for (k, &wq) in cfg.sweep.qubit_detunings.clone().unwrap_or_default().iter().enumerate() {
        let trotter = by_observable(sweep(cfg, &points, wq, order, QubitBasis::Excited, &[Obs::QubitParity])?, 1);
        let ideal: Vec<Vec<f64>> = points
            .par_iter()
            .map(|p| {
                let params = RabiParams::new(g, p.omega_r, wq)?.with_kerr(cfg.physics.kerr.unwrap_or(0.0));
                let space = cfg.space_for(p.omega_r, cfg.plan.tau.unwrap_or(0.0));
                let psi0 = QuantumState::joint_basis(QubitBasis::Excited, 0, space)?;
                let traj = evolve_rabi(&params, &psi0, &ts, space, &LindbladOptions::default())?;
                traj.states.iter().map(qubit_parity).collect::<rabisim::Result<Vec<f64>>>()
            })
            .collect::<rabisim::Result<_>>()?;
        let tag = format!("omega_q = {wq} MHz (g/omega_q = {})", g / wq);
        out.push(Output::Grid(
            sweep_grid(
                cfg,
                &format!("qubit_parity_trotter_wq{k}"),
                Axis::new("qubit_parity", "normalized"),
                trotter.into_iter().next().unwrap_or_default(),
                format!("{}, {tag}", describe(cfg, order)),
            )
            .with_extra("omega_q_mhz", wq),
        ));
        out.push(Output::Grid(
            sweep_grid(
                cfg,
                &format!("qubit_parity_ideal_wq{k}"),
                Axis::new("qubit_parity", "normalized"),
                ideal,
                format!("exact unitary Rabi evolution, {tag}"),
            )
            .with_extra("omega_q_mhz", wq),
        ));
    }
    Ok(out)
}

/// Joint populations `|ψ_i|²` or `ρ_ii`.
fn populations(s: &QuantumState<f64>) -> Vec<f64> {
    match s.data() {
        StateData::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
        StateData::Mixed(m) => m.diagonal().iter().map(|z| z.re).collect(),
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Trotter vs exact at the end of `round(duration/τ)` steps: L1 distance of
/// joint populations and the photon-parity traces of both.
pub struct StepStudy {
    pub error: f64,
    pub times: Vec<f64>,
    pub trotter_parity: Vec<f64>,
    pub exact_parity: Vec<f64>,
}

pub fn step_study(
    cfg: &ExperimentConfig,
    omega_r: f64,
    tau: f64,
    order: TrotterOrder,
) -> Res<StepStudy> {
    let duration = cfg.sweep.duration.unwrap_or(0.0);
    let n_steps = ((duration / tau).round() as usize).max(1);
    let wq = omega_q(cfg);
    let plan = plan_for(cfg, omega_r, wq, tau, n_steps, order)?;
    let space = cfg.space_for(omega_r, tau);
    let mut trotter_parity = Vec::with_capacity(n_steps + 1);
    let mut last = None;
    run_plan(cfg, &plan, space, QubitBasis::Excited, |n, s| {
        trotter_parity.push(photon_parity(s)?);
        if n == n_steps {
            last = Some(populations(s));
        }
        Ok(())
    })?;
    let times: Vec<f64> = (0..=n_steps).map(|n| n as f64 * tau).collect();
    let g = cfg.physics.g.unwrap_or(0.0);
    let mut params = RabiParams::new(g, omega_r, wq)?;
    if let Some(t1) = cfg.physics.t1_res {
        params = params.with_t1_res(t1)?;
    }
    let psi0 = QuantumState::joint_basis(QubitBasis::Excited, 0, space)?;
    let traj = evolve_rabi(&params, &psi0, &times, space, &LindbladOptions::default())?;
    let exact_parity = traj.states.iter().map(photon_parity).collect::<rabisim::Result<Vec<_>>>()?;
    let exact = populations(traj.final_state().expect("non-empty trajectory"));
    let trot = last.expect("final step visited");
    let error = exact.iter().zip(&trot).map(|(a, b)| (a - b).abs()).sum();
    Ok(StepStudy {
        error,
        times,
        trotter_parity,
        exact_parity,
    })
}

fn stepsize_compare(cfg: &ExperimentConfig) -> Res<Vec<Output>> {
    let taus = cfg.sweep.tau_values.clone().unwrap_or_default();
    let orders = [TrotterOrder::First, TrotterOrder::Second];
    let mut out = Vec::new();
    for (i, p) in cfg.sweep_points().iter().enumerate() {
        let jobs: Vec<(f64, TrotterOrder)> = taus.iter().flat_map(|&t| orders.map(|o| (t, o))).collect();
        let studies: Vec<StepStudy> = jobs
            .par_iter()
            .map(|&(t, o)| step_study(cfg, p.omega_r, t, o))
            .collect::<Res<_>>()?;
        let errors: Vec<Vec<f64>> = (0..2).map(|k| (0..taus.len()).map(|j| studies[2 * j + k].error).collect()).collect();
        let slopes: Vec<f64> = errors.iter().map(|e| loglog_slope(&taus, e)).collect();
        let (axis, _) = cfg.sweep_axis();
        let provenance = format!(
            "Trotter vs exact evolution at {axis} = {}, simulated time {} us; error is the L1 distance of joint populations",
            p.label,
            cfg.sweep.duration.unwrap_or(0.0)
        );
        let mut grid = Grid::from_labeled_columns(
            &format!("population_error_{i}"),
            Axis::new("population_l1_error", "1"),
            Axis::new("tau", "us"),
            taus.clone(),
            Axis::new("order", "1"),
            vec!["order1".into(), "order2".into()],
            &errors,
        )
        .with_provenance(provenance.clone())
        .with_extra("loglog_slope", json!({"order1": slopes[0], "order2": slopes[1]}));
        grid = grid.with_extra(axis, p.label);
        out.push(Output::Grid(grid));
        for (j, &tau) in taus.iter().enumerate() {
            let (a, b) = (&studies[2 * j], &studies[2 * j + 1]);
            out.push(Output::Grid(
                Grid::from_labeled_columns(
                    &format!("photon_parity_{i}_tau{j}"),
                    Axis::new("photon_parity", "normalized"),
                    Axis::new("time", "us"),
                    a.times.clone(),
                    Axis::new("trace", ""),
                    vec!["order1".into(), "order2".into(), "exact".into()],
                    &[a.trotter_parity.clone(), b.trotter_parity.clone(), a.exact_parity.clone()],
                )
                .with_provenance(provenance.clone())
                .with_extra("tau_us", tau),
            ));
        }
    }
    Ok(out)
}

fn axis_values(extent: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| -extent + 2.0 * extent * k as f64 / (points - 1) as f64)
        .collect()
}

fn wigner_frame(name: &str, state: &QuantumState<f64>, xs: &[f64], provenance: &str) -> Res<Grid> {
    let w = wigner_grid(state, xs, xs)?;
    let cols: Vec<Vec<f64>> = (0..xs.len()).map(|ix| w.column(ix).iter().copied().collect()).collect();
    Ok(Grid::from_columns(
        name,
        Axis::new("wigner", "1"),
        Axis::new("im_alpha", "1"),
        xs.to_vec(),
        Axis::new("re_alpha", "1"),
        xs,
        &cols,
    )
    .with_provenance(provenance))
}

/// Joint states after each requested step, in the effective-Hamiltonian frame.
fn frame_states(
    cfg: &ExperimentConfig,
    p: &SweepPoint,
    initial: QubitBasis,
    keep: &[usize],
) -> Res<Vec<(usize, QuantumState<f64>)>> {
    let order = order_of(cfg)?;
    let tau = cfg.plan.tau.unwrap_or(0.0);
    let plan = plan_for(cfg, p.omega_r, omega_q(cfg), tau, cfg.plan.n_steps.unwrap_or(0), order)?;
    let space = cfg.space_for(p.omega_r, tau);
    let mut out = Vec::new();
    run_plan(cfg, &plan, space, initial, |n, s| {
        if keep.contains(&n) {
            out.push((n, to_effective_frame(s, &plan, plan.time_of_step(n))?));
        }
        Ok(())
    })?;
    Ok(out)
}

fn wigner_movie(cfg: &ExperimentConfig) -> Res<Vec<Output>> {
    let w = &cfg.wigner;
    let xs = axis_values(w.extent.unwrap_or(3.5), w.points.unwrap_or(41));
    let initial = w.initial.unwrap_or(QubitBasis::Excited);
    let frames = w.frames.clone().unwrap_or_default();
    let order = order_of(cfg)?;
    let tau = cfg.plan.tau.unwrap_or(0.0);
    let mut out = Vec::new();
    let (axis, _) = cfg.sweep_axis();
    for (i, p) in cfg.sweep_points().iter().enumerate() {
        let states = frame_states(cfg, p, initial, &frames)?;
        let provenance = format!("{}, qubit initialized in {initial:?}, {axis} = {}", describe(cfg, order), p.label);
        let grids: Vec<Grid> = states
            .par_iter()
            .map(|(n, s)| {
                Ok(wigner_frame(&format!("frame_{n:04}"), s, &xs, &provenance)?
                    .with_extra("step", *n)
                    .with_extra("time_us", *n as f64 * tau)
                    .with_extra("mean_photon", mean_photon(s)?)
                    .with_extra("photon_parity", photon_parity(s)?))
            })
            .collect::<Res<_>>()?;
        let mut index = Map::new();
        index.insert(axis.into(), p.label.into());
        index.insert("omega_r_mhz".into(), p.omega_r.into());
        index.insert("n_max".into(), cfg.space_for(p.omega_r, tau).n_max().into());
        out.push(Output::Frames {
            name: format!("wigner_{i}"),
            frames: grids,
            index_extra: index,
        });
    }
    Ok(out)
}

fn cat_conditional(cfg: &ExperimentConfig) -> Res<Vec<Output>> {
    let w = &cfg.wigner;
    let xs = axis_values(w.extent.unwrap_or(3.5), w.points.unwrap_or(41));
    let n_steps = cfg.plan.n_steps.unwrap_or(0);
    let outcomes = match w.basis.unwrap_or(ConditionBasis::Z) {
        ConditionBasis::Z => [QubitBasis::Ground, QubitBasis::Excited],
        ConditionBasis::X => [QubitBasis::Plus, QubitBasis::Minus],
    };
    let order = order_of(cfg)?;
    let (axis, _) = cfg.sweep_axis();
    let initial = w.initial.unwrap_or(QubitBasis::Excited);
    let mut out = Vec::new();
    for (i, p) in cfg.sweep_points().iter().enumerate() {
        let (_, state) = frame_states(cfg, p, initial, &[n_steps])?
            .pop()
            .expect("final step requested");
        let base = format!("{}, {axis} = {}", describe(cfg, order), p.label);
        out.push(Output::Grid(
            wigner_frame(&format!("wigner_{i}_unconditioned"), &state, &xs, &base)?.with_extra(axis, p.label),
        ));
        let space = state.support().space().expect("joint state");
        for (k, basis) in outcomes.iter().enumerate() {
            let name = format!("wigner_{i}_outcome{k}");
            match conditional_resonator(&state, *basis) {
                Ok((rho, prob)) => {
                    let res = QuantumState::mixed(Support::Resonator(space), rho)?;
                    let w0 = wigner_point(&res, Complex64::new(0.0, 0.0))?;
                    out.push(Output::Grid(
                        wigner_frame(&name, &res, &xs, &format!("{base}, conditioned on qubit {basis:?}"))?
                            .with_extra(axis, p.label)
                            .with_extra("outcome", k)
                            .with_extra("probability", prob)
                            .with_extra("wigner_origin", w0),
                    ));
                }
                Err(rabisim::Error::ImprobableOutcome(prob)) => out.push(Output::Json {
                    name,
                    value: json!({"outcome": k, "probability": prob, "note": "outcome too improbable to condition on"}),
                }),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(out)
}

fn chevron_grid(spec: &ChevronSpec<f64>, name: &str, provenance: String) -> Res<(Grid, Vec<f64>)> {
    let cols: Vec<Vec<f64>> = spec
        .detunings
        .par_iter()
        .map(|&d| chevron_column(spec, d, ChevronObservable::QubitExcitation))
        .collect::<rabisim::Result<_>>()?;
    let grid = assemble(spec, &cols);
    let res = grid.resonances(0.05);
    let g = Grid::from_columns(
        name,
        Axis::new("qubit_excitation", "probability"),
        Axis::new("duration", "us"),
        spec.durations.clone(),
        Axis::new("detuning", "MHz"),
        &spec.detunings,
        &cols,
    )
    .with_provenance(provenance)
    .with_extra("resonances_mhz", &res);
    Ok((g, res))
}

fn jc_chevron(cfg: &ExperimentConfig) -> Res<Vec<Output>> {
    let digital = cfg.chevron_spec()?;
    let analog = ChevronSpec::analog(digital.g, digital.detunings.clone(), digital.durations.clone())?;
    let mut out = Vec::new();
    let (g, _) = chevron_grid(&analog, "analog", format!("analog JC chevron, g = {} MHz", digital.g))?;
    out.push(Output::Grid(g));
    let desc = |s: &ChevronSpec<f64>| {
        format!(
            "digital JC chevron, g = {} MHz, pulse {} us, off-window phase {} rad",
            s.g, s.pulse_len, s.off_phase
        )
    };
    let (g, _) = chevron_grid(&digital, "digital", desc(&digital))?;
    out.push(Output::Grid(g));
    if cfg.chevron.compensate.unwrap_or(false) {
        let c = find_compensation_phase(&digital, cfg.chevron.sweep_points.unwrap_or(720))?;
        let fixed = digital.with_off_phase(digital.off_phase + c);
        let (g, _) = chevron_grid(&fixed, "digital_compensated", desc(&fixed))?;
        out.push(Output::Grid(g.with_extra("compensation_phase_rad", c)));
    }
    Ok(out)
}

fn predistort_demo(cfg: &ExperimentConfig) -> Res<Vec<Output>> {
    let p = &cfg.predistort;
    let forms = p.forms.clone().unwrap_or_default();
    let dt = p.dt.unwrap_or(1.0);
    let n = p.n.unwrap_or(2);
    let parts: Vec<KernelTrace<f64>> = forms
        .iter()
        .map(|f| parametric_kernel(f, dt, n))
        .collect::<rabisim::Result<_>>()?;
    let mut labels = Vec::new();
    let mut cols = Vec::new();
    let mut summary = Vec::new();
    let mut add = |tag: String, sys: &KernelTrace<f64>, settle: usize| -> Res<(KernelTrace<f64>, f64)> {
        let kernel = invert_kernel(&sys.to_step(), n)?;
        let corrected = corrected_step(sys, &kernel);
        let flat = flatness(&corrected, settle);
        labels.extend([format!("system_{tag}"), format!("kernel_{tag}"), format!("corrected_{tag}")]);
        cols.extend([sys.to_step().samples, kernel.samples.clone(), corrected]);
        Ok((kernel, flat))
    };
    for (i, (f, sys)) in forms.iter().zip(&parts).enumerate() {
        let settle = f.time_constant().map_or(0, |tau| settle_index(dt, tau, 5.0).min(n / 2));
        let (kernel, flat) = add(i.to_string(), sys, settle)?;
        let analytic = (0..n)
            .filter_map(|k| f.analytic_inverse_step(k as f64 * dt).map(|a| (a - kernel.samples[k]).abs()))
            .reduce(f64::max);
        summary.push(json!({
            "form": f,
            "flatness": flat,
            "settle_index": settle,
            "kernel_vs_analytic_max_dev": analytic,
        }));
    }
    let total = compose_kernels(&parts)?;
    let (_, flat) = add("total".into(), &total, 0)?;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let grid = Grid::from_labeled_columns(
        "step_responses",
        Axis::new("step_response", "1"),
        Axis::new("t", "ns"),
        times,
        Axis::new("trace", ""),
        labels,
        &cols,
    )
    .with_provenance("synthetic flux-line distortions, numerically inverted predistortion kernels")
    .with_extra("forms", summary)
    .with_extra("cascade_flatness", flat);
    Ok(vec![Output::Grid(grid)])
}
