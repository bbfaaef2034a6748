//! Iteration drivers for every algorithm, with a shared stopping rule.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::als::{als_line_search_step, als_step, LineSearchHistory};
use crate::cp::relative_error;
use crate::error::{CpError, Result};
use crate::flm::{flm_work, update_with, mu_init, nielsen_update, BVariant, LmState};
use crate::gram::GramCache;
use crate::hessian::{check_oracle_size, dense_damped_solve, dense_gradient, kernel_check, PhiVariant};
use crate::init::{random_init, svd_init};
use crate::kruskal::KruskalModel;
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

/// Damping values above this stop the run.
pub const MU_MAX: f64 = 1e30;
/// Consecutive small error changes needed to declare convergence.
pub const STALL_WINDOW: usize = 10;
/// Below this `|Δ^H (g + μΔ)|` the gain ratio is undefined and the step is rejected.
pub const RHO_DENOMINATOR_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Als,
    AlsLs,
    DgnOracle,
    FlmA,
    FlmB,
    Auto,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] =
        [Algorithm::Als, Algorithm::AlsLs, Algorithm::DgnOracle, Algorithm::FlmA, Algorithm::FlmB, Algorithm::Auto];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Als => "als",
            Algorithm::AlsLs => "als-ls",
            Algorithm::DgnOracle => "dgn-oracle",
            Algorithm::FlmA => "flm-a",
            Algorithm::FlmB => "flm-b",
            Algorithm::Auto => "auto",
        }
    }

    /// Levenberg-Marquardt family (damped, with accept/reject).
    pub fn is_damped(self) -> bool {
        !matches!(self, Algorithm::Als | Algorithm::AlsLs)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = CpError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| CpError::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    Svd,
    Random,
}

impl FromStr for InitMethod {
    type Err = CpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svd" => Ok(InitMethod::Svd),
            "random" => Ok(InitMethod::Random),
            _ => Err(CpError::InvalidArgument(format!("unknown init '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub algorithm: Algorithm,
    pub rank: usize,
    pub tau: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub init: InitMethod,
}

impl FitConfig {
    pub fn new(algorithm: Algorithm, rank: usize) -> Self {
        Self { algorithm, rank, tau: 1e-3, tol: 1e-8, max_iters: 1000, seed: 0, init: InitMethod::Svd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    Tol,
    MaxIters,
    MuOverflow,
    Error,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Tol => "tol",
            StopReason::MaxIters => "max_iters",
            StopReason::MuOverflow => "mu_overflow",
            StopReason::Error => "error",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One iteration: error of the current model after the accept/reject decision.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub rel_error: f64,
    /// Damping used for this iteration's step (damped algorithms only).
    pub mu: Option<f64>,
    pub accepted: bool,
    pub path: Option<PhiVariant>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    pub initial_error: f64,
    pub entries: Vec<TraceEntry>,
    pub stop_reason: StopReason,
    /// Iterations where flm-b met a singular kernel and used `Φ1` instead.
    pub kernel_fallbacks: usize,
}

impl FitTrace {
    pub fn iterations(&self) -> usize {
        self.entries.len()
    }

    pub fn accepted_iterations(&self) -> usize {
        self.entries.iter().filter(|e| e.accepted).count()
    }

    pub fn final_error(&self) -> f64 {
        self.entries.last().map_or(self.initial_error, |e| e.rel_error)
    }

    /// First iteration whose error is below `threshold`.
    pub fn iterations_to(&self, threshold: f64) -> Option<usize> {
        if self.initial_error < threshold {
            return Some(0);
        }
        self.entries.iter().find(|e| e.rel_error < threshold).map(|e| e.iter)
    }

    /// Errors after each accepted iteration, preceded by the initial error.
    pub fn accepted_errors(&self) -> Vec<f64> {
        std::iter::once(self.initial_error)
            .chain(self.entries.iter().filter(|e| e.accepted).map(|e| e.rel_error))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FitResult<T: Scalar> {
    pub model: KruskalModel<T>,
    pub trace: FitTrace,
}

/// Initialize per `config.init` and run [`fit_from`].
pub fn fit<T: Scalar>(y: &DenseTensor<T>, config: &FitConfig) -> Result<FitResult<T>> {
    let init = initial_model(y, config)?;
    fit_from(y, init, config)
}

pub fn initial_model<T: Scalar>(y: &DenseTensor<T>, config: &FitConfig) -> Result<KruskalModel<T>> {
    match config.init {
        InitMethod::Svd => svd_init(y, config.rank, config.seed),
        InitMethod::Random => random_init(y.dims(), config.rank, config.seed),
    }
}

/// Run the configured algorithm from `init`.
///
/// Stops once `STALL_WINDOW` consecutive iterations change the error by less
/// than `tol`, when `μ` exceeds `MU_MAX`, or after `max_iters` iterations.
/// An iteration is accepted only if it strictly lowers the error; otherwise the
/// model is left unchanged.
pub fn fit_from<T: Scalar>(
    y: &DenseTensor<T>,
    init: KruskalModel<T>,
    config: &FitConfig,
) -> Result<FitResult<T>> {
    init.check_dims(y.dims())?;
    if init.rank() != config.rank {
        return Err(CpError::InvalidArgument(format!(
            "initial model has rank {}, config asks for {}",
            init.rank(),
            config.rank
        )));
    }
    if config.max_iters == 0 {
        return Err(CpError::InvalidArgument("max_iters must be at least 1".into()));
    }
    if config.algorithm == Algorithm::DgnOracle {
        check_oracle_size(y.dims(), config.rank)?;
    }
    let ny2 = y.norm_squared();
    if ny2 == 0.0 {
        return Err(CpError::ZeroNorm);
    }
    let mut model = if config.algorithm.is_damped() {
        init.normalize_equal_energy()?
    } else {
        init.absorb_weights()
    };
    let mut err = relative_error(y, &model)?;
    let mut trace = FitTrace {
        initial_error: err,
        entries: Vec::new(),
        stop_reason: StopReason::MaxIters,
        kernel_fallbacks: 0,
    };
    let mut state = LmState::new(1.0);
    if config.algorithm.is_damped() {
        state.mu = mu_init(&GramCache::from_factors(model.factors()), config.tau);
        if state.mu.is_nan() || state.mu <= 0.0 {
            state.mu = config.tau;
        }
    }
    let mut history = LineSearchHistory::default();
    let mut small = 0usize;

    for iter in 1..=config.max_iters {
        let at = |e: CpError| CpError::AtIteration { iter, source: Box::new(e) };
        let prev_err = err;
        let entry = if config.algorithm.is_damped() {
            let mu = state.mu;
            let step = damped_step(y, &model, mu, config.algorithm, &mut trace.kernel_fallbacks).map_err(at)?;
            let mut accepted = false;
            let mut rho = 0.0;
            let mut path = None;
            if let Some((cand, g, p)) = step {
                path = p;
                let new_err = relative_error(y, &cand).map_err(at)?;
                let delta = cand.to_vec() - model.to_vec();
                let den = delta.dotc(&(&g + &delta * T::from_real(mu))).real();
                let num = (err * err - new_err * new_err) * ny2;
                if den.abs() >= RHO_DENOMINATOR_FLOOR && new_err.is_finite() {
                    rho = num / den;
                }
                if rho > 0.0 && new_err < err {
                    model = cand.normalize_equal_energy().map_err(at)?;
                    err = new_err;
                    accepted = true;
                } else {
                    rho = 0.0;
                }
            }
            state = nielsen_update(&state, rho);
            state.err_history.push(err);
            TraceEntry { iter, rel_error: err, mu: Some(mu), accepted, path }
        } else {
            let cand = match config.algorithm {
                Algorithm::Als => als_step(y, &model),
                _ => als_line_search_step(y, &model, &mut history),
            }
            .map_err(at)?;
            let new_err = relative_error(y, &cand).map_err(at)?;
            let accepted = new_err < err;
            if accepted {
                model = cand;
                err = new_err;
            }
            TraceEntry { iter, rel_error: err, mu: None, accepted, path: None }
        };
        trace.entries.push(entry);

        small = if (err - prev_err).abs() < config.tol { small + 1 } else { 0 };
        if small >= STALL_WINDOW {
            trace.stop_reason = StopReason::Tol;
            break;
        }
        if config.algorithm.is_damped() && state.mu > MU_MAX {
            trace.stop_reason = StopReason::MuOverflow;
            break;
        }
    }
    Ok(FitResult { model, trace })
}

type StepOutput<T> = Option<(KruskalModel<T>, DVector<T>, Option<PhiVariant>)>;

/// Candidate, gradient and small-system path for one damped step.
/// `None` means the step could not be formed and counts as a rejection.
fn damped_step<T: Scalar>(
    y: &DenseTensor<T>,
    model: &KruskalModel<T>,
    mu: f64,
    algorithm: Algorithm,
    fallbacks: &mut usize,
) -> Result<StepOutput<T>> {
    if algorithm == Algorithm::DgnOracle {
        let delta = match dense_damped_solve(y, model, mu) {
            Ok(d) => d,
            Err(CpError::Singular(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let g = dense_gradient(y, model)?;
        let cand = KruskalModel::from_vec(&model.dims(), model.rank(), (model.to_vec() + delta).as_slice())?;
        return Ok(Some((cand, g, None)));
    }
    let cache = GramCache::from_factors(model.factors());
    let variant = match algorithm {
        Algorithm::FlmA => BVariant::FlmA,
        Algorithm::FlmB if !kernel_check(&cache).invertible => {
            *fallbacks += 1;
            BVariant::FlmA
        }
        Algorithm::FlmB => BVariant::FlmB,
        _ => BVariant::Auto,
    };
    let work = match flm_work(y, model, &cache, mu, variant) {
        Ok(w) => w,
        Err(CpError::Singular(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let g = work.gradient(model.factors(), &cache);
    let cand = update_with(model.factors(), &work.damped_factors, &work.f, &cache, &work.gamma_tilde)?;
    if cand.factors().iter().any(|f| f.iter().any(|x| !x.real().is_finite() || !x.imaginary().is_finite())) {
        return Ok(None);
    }
    Ok(Some((cand, g, Some(work.path))))
}
