//! The ADMM loop, in the shifted order: `z`, then `μ`, then `x`.

use std::fmt::Write as _;
use std::time::Instant;

use super::factors::{precompute_factors, solve_x_spectra, spectra_to_x};
use super::prox::{kl_divergence, project_nonneg, prox_group, prox_kl};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{ImageGrid, SplitVector, StackedField2};
use crate::operators::{norm21, Operators};

/// Full iterate: `x = (u, w)`, splitting variable `z` and scaled multiplier `μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmState {
    pub u: ImageGrid,
    pub w: StackedField2,
    pub z: SplitVector,
    pub mu: SplitVector,
    pub iteration: usize,
}

impl AdmmState {
    /// `u = b`, `w = ∇̃b`, `z = μ = 0`.
    pub fn initial(b: &ImageGrid, ops: &Operators) -> Result<Self> {
        let (h, w) = b.shape();
        Ok(Self {
            u: b.clone(),
            w: ops.apply_grad(b)?,
            z: SplitVector::zeros(h, w),
            mu: SplitVector::zeros(h, w),
            iteration: 0,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.u.data().iter().chain(self.w.data()).all(|v| v.is_finite())
            && self.z.is_finite()
            && self.mu.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxIterations,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::Tolerance => "tolerance",
            StopReason::MaxIterations => "max-iterations",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Objective at the `x` produced by this iteration.
    pub objective: f64,
    /// True when `Au + γ` left the log domain and the data term was taken at `z1`.
    pub kl_at_z1: bool,
    /// `‖Hx − z‖`.
    pub residual: f64,
    /// `‖Hx − z‖ / max(‖Hx‖, ‖z‖)`.
    pub residual_rel: f64,
    /// `‖u⁺ − u‖ / ‖u‖`.
    pub relative_change: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    pub initial_objective: f64,
    /// Largest `max(−u, 0)` of the returned image.
    pub max_negativity: f64,
    pub setup_seconds: f64,
}

impl SolveReport {
    pub const CSV_HEADER: &'static str = "iteration,objective,residual,relative_change,seconds,kl_at_z1";

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(self.initial_objective, |r| r.objective)
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual_rel)
    }

    pub fn total_seconds(&self) -> f64 {
        self.setup_seconds + self.records.iter().map(|r| r.seconds).sum::<f64>()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:.10e},{:.6e},{:.6e},{:.6},{}",
                r.iteration, r.objective, r.residual, r.relative_change, r.seconds, r.kl_at_z1 as u8
            );
        }
        out
    }
}

/// Model objective at `x = (u, w)`.
pub fn objective(
    u: &ImageGrid,
    w: &StackedField2,
    b: &ImageGrid,
    config: &SolverConfig,
    ops: &Operators,
) -> Result<f64> {
    let hx = ops.apply_h(u, w)?;
    let gamma = config.gamma.field(b.height(), b.width())?;
    objective_parts(&hx.z1, &hx, &gamma, b, config)
}

fn objective_parts(
    data_arg: &ImageGrid,
    hx: &SplitVector,
    gamma: &ImageGrid,
    b: &ImageGrid,
    config: &SolverConfig,
) -> Result<f64> {
    let kl = kl_divergence(data_arg, gamma, b)?;
    Ok(config.lambda * kl + config.alpha0 * norm21(&hx.z2) + config.alpha1 * norm21(&hx.z3))
}

/// `μ + Hx − z`.
pub fn multiplier_update(
    mu: &SplitVector,
    u: &ImageGrid,
    w: &StackedField2,
    z: &SplitVector,
    ops: &Operators,
) -> Result<SplitVector> {
    mu.ensure_consistent()?;
    z.ensure_consistent()?;
    let hx = ops.apply_h(u, w)?;
    Ok(accumulate(mu, &hx, z))
}

fn accumulate(mu: &SplitVector, hx: &SplitVector, z: &SplitVector) -> SplitVector {
    let mut out = mu.clone();
    for ((dst, h), zz) in out.parts_mut().into_iter().zip(hx.parts()).zip(z.parts()) {
        for ((d, a), c) in dst.iter_mut().zip(h).zip(zz) {
            *d += a - c;
        }
    }
    out
}

/// Restores `b` and returns the final image with the iteration report.
pub fn run_admm(b: &ImageGrid, config: &SolverConfig, ops: &Operators) -> Result<(ImageGrid, SolveReport)> {
    let (state, report) = run_admm_state(b, config, ops)?;
    Ok((state.u, report))
}

/// Like [`run_admm`] but returns the complete final state.
pub fn run_admm_state(b: &ImageGrid, config: &SolverConfig, ops: &Operators) -> Result<(AdmmState, SolveReport)> {
    config.validate()?;
    if b.shape() != ops.shape() {
        return Err(Error::ShapeMismatch {
            expected: ops.shape(),
            got: b.shape(),
        });
    }
    if let Some(i) = b.data().iter().position(|&v| v < 0.0) {
        return Err(Error::Domain(format!("negative observation at pixel {i}")));
    }
    let start = Instant::now();
    let (h, wd) = b.shape();
    let gamma = config.gamma.field(h, wd)?;
    let factors = precompute_factors(ops)?;
    let fft = ops.fft();

    let mut state = AdmmState::initial(b, ops)?;
    let mut uf = fft.forward_real(state.u.data());
    let mut hx = {
        let f1 = fft.forward_real(state.w.block(0));
        let f2 = fft.forward_real(state.w.block(1));
        ops.apply_h_from_spectra(&state.u, &state.w, &uf, &f1, &f2)
    };
    let initial_objective = objective_parts(&hx.z1, &hx, &gamma, b, config)?;
    let setup_seconds = start.elapsed().as_secs_f64();

    let c0 = config.alpha0 / config.rho;
    let c1 = config.alpha1 / config.rho;
    let mut records = Vec::new();
    let mut stop_reason = StopReason::MaxIterations;

    for k in 1..=config.k_max {
        let tick = Instant::now();

        let vz = hx.combine(&state.mu, 1.0);
        let z = SplitVector {
            z1: prox_kl(&vz.z1, b, &gamma, config.lambda, config.rho)?,
            z2: prox_group(&vz.z2, c0),
            z3: prox_group(&vz.z3, c1),
            z4: project_nonneg(&vz.z4),
        };
        let r = hx.combine(&z, -1.0);
        let residual = r.norm();
        let scale = hx.norm().max(z.norm());
        let residual_rel = if scale > 0.0 { residual / scale } else { 0.0 };
        state.mu = state.mu.combine(&r, 1.0);
        state.z = z;

        let vx = state.z.combine(&state.mu, -1.0);
        let [y1, y2, y3] = solve_x_spectra(&vx, &factors, ops);
        let (u_new, w_new) = spectra_to_x(ops, y1.clone(), y2.clone(), y3.clone(), vx.norm());

        let diff = u_new
            .data()
            .iter()
            .zip(state.u.data())
            .map(|(a, c)| (a - c).powi(2))
            .sum::<f64>()
            .sqrt();
        let base = state.u.norm();
        let relative_change = if base > 0.0 {
            diff / base
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };

        state.u = u_new;
        state.w = w_new;
        state.iteration = k;
        uf = y1;
        hx = ops.apply_h_from_spectra(&state.u, &state.w, &uf, &y2, &y3);

        if !state.is_finite() || !hx.is_finite() {
            return Err(Error::Divergence {
                iteration: k,
                what: "non-finite iterate",
            });
        }

        let (objective, kl_at_z1) = match objective_parts(&hx.z1, &hx, &gamma, b, config) {
            Ok(v) => (v, false),
            Err(_) => (
                objective_parts(&state.z.z1, &hx, &gamma, b, config).unwrap_or(f64::NAN),
                true,
            ),
        };

        records.push(IterationRecord {
            iteration: k,
            objective,
            kl_at_z1,
            residual,
            residual_rel,
            relative_change,
            seconds: tick.elapsed().as_secs_f64(),
        });

        if relative_change < config.tol {
            stop_reason = StopReason::Tolerance;
            break;
        }
    }

    let max_negativity = state.u.data().iter().fold(0.0f64, |m, &v| m.max(-v));
    Ok((
        state,
        SolveReport {
            records,
            stop_reason,
            initial_objective,
            max_negativity,
            setup_seconds,
        },
    ))
}
