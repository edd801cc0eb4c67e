//! Transmit beamforming for detection-probability maximization under a
//! minimum communication-SINR constraint and a total power budget.
//!
//! The non-convex design problem is relaxed by lifting w into W = w w^H
//! (semidefinite relaxation) and handling the squared-trace term of the
//! objective with successive convex approximation: each iteration maximizes
//! the first-order lower bound of tr^2(W S) around the current iterate,
//! which is a linear SDP solved by [`crate::sdp`]. Solutions of those
//! subproblems carry at most two affine constraints on W, so their extreme
//! points are rank-one and the beamformer is recovered by eigendecomposition.
//!
//! Benchmarks: a Gaussian-only design (no deterministic component), a
//! matched-filter design steering the deterministic covariance at the target,
//! and a time-switching schedule.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::detector::{ts_pd_given_pfa, DetectorError, OperatingPoint};
use crate::linalg;
use crate::model::{sensing_snrs, BeamformerDesign, ChannelSet, ModelError, SystemConfig};
use crate::sdp::{
    min_rank_extract, solve_with_options, ConicProgram, ConicSolution, Constraint, Relation,
    SdpError, SolveOptions, SolveStatus,
};
use crate::specfun::TailProb;

/// Relative objective change below which the outer iteration stops.
const SCA_REL_TOL: f64 = 1e-7;
const SCA_MAX_ITERS: usize = 50;
/// Interior-point tolerance for the per-iteration subproblems; tight enough
/// that the monotonicity slack of the outer loop (1e-9) is met.
const SUBPROBLEM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BeamformingError {
    #[error("SINR threshold {gamma_0:.6e} exceeds the maximum achievable SINR {max_sinr:.6e}")]
    Infeasible { gamma_0: f64, max_sinr: f64 },
    #[error("rate threshold {requested:.4} bits/slot exceeds the full-power rate {max_rate:.4}")]
    RateInfeasible { requested: f64, max_rate: f64 },
    #[error("subproblem solver returned {status:?} at iteration {iteration} (certificate residual {certificate:.3e})")]
    SolverFailure {
        status: SolveStatus,
        iteration: usize,
        certificate: f64,
    },
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

/// One beamforming design task.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub config: SystemConfig,
    pub channels: ChannelSet,
    pub p_fa: TailProb,
}

impl DesignProblem {
    fn validate(&self) -> Result<(), BeamformingError> {
        self.config.validate()?;
        if self.channels.h.len() != self.config.m_t
            || self.channels.a.len() != self.config.m_t
            || self.channels.b.len() != self.config.m_r
        {
            return Err(BeamformingError::Model(ModelError::ShapeMismatch(
                "channel dimensions disagree with the system configuration".into(),
            )));
        }
        Ok(())
    }
}

/// Successive-approximation iterate: lifted Gaussian covariance W, the
/// deterministic covariance, and the relaxed-objective value at the iterate.
#[derive(Debug, Clone)]
pub struct ScaState {
    pub iteration: usize,
    pub w_mat: DMatrix<Complex64>,
    pub r0: DMatrix<Complex64>,
    pub objective: f64,
}

/// Per-iteration diagnostics row.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ScaIterateRecord {
    pub iteration: usize,
    pub objective: f64,
    /// Second-to-first eigenvalue ratio of the W block (0 when W = 0).
    pub rank_residual: f64,
    pub solver_gap: f64,
    pub solver_primal_residual: f64,
    pub solver_dual_residual: f64,
    pub solver_iterations: usize,
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    pub records: Vec<ScaIterateRecord>,
    /// Set when the zero-threshold shortcut returned an analytic endpoint.
    pub endpoint_shortcut: bool,
    /// Which candidate won the final selection.
    pub selected: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct Feasibility {
    pub feasible: bool,
    /// P |h|^2 / sigma_c^2, the SINR of full-power maximum-ratio transmission.
    pub max_sinr: f64,
}

/// Geometry shared by all design routines.
struct DesignContext {
    /// S = conj(a) a^T, the sensing steering outer product.
    s_mat: DMatrix<Complex64>,
    /// h h^H.
    h_mat: DMatrix<Complex64>,
    /// M_r |alpha|^2 / sigma_s^2, the weight of the squared trace term.
    kappa: f64,
    m_t: usize,
    power: f64,
    gamma_0: f64,
    sigma_c2: f64,
}

impl DesignContext {
    fn new(problem: &DesignProblem) -> Self {
        let a_conj = problem.channels.a.map(|z| z.conj());
        let s_mat = &a_conj * a_conj.adjoint();
        let h_mat = &problem.channels.h * problem.channels.h.adjoint();
        DesignContext {
            s_mat,
            h_mat,
            kappa: problem.config.m_r as f64 * problem.channels.alpha.norm_sqr()
                / problem.config.sigma_s2,
            m_t: problem.config.m_t,
            power: problem.config.power,
            gamma_0: problem.config.gamma_0,
            sigma_c2: problem.config.sigma_c2,
        }
    }

    /// Relaxed objective kappa tr^2(W S) + 2 tr(R0 S).
    fn objective(&self, w_mat: &DMatrix<Complex64>, r0: &DMatrix<Complex64>) -> f64 {
        let tw = linalg::herm_inner(&self.s_mat, w_mat);
        let tr = linalg::herm_inner(&self.s_mat, r0);
        self.kappa * tw * tw + 2.0 * tr
    }

    /// Shared constraints: SINR and the power budget. At gamma_0 = 0 the SINR
    /// row degenerates to the vacuous <W hh^H> >= 0, where both the slack and
    /// its multiplier vanish at any deterministic-only optimum (strict
    /// complementarity fails), so the row is dropped instead.
    fn constraints(&self) -> Vec<Constraint> {
        let mut rows = Vec::with_capacity(2);
        if self.gamma_0 > 0.0 {
            rows.push(Constraint {
                coeffs: vec![
                    self.h_mat.clone(),
                    &self.h_mat * Complex64::new(-self.gamma_0, 0.0),
                ],
                relation: Relation::Ge,
                rhs: self.gamma_0 * self.sigma_c2,
            });
        }
        rows.push(Constraint {
            coeffs: vec![
                DMatrix::identity(self.m_t, self.m_t),
                DMatrix::identity(self.m_t, self.m_t),
            ],
            relation: Relation::Le,
            rhs: self.power,
        });
        rows
    }
}

fn solve_subproblem(
    program: &ConicProgram,
    iteration: usize,
) -> Result<ConicSolution, BeamformingError> {
    let sol = solve_with_options(
        program,
        &SolveOptions {
            tol: SUBPROBLEM_TOL,
            max_iter: 200,
            collect_iterates: false,
        },
    )?;
    if sol.status != SolveStatus::Optimal {
        return Err(BeamformingError::SolverFailure {
            status: sol.status,
            iteration,
            certificate: sol.certificate_residual,
        });
    }
    Ok(sol)
}

/// First-order lower bound of f(W) = tr^2(W S) around W_k:
/// 2 tr(W_k S) tr(W S) - tr^2(W_k S). Tight at W = W_k, below f elsewhere.
pub fn surrogate_objective(
    w_mat: &DMatrix<Complex64>,
    w_k: &DMatrix<Complex64>,
    a: &DVector<Complex64>,
) -> f64 {
    let a_conj = a.map(|z| z.conj());
    let s_mat = &a_conj * a_conj.adjoint();
    let t_k = linalg::herm_inner(&s_mat, w_k);
    let t = linalg::herm_inner(&s_mat, w_mat);
    2.0 * t_k * t - t_k * t_k
}

/// Achievable-SINR check: maximum-ratio transmission with all power on w and
/// no deterministic interference upper-bounds the communication SINR.
pub fn feasibility_check(problem: &DesignProblem) -> Feasibility {
    let max_sinr =
        problem.config.power * problem.channels.h.norm_squared() / problem.config.sigma_c2;
    Feasibility {
        feasible: problem.config.gamma_0 <= max_sinr * (1.0 + 1e-12),
        max_sinr,
    }
}

/// One inner step: maximize the linearized objective around `state` subject
/// to the SINR and power constraints. The objective never decreases because
/// the surrogate is tight at the current iterate and minorizes the true
/// objective.
pub fn sca_iteration(
    state: &ScaState,
    problem: &DesignProblem,
) -> Result<ScaState, BeamformingError> {
    let ctx = DesignContext::new(problem);
    let (next, _) = sca_iteration_inner(&ctx, state, problem)?;
    Ok(next)
}

fn sca_iteration_inner(
    ctx: &DesignContext,
    state: &ScaState,
    problem: &DesignProblem,
) -> Result<(ScaState, ScaIterateRecord), BeamformingError> {
    problem.validate()?;
    let t_k = linalg::herm_inner(&ctx.s_mat, &state.w_mat);
    let program = ConicProgram {
        block_dims: vec![ctx.m_t, ctx.m_t],
        objective: vec![
            &ctx.s_mat * Complex64::new(2.0 * ctx.kappa * t_k, 0.0),
            &ctx.s_mat * Complex64::new(2.0, 0.0),
        ],
        constraints: ctx.constraints(),
    };
    let sol = solve_subproblem(&program, state.iteration)?;
    let w_mat = linalg::hermitian_psd_clean(&sol.blocks[0]);
    let r0 = linalg::hermitian_psd_clean(&sol.blocks[1]);
    let objective = ctx.objective(&w_mat, &r0);
    let rank_residual = w_rank_residual(&w_mat);
    let record = ScaIterateRecord {
        iteration: state.iteration + 1,
        objective,
        rank_residual,
        solver_gap: sol.kkt.gap,
        solver_primal_residual: sol.kkt.primal,
        solver_dual_residual: sol.kkt.dual,
        solver_iterations: sol.iterations,
    };
    Ok((
        ScaState {
            iteration: state.iteration + 1,
            w_mat,
            r0,
            objective,
        },
        record,
    ))
}

/// lambda_2 / lambda_1 of a PSD block; zero for (numerically) zero blocks.
fn w_rank_residual(w_mat: &DMatrix<Complex64>) -> f64 {
    let vals = linalg::hermitian_eigenvalues(w_mat);
    let lam1 = vals.first().copied().unwrap_or(0.0);
    let tr: f64 = vals.iter().sum();
    if lam1 <= 1e-12 * tr.abs().max(1e-30) || lam1 <= 0.0 {
        return 0.0;
    }
    (vals.get(1).copied().unwrap_or(0.0) / lam1).max(0.0)
}

/// Interference-aware feasible starting point: w is maximum-ratio
/// transmission scaled to meet the SINR threshold with equality against the
/// interference of the remaining power steered deterministically at the
/// target. The split solves a linear equation in the w power.
fn initial_state(ctx: &DesignContext, problem: &DesignProblem) -> ScaState {
    let h = &problem.channels.h;
    let h_norm2 = h.norm_squared();
    let a_conj = problem.channels.a.map(|z| z.conj());
    // Interference gain of the deterministic steering covariance per watt.
    let g = h.dotc(&a_conj).norm_sqr() / ctx.m_t as f64;
    let p_w = if ctx.gamma_0 <= 0.0 || h_norm2 <= 0.0 {
        0.0
    } else {
        (ctx.gamma_0 * (ctx.power * g + ctx.sigma_c2) / (h_norm2 + ctx.gamma_0 * g)).min(ctx.power)
    };
    let w = if h_norm2 > 0.0 {
        h * Complex64::new((p_w / h_norm2).sqrt(), 0.0)
    } else {
        DVector::zeros(ctx.m_t)
    };
    let w_mat = &w * w.adjoint();
    let r0 = &ctx.s_mat * Complex64::new((ctx.power - p_w) / ctx.m_t as f64, 0.0);
    let objective = ctx.objective(&w_mat, &r0);
    ScaState {
        iteration: 0,
        w_mat,
        r0,
        objective,
    }
}

fn run_sca(
    ctx: &DesignContext,
    problem: &DesignProblem,
    start: ScaState,
    diagnostics: &mut Diagnostics,
) -> Result<ScaState, BeamformingError> {
    let mut state = start;
    diagnostics.objective_trace.push(state.objective);
    let mut converged = false;
    for _ in 0..SCA_MAX_ITERS {
        let (next, record) = sca_iteration_inner(ctx, &state, problem)?;
        if next.objective < state.objective - 1e-9 * state.objective.abs().max(1.0) {
            diagnostics.warnings.push(format!(
                "objective decreased at iteration {}: {} -> {}",
                next.iteration, state.objective, next.objective
            ));
        }
        diagnostics.objective_trace.push(next.objective);
        diagnostics.records.push(record);
        let rel_change = (next.objective - state.objective).abs() / state.objective.abs().max(1.0);
        state = next;
        if rel_change < SCA_REL_TOL {
            converged = true;
            break;
        }
    }
    diagnostics.iterations = state.iteration;
    diagnostics.converged = converged;
    Ok(state)
}

/// Recovers w from the leading eigenpair of the W block and repairs the
/// rounding-level SINR slack lost with the discarded eigenvalue mass: w is
/// scaled up to restore the SINR (the freed trace provides the headroom) and
/// R0 absorbs any residual power excess.
fn extract_design(
    ctx: &DesignContext,
    problem: &DesignProblem,
    state: &ScaState,
) -> Result<(BeamformerDesign, f64), BeamformingError> {
    let extract = min_rank_extract(&state.w_mat, 1e-9);
    let rank_residual = w_rank_residual(&state.w_mat);
    let mut w = if extract.leading_value > 0.0 {
        extract.leading_vector * Complex64::new(extract.leading_value.sqrt(), 0.0)
    } else {
        DVector::zeros(ctx.m_t)
    };
    let mut r0 = linalg::hermitian_psd_clean(&state.r0);

    if ctx.gamma_0 > 0.0 {
        let h = &problem.channels.h;
        let signal = h.dotc(&w).norm_sqr();
        let interference = (h.adjoint() * &r0 * h)[(0, 0)].re.max(0.0);
        let needed = ctx.gamma_0 * (interference + ctx.sigma_c2);
        if signal > 0.0 && signal < needed {
            w *= Complex64::new((needed / signal).sqrt() * (1.0 + 1e-12), 0.0);
        }
    }
    // Clamp any power excess by shrinking R0, which only raises the SINR.
    let total = w.norm_squared() + r0.diagonal().iter().map(|z| z.re).sum::<f64>();
    if total > ctx.power {
        let r0_power: f64 = r0.diagonal().iter().map(|z| z.re).sum();
        let excess = total - ctx.power;
        if r0_power > excess {
            r0 *= Complex64::new((r0_power - excess) / r0_power, 0.0);
        } else {
            let scale = (ctx.power / total).sqrt();
            w *= Complex64::new(scale, 0.0);
            r0 *= Complex64::new(ctx.power / total, 0.0);
        }
    }
    let design = BeamformerDesign::new(w, r0, ctx.power)?;
    Ok((design, rank_residual))
}

fn design_to_state(design: &BeamformerDesign, ctx: &DesignContext, iteration: usize) -> ScaState {
    let w_mat = &design.w * design.w.adjoint();
    ScaState {
        iteration,
        objective: ctx.objective(&w_mat, &design.r0),
        w_mat,
        r0: design.r0.clone(),
    }
}

/// Full design pipeline: feasibility check, successive convex approximation
/// from the interference-aware split (globalized against the closed-form
/// endpoint and benchmark candidates, since the relaxed objective is convex
/// in the power split and local steps cannot cross between its endpoint
/// basins), rank-one recovery, and the achieved operating point.
pub fn optimize_proposed(
    problem: &DesignProblem,
) -> Result<(BeamformerDesign, OperatingPoint, Diagnostics), BeamformingError> {
    problem.validate()?;
    let ctx = DesignContext::new(problem);
    let mut diagnostics = Diagnostics::default();

    let feas = feasibility_check(problem);
    if !feas.feasible {
        return Err(BeamformingError::Infeasible {
            gamma_0: ctx.gamma_0,
            max_sinr: feas.max_sinr,
        });
    }

    // No target path: sensing objective is identically zero, fall back to a
    // pure communication design.
    if ctx.kappa * ctx.s_mat.norm() == 0.0 {
        diagnostics
            .warnings
            .push("target path is zero; returning a pure communication design".into());
        let h = &problem.channels.h;
        let w = if h.norm_squared() > 0.0 {
            h * Complex64::new((ctx.power / h.norm_squared()).sqrt(), 0.0)
        } else {
            DVector::zeros(ctx.m_t)
        };
        let design = BeamformerDesign::new(w, DMatrix::zeros(ctx.m_t, ctx.m_t), ctx.power)?;
        let op = sensing_snrs(
            &design,
            problem.channels.alpha,
            &problem.channels.a,
            &problem.config,
        );
        diagnostics.selected = "pure-communication".into();
        return Ok((design, op, diagnostics));
    }

    // Unconstrained threshold: the relaxed objective kappa p^2 M_t^2 + 2 M_t (P - p)
    // over the power split is convex, so the optimum is one of the two
    // full-power endpoints, both steered at the target.
    if ctx.gamma_0 <= 0.0 {
        let m_t = ctx.m_t as f64;
        let obj_w = ctx.kappa * (ctx.power * m_t).powi(2);
        let obj_r = 2.0 * ctx.power * m_t;
        // Near ties prefer the deterministic endpoint, the stronger sensing
        // resource at equal relaxed objective.
        let take_r = obj_r >= obj_w * (1.0 - 1e-9);
        let a_conj = problem.channels.a.map(|z| z.conj());
        let design = if take_r {
            let r0 = &ctx.s_mat * Complex64::new(ctx.power / m_t, 0.0);
            BeamformerDesign::new(DVector::zeros(ctx.m_t), r0, ctx.power)?
        } else {
            let w = &a_conj * Complex64::new((ctx.power / m_t).sqrt(), 0.0);
            BeamformerDesign::new(w, DMatrix::zeros(ctx.m_t, ctx.m_t), ctx.power)?
        };
        diagnostics.endpoint_shortcut = true;
        diagnostics.selected = if take_r {
            "deterministic-endpoint"
        } else {
            "gaussian-endpoint"
        }
        .into();
        diagnostics.converged = true;
        let state = design_to_state(&design, &ctx, 0);
        diagnostics.objective_trace.push(state.objective);
        let op = sensing_snrs(
            &design,
            problem.channels.alpha,
            &problem.channels.a,
            &problem.config,
        );
        return Ok((design, op, diagnostics));
    }

    let mut state = run_sca(
        &ctx,
        problem,
        initial_state(&ctx, problem),
        &mut diagnostics,
    )?;
    diagnostics.selected = "sca".into();

    // Candidate designs feasible for the same constraint set; a better one
    // restarts the local iteration from its basin.
    let mut candidates: Vec<(String, ScaState)> = Vec::new();
    if let Ok(design) = optimize_gaussian_only(problem) {
        candidates.push(("gaussian-only".into(), design_to_state(&design, &ctx, 0)));
    }
    if let Ok(design) = optimize_mf_superimposed(problem) {
        candidates.push((
            "deterministic-heavy".into(),
            design_to_state(&design, &ctx, 0),
        ));
    }
    for (name, cand) in candidates {
        if cand.objective > state.objective * (1.0 + 1e-9) {
            let polished = run_sca(&ctx, problem, cand, &mut diagnostics)?;
            if polished.objective > state.objective {
                state = polished;
                diagnostics.selected = format!("sca-from-{name}");
            }
        }
    }

    let (design, rank_residual) = extract_design(&ctx, problem, &state)?;
    if rank_residual > 1e-6 {
        diagnostics
            .warnings
            .push(format!("rank-one residual {rank_residual:.3e} above 1e-6"));
    }
    let op = sensing_snrs(
        &design,
        problem.channels.alpha,
        &problem.channels.a,
        &problem.config,
    );
    Ok((design, op, diagnostics))
}

/// Gaussian-only benchmark design: no deterministic component, maximize the
/// received Gaussian power at the target. The objective is linear in W
/// (maximizing tr is maximizing tr^2), so a single SDP suffices.
pub fn optimize_gaussian_only(
    problem: &DesignProblem,
) -> Result<BeamformerDesign, BeamformingError> {
    problem.validate()?;
    let ctx = DesignContext::new(problem);
    let feas = feasibility_check(problem);
    if !feas.feasible {
        return Err(BeamformingError::Infeasible {
            gamma_0: ctx.gamma_0,
            max_sinr: feas.max_sinr,
        });
    }
    let mut constraints = Vec::with_capacity(2);
    if ctx.gamma_0 > 0.0 {
        constraints.push(Constraint {
            coeffs: vec![ctx.h_mat.clone()],
            relation: Relation::Ge,
            rhs: ctx.gamma_0 * ctx.sigma_c2,
        });
    }
    constraints.push(Constraint {
        coeffs: vec![DMatrix::identity(ctx.m_t, ctx.m_t)],
        relation: Relation::Le,
        rhs: ctx.power,
    });
    let program = ConicProgram {
        block_dims: vec![ctx.m_t],
        objective: vec![ctx.s_mat.clone()],
        constraints,
    };
    let sol = solve_subproblem(&program, 0)?;
    let w_mat = linalg::hermitian_psd_clean(&sol.blocks[0]);
    let state = ScaState {
        iteration: 0,
        w_mat,
        r0: DMatrix::zeros(ctx.m_t, ctx.m_t),
        objective: 0.0,
    };
    let (design, _) = extract_design(&ctx, problem, &state)?;
    Ok(design)
}

/// Matched-filter benchmark design: maximize the deterministic power steered
/// at the target subject to the communication constraints, as one linear SDP
/// over (W, R0). The information beamformer takes the minimum power that
/// meets the SINR threshold with equality (it is interference to this
/// receiver, so the power constraint pushes it down automatically).
pub fn optimize_mf_superimposed(
    problem: &DesignProblem,
) -> Result<BeamformerDesign, BeamformingError> {
    problem.validate()?;
    let ctx = DesignContext::new(problem);
    let feas = feasibility_check(problem);
    if !feas.feasible {
        return Err(BeamformingError::Infeasible {
            gamma_0: ctx.gamma_0,
            max_sinr: feas.max_sinr,
        });
    }
    let program = ConicProgram {
        block_dims: vec![ctx.m_t, ctx.m_t],
        objective: vec![DMatrix::zeros(ctx.m_t, ctx.m_t), ctx.s_mat.clone()],
        constraints: ctx.constraints(),
    };
    let sol = solve_subproblem(&program, 0)?;
    let state = ScaState {
        iteration: 0,
        w_mat: linalg::hermitian_psd_clean(&sol.blocks[0]),
        r0: linalg::hermitian_psd_clean(&sol.blocks[1]),
        objective: 0.0,
    };
    let (design, _) = extract_design(&ctx, problem, &state)?;
    Ok(design)
}

/// Time-switching benchmark plan.
#[derive(Debug, Clone, Copy)]
pub struct TimeSwitchingPlan {
    pub l_s: usize,
    pub l_c: usize,
    pub p_d: TailProb,
}

/// Splits the frame into a deterministic-only sensing phase and a
/// communication-only phase. The communication phase runs full-power
/// maximum-ratio transmission at rate R; meeting an average rate threshold
/// rho requires L_c = ceil(L rho / R) slots, and the remaining slots detect
/// coherently at the full-power deterministic SNR.
pub fn plan_time_switching(
    problem: &DesignProblem,
    rate_threshold: f64,
) -> Result<TimeSwitchingPlan, BeamformingError> {
    problem.validate()?;
    if !(rate_threshold >= 0.0) {
        return Err(BeamformingError::RateInfeasible {
            requested: rate_threshold,
            max_rate: 0.0,
        });
    }
    let slots = problem.config.slots;
    let feas = feasibility_check(problem);
    let rate = (1.0 + feas.max_sinr).log2();
    let l_c = if rate_threshold == 0.0 {
        0
    } else {
        if rate_threshold > rate * (1.0 + 1e-12) {
            return Err(BeamformingError::RateInfeasible {
                requested: rate_threshold,
                max_rate: rate,
            });
        }
        ((slots as f64 * rate_threshold / rate).ceil() as usize).min(slots)
    };
    let l_s = slots - l_c;
    let gamma_s_full = problem.channels.alpha.norm_sqr()
        * problem.config.power
        * problem.config.m_t as f64
        * problem.config.m_r as f64
        / problem.config.sigma_s2;
    let p_d = ts_pd_given_pfa(problem.p_fa, l_s, gamma_s_full)?;
    Ok(TimeSwitchingPlan { l_s, l_c, p_d })
}
