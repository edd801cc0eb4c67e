//! A small dense semidefinite-program solver over one or more Hermitian
//! positive-semidefinite blocks with affine equality/inequality constraints:
//!
//! ```text
//! maximize   sum_j <C_j, X_j>
//! subject to sum_j <A_ij, X_j>  (<= | >= | =)  b_i,    X_j >= 0,
//! ```
//!
//! with real inner product <A, B> = Re tr(A^H B). Complex blocks are solved
//! through their real symmetric embedding; inequalities become scalar slack
//! blocks; feasibility initialization and infeasibility detection come from
//! the homogeneous self-dual embedding in [`solver`].

mod solver;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg;
use solver::{solve_std, RawStatus, StdProblem};

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("program is malformed: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// One affine constraint: sum_j <coeffs[j], X_j> relation rhs.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<DMatrix<Complex64>>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A block-structured complex SDP in maximize orientation.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    pub block_dims: Vec<usize>,
    pub objective: Vec<DMatrix<Complex64>>,
    pub constraints: Vec<Constraint>,
}

impl ConicProgram {
    pub fn validate(&self) -> Result<(), SdpError> {
        if self.block_dims.is_empty() {
            return Err(SdpError::Malformed("no blocks".into()));
        }
        if self.constraints.is_empty() {
            return Err(SdpError::Malformed("need at least one constraint".into()));
        }
        let check_blocks = |mats: &[DMatrix<Complex64>], what: &str| {
            if mats.len() != self.block_dims.len() {
                return Err(SdpError::Malformed(format!(
                    "{what} has {} blocks, program has {}",
                    mats.len(),
                    self.block_dims.len()
                )));
            }
            for (m, &d) in mats.iter().zip(self.block_dims.iter()) {
                if m.nrows() != d || m.ncols() != d {
                    return Err(SdpError::Malformed(format!(
                        "{what} block is {}x{}, expected {d}x{d}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                let defect = linalg::hermitian_defect(m);
                if defect > 1e-10 {
                    return Err(SdpError::NotHermitian(defect));
                }
            }
            Ok(())
        };
        check_blocks(&self.objective, "objective")?;
        for (i, c) in self.constraints.iter().enumerate() {
            check_blocks(&c.coeffs, &format!("constraint {i}"))?;
            if !c.rhs.is_finite() {
                return Err(SdpError::Malformed(format!(
                    "constraint {i} rhs not finite"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy)]
pub struct KktResiduals {
    /// Worst relative constraint violation.
    pub primal: f64,
    /// Relative dual-feasibility residual (includes dual-slack negativity).
    pub dual: f64,
    /// Relative primal-dual objective gap.
    pub gap: f64,
}

/// Per-iteration solver telemetry, in the public maximize orientation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterateRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub mu: f64,
    pub step: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub tau: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub blocks: Vec<DMatrix<Complex64>>,
    /// Multipliers of the constraints in maximize orientation: nonnegative
    /// for `<=` rows, nonpositive for `>=` rows, free for equalities.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub kkt: KktResiduals,
    pub iterations: usize,
    /// Populated when `SolveOptions::collect_iterates` is set.
    pub iterates: Vec<IterateRecord>,
    /// Residual of the infeasibility certificate when status is Infeasible.
    pub certificate_residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub collect_iterates: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 200,
            collect_iterates: false,
        }
    }
}

/// Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix.
///
/// The embedding doubles inner products: <embed(A), embed(B)> = 2 Re<A, B>.
/// Internal program conversion compensates with a factor 1/2 on coefficient
/// matrices; this public form returns the plain embedding.
pub fn hermitian_embed(h: &DMatrix<Complex64>) -> Result<DMatrix<f64>, SdpError> {
    if !h.is_square() {
        return Err(SdpError::Malformed(format!(
            "matrix is {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let defect = linalg::hermitian_defect(h);
    if defect > 1e-10 {
        return Err(SdpError::NotHermitian(defect));
    }
    Ok(linalg::embed(h))
}

/// Rank estimate and leading eigenpair of a PSD matrix.
#[derive(Debug, Clone)]
pub struct RankExtract {
    /// Count of eigenvalues above `tol * lambda_max`.
    pub rank: usize,
    pub leading_value: f64,
    pub leading_vector: DVector<Complex64>,
}

/// Eigenvalue-based rank estimation and rank-one recovery: the returned pair
/// reconstructs w = sqrt(leading_value) * leading_vector.
pub fn min_rank_extract(x: &DMatrix<Complex64>, tol: f64) -> RankExtract {
    let (values, vectors) = linalg::hermitian_eigen(x);
    let lam_max = values.first().copied().unwrap_or(0.0);
    if lam_max <= 0.0 {
        return RankExtract {
            rank: 0,
            leading_value: 0.0,
            leading_vector: DVector::zeros(x.nrows()),
        };
    }
    let rank = values.iter().filter(|&&v| v > tol * lam_max).count();
    RankExtract {
        rank,
        leading_value: lam_max,
        leading_vector: vectors.into_iter().next().unwrap(),
    }
}

pub fn solve(program: &ConicProgram, tol: f64) -> Result<ConicSolution, SdpError> {
    solve_with_options(
        program,
        &SolveOptions {
            tol,
            ..SolveOptions::default()
        },
    )
}

pub fn solve_with_options(
    program: &ConicProgram,
    options: &SolveOptions,
) -> Result<ConicSolution, SdpError> {
    program.validate()?;
    let n_complex = program.block_dims.len();
    let m = program.constraints.len();

    // Real embedding with the 1/2 trace-convention compensation, slack
    // blocks for inequalities, and minimize orientation (objective negated).
    let mut dims: Vec<usize> = program.block_dims.iter().map(|&d| 2 * d).collect();
    let mut slack_sign = vec![0.0f64; m];
    for (i, c) in program.constraints.iter().enumerate() {
        match c.relation {
            Relation::Le => {
                slack_sign[i] = 1.0;
                dims.push(1);
            }
            Relation::Ge => {
                slack_sign[i] = -1.0;
                dims.push(1);
            }
            Relation::Eq => {}
        }
    }
    let n_blocks = dims.len();

    let embed_half = |h: &DMatrix<Complex64>| linalg::embed(h) * 0.5;

    let mut c_int: Vec<DMatrix<f64>> = Vec::with_capacity(n_blocks);
    for j in 0..n_complex {
        c_int.push(-embed_half(&program.objective[j]));
    }
    for _ in n_complex..n_blocks {
        c_int.push(DMatrix::zeros(1, 1));
    }

    // Hygiene scaling: each constraint row is normalized by its complex-part
    // magnitude BEFORE unit slack coefficients are appended, so that rows
    // whose matrices are tiny against the rest of the data (the model spans
    // ~15 orders of magnitude) still trade on equal footing with their slack.
    let mut a_int: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(m);
    let mut b_int: Vec<f64> = Vec::with_capacity(m);
    let mut row_scale = vec![1.0f64; m];
    let mut slack_block = n_complex;
    for (i, constraint) in program.constraints.iter().enumerate() {
        let mut row: Vec<DMatrix<f64>> = Vec::with_capacity(n_blocks);
        for j in 0..n_complex {
            row.push(embed_half(&constraint.coeffs[j]));
        }
        let norm: f64 = row.iter().map(|a| a.norm_squared()).sum::<f64>().sqrt();
        let s = 1.0 / norm.max(constraint.rhs.abs()).max(1e-120);
        row_scale[i] = s;
        for a in row.iter_mut() {
            *a *= s;
        }
        for _ in n_complex..n_blocks {
            row.push(DMatrix::zeros(1, 1));
        }
        if constraint.relation != Relation::Eq {
            let sign = if constraint.relation == Relation::Le {
                1.0
            } else {
                -1.0
            };
            row[slack_block] = DMatrix::from_element(1, 1, sign);
            slack_block += 1;
        }
        a_int.push(row);
        b_int.push(constraint.rhs * s);
    }
    let c_norm: f64 = c_int.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
    let obj_scale = 1.0 / c_norm.max(1e-120);
    for c in c_int.iter_mut() {
        *c *= obj_scale;
    }

    let std_prob = StdProblem {
        dims,
        c: c_int,
        a: a_int,
        b: b_int,
    };
    let raw = solve_std(
        &std_prob,
        options.tol,
        options.max_iter,
        options.collect_iterates,
    );

    // Map back: unembed primal blocks, unscale duals, negate into maximize
    // orientation. y_pub_i = -y_int_i * row_scale_i / obj_scale.
    let blocks: Vec<DMatrix<Complex64>> =
        (0..n_complex).map(|j| linalg::unembed(&raw.x[j])).collect();
    let duals: Vec<f64> = (0..m)
        .map(|i| -raw.y[i] * row_scale[i] / obj_scale)
        .collect();

    let herm_dot = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| linalg::herm_inner(a, b);
    let objective: f64 = program
        .objective
        .iter()
        .zip(blocks.iter())
        .map(|(c, x)| herm_dot(c, x))
        .sum();
    let dual_objective: f64 = program
        .constraints
        .iter()
        .zip(duals.iter())
        .map(|(c, y)| c.rhs * y)
        .sum();

    // Public-scale KKT residuals.
    let mut primal_viol = 0.0f64;
    for constraint in program.constraints.iter() {
        let val: f64 = constraint
            .coeffs
            .iter()
            .zip(blocks.iter())
            .map(|(a, x)| herm_dot(a, x))
            .sum();
        let viol = match constraint.relation {
            Relation::Le => (val - constraint.rhs).max(0.0),
            Relation::Ge => (constraint.rhs - val).max(0.0),
            Relation::Eq => (val - constraint.rhs).abs(),
        };
        primal_viol = primal_viol.max(viol / (1.0 + constraint.rhs.abs()));
    }
    // Primal blocks must be PSD up to rounding.
    for x in blocks.iter() {
        let min_eig = linalg::hermitian_eigenvalues(x)
            .last()
            .copied()
            .unwrap_or(0.0);
        let tr: f64 = x.diagonal().iter().map(|z| z.re).sum();
        primal_viol = primal_viol.max((-min_eig).max(0.0) / (1.0 + tr.abs()));
    }

    // Dual slack Z_pub = A*(y_pub) - C_pub must be PSD.
    let mut c_total_norm = 0.0f64;
    let mut dual_viol = 0.0f64;
    for j in 0..n_complex {
        let mut z = -&program.objective[j];
        for (constraint, y) in program.constraints.iter().zip(duals.iter()) {
            z += &constraint.coeffs[j] * Complex64::new(*y, 0.0);
        }
        let min_eig = linalg::hermitian_eigenvalues(&z)
            .last()
            .copied()
            .unwrap_or(0.0);
        dual_viol = dual_viol.max((-min_eig).max(0.0));
        c_total_norm += program.objective[j].norm_squared();
    }
    let dual_res = dual_viol / (1.0 + c_total_norm.sqrt());
    // Multiplier sign conditions fold into the dual residual.
    let mut sign_viol = 0.0f64;
    for (constraint, y) in program.constraints.iter().zip(duals.iter()) {
        let v = match constraint.relation {
            Relation::Le => (-y).max(0.0),
            Relation::Ge => y.max(0.0),
            Relation::Eq => 0.0,
        };
        sign_viol = sign_viol.max(v);
    }
    let dual_res = dual_res.max(sign_viol / (1.0 + dual_objective.abs()));

    let gap = (objective - dual_objective).abs() / (1.0 + objective.abs() + dual_objective.abs());

    let status = match raw.status {
        RawStatus::Optimal => SolveStatus::Optimal,
        RawStatus::Infeasible => SolveStatus::Infeasible,
        RawStatus::NumericalFailure => SolveStatus::NumericalFailure,
    };

    // Iterate telemetry flipped into maximize orientation (objectives were
    // scaled by obj_scale inside the solver).
    let iterates: Vec<IterateRecord> = raw
        .records
        .iter()
        .map(|r| IterateRecord {
            iteration: r.iteration,
            primal_objective: -r.primal_objective / obj_scale,
            dual_objective: -r.dual_objective / obj_scale,
            mu: r.mu,
            step: r.step,
            primal_residual: r.primal_residual,
            dual_residual: r.dual_residual,
            tau: r.tau,
            kappa: r.kappa,
        })
        .collect();

    Ok(ConicSolution {
        blocks,
        duals,
        objective,
        status,
        kkt: KktResiduals {
            primal: primal_viol,
            dual: dual_res,
            gap,
        },
        iterations: raw.iterations,
        iterates,
        certificate_residual: raw.certificate_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_cscg, CounterRng};

    fn herm(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = CounterRng::from_key(seed, 0, 0, 77);
        let g = DMatrix::from_fn(n, n, |_, _| sample_cscg(&mut rng, 1.0));
        (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
    }

    fn cplx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn embed_examples() {
        let eye = DMatrix::<Complex64>::identity(3, 3);
        let e = hermitian_embed(&eye).unwrap();
        assert!((e - DMatrix::<f64>::identity(6, 6)).norm() < 1e-15);

        // [[0, i], [-i, 0]] has eigenvalues +-1, doubled by the embedding.
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[
                cplx(0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                cplx(0.0),
            ],
        );
        let e = hermitian_embed(&h).unwrap();
        let mut vals: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, expect) in vals.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((v - expect).abs() < 1e-12);
        }

        // Trace convention: <embed(A), embed(B)> = 2 Re<A, B>.
        let a = herm(4, 1);
        let b = herm(4, 2);
        let lhs = hermitian_embed(&a)
            .unwrap()
            .dot(&hermitian_embed(&b).unwrap());
        let rhs = crate::linalg::herm_inner(&a, &b);
        assert!((lhs / rhs - 2.0).abs() < 1e-12, "ratio {}", lhs / rhs);

        let mut bad = a.clone();
        bad[(0, 1)] += Complex64::new(0.1, 0.0);
        assert!(matches!(
            hermitian_embed(&bad),
            Err(SdpError::NotHermitian(_))
        ));
    }

    /// maximize <-C, X> s.t. tr X = 1 has optimum -lambda_min(C).
    fn eigen_program(c: &DMatrix<Complex64>) -> ConicProgram {
        let n = c.nrows();
        ConicProgram {
            block_dims: vec![n],
            objective: vec![-c],
            constraints: vec![Constraint {
                coeffs: vec![DMatrix::identity(n, n)],
                relation: Relation::Eq,
                rhs: 1.0,
            }],
        }
    }

    #[test]
    fn eigenvalue_instances() {
        for seed in 0..8 {
            let c = herm(6, 100 + seed);
            let sol = solve(&eigen_program(&c), 1e-9).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
            let lam_min = crate::linalg::hermitian_eigenvalues(&c)
                .last()
                .copied()
                .unwrap();
            assert!(
                (sol.objective - (-lam_min)).abs() < 1e-6,
                "seed {seed}: objective {} vs {}",
                sol.objective,
                -lam_min
            );
            assert!(sol.kkt.primal < 1e-7 && sol.kkt.dual < 1e-6 && sol.kkt.gap < 1e-7);
        }
    }

    #[test]
    fn diagonal_program_reduces_to_lp() {
        // maximize 3 x1 + x2 + 2 x3 s.t. x1 + x2 + x3 <= 2, x1 <= 1.2, x >= 0
        // (diagonal 3x3 block). LP optimum: x1 = 1.2, x3 = 0.8: obj 5.2.
        let diag = |v: [f64; 3]| {
            DMatrix::from_diagonal(&DVector::from_vec(vec![cplx(v[0]), cplx(v[1]), cplx(v[2])]))
        };
        let program = ConicProgram {
            block_dims: vec![3],
            objective: vec![diag([3.0, 1.0, 2.0])],
            constraints: vec![
                Constraint {
                    coeffs: vec![diag([1.0, 1.0, 1.0])],
                    relation: Relation::Le,
                    rhs: 2.0,
                },
                Constraint {
                    coeffs: vec![diag([1.0, 0.0, 0.0])],
                    relation: Relation::Le,
                    rhs: 1.2,
                },
            ],
        };
        let sol = solve(&program, 1e-9).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(
            (sol.objective - 5.2).abs() < 1e-6,
            "objective {}",
            sol.objective
        );
        let x = &sol.blocks[0];
        assert!((x[(0, 0)].re - 1.2).abs() < 1e-5);
        assert!(x[(1, 1)].re.abs() < 1e-5);
        assert!((x[(2, 2)].re - 0.8).abs() < 1e-5);
        // Multiplier signs: both <= rows bind, so duals are positive.
        assert!(sol.duals.iter().all(|&y| y > 0.0));
    }

    #[test]
    fn infeasible_program_is_flagged() {
        let n = 2;
        let program = ConicProgram {
            block_dims: vec![n],
            objective: vec![DMatrix::identity(n, n)],
            constraints: vec![
                Constraint {
                    coeffs: vec![DMatrix::identity(n, n)],
                    relation: Relation::Le,
                    rhs: 1.0,
                },
                Constraint {
                    coeffs: vec![DMatrix::identity(n, n)],
                    relation: Relation::Ge,
                    rhs: 2.0,
                },
            ],
        };
        let sol = solve(&program, 1e-8).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.certificate_residual < 1e-6);
    }

    #[test]
    fn scaling_invariance_of_argmax() {
        let c = herm(4, 9);
        let base = solve(&eigen_program(&c), 1e-9).unwrap();
        let scaled_prog = {
            let mut p = eigen_program(&c);
            p.objective[0] *= cplx(37.0);
            p
        };
        let scaled = solve(&scaled_prog, 1e-9).unwrap();
        assert!((scaled.objective - 37.0 * base.objective).abs() < 1e-5 * 37.0);
        assert!((&scaled.blocks[0] - &base.blocks[0]).norm() < 1e-5);
    }

    #[test]
    fn weak_duality_along_feasible_iterates() {
        // Dual objective dominates the primal one (maximize orientation) once
        // the self-dual iterates are essentially feasible.
        let c = herm(5, 21);
        let sol = solve_with_options(
            &eigen_program(&c),
            &SolveOptions {
                tol: 1e-9,
                max_iter: 200,
                collect_iterates: true,
            },
        )
        .unwrap();
        assert!(!sol.iterates.is_empty());
        let mut checked = 0;
        for rec in sol.iterates.iter() {
            if rec.primal_residual < 1e-7 && rec.dual_residual < 1e-7 {
                assert!(
                    rec.dual_objective
                        >= rec.primal_objective - 1e-12 * (1.0 + rec.primal_objective.abs()),
                    "weak duality violated at iteration {}: {} < {}",
                    rec.iteration,
                    rec.dual_objective,
                    rec.primal_objective
                );
                checked += 1;
            }
        }
        assert!(checked > 0, "no near-feasible iterates recorded");
    }

    #[test]
    fn min_rank_extract_cases() {
        let mut rng = CounterRng::from_key(5, 0, 0, 3);
        let v = DVector::from_fn(4, |_, _| sample_cscg(&mut rng, 1.0));
        let vv = &v * v.adjoint();
        let ext = min_rank_extract(&vv, 1e-9);
        assert_eq!(ext.rank, 1);
        assert!((ext.leading_value - v.norm_squared()).abs() < 1e-10 * v.norm_squared());
        // Recovered vector matches up to phase.
        let w = ext.leading_vector * cplx(ext.leading_value.sqrt());
        let overlap = w.dotc(&v).norm() / (w.norm() * v.norm());
        assert!((overlap - 1.0).abs() < 1e-10);

        let eye = DMatrix::<Complex64>::identity(5, 5);
        assert_eq!(min_rank_extract(&eye, 1e-9).rank, 5);
        let zero = DMatrix::<Complex64>::zeros(3, 3);
        assert_eq!(min_rank_extract(&zero, 1e-9).rank, 0);
    }

    /// Randomized brute-force oracle for a beamforming-shaped linear SDP:
    /// maximize beta tr(W S) + 2 tr(R S)
    /// s.t. tr(W H) >= g0 tr(R H) + g0 s2, tr(W) + tr(R) <= P, W, R >= 0,
    /// where S = conj(a) a^T and H = h h^H. By the rank bound the optimum is
    /// attained at rank-one (W, R), so sampling unit directions and a power
    /// grid with local refinement brackets the optimum.
    #[test]
    fn beamforming_shaped_instance_matches_brute_force() {
        let m_t = 3;
        let mut rng = CounterRng::from_key(31, 0, 0, 12);
        let a = DVector::from_fn(m_t, |_, _| sample_cscg(&mut rng, 1.0));
        let h = DVector::from_fn(m_t, |_, _| sample_cscg(&mut rng, 1.0));
        let a_conj = a.map(|z| z.conj());
        let s_mat = &a_conj * a_conj.adjoint();
        let h_mat = &h * h.adjoint();
        let beta = 0.8;
        let g0 = 1.5;
        let s2 = 0.4;
        let p_budget = 2.0;

        let program = ConicProgram {
            block_dims: vec![m_t, m_t],
            objective: vec![s_mat.clone() * cplx(beta), s_mat.clone() * cplx(2.0)],
            constraints: vec![
                Constraint {
                    coeffs: vec![h_mat.clone(), h_mat.clone() * cplx(-g0)],
                    relation: Relation::Ge,
                    rhs: g0 * s2,
                },
                Constraint {
                    coeffs: vec![DMatrix::identity(m_t, m_t), DMatrix::identity(m_t, m_t)],
                    relation: Relation::Le,
                    rhs: p_budget,
                },
            ],
        };
        let sol = solve(&program, 1e-9).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);

        // Brute force over the parameterized feasible set. Both quadratic
        // forms are rank-one, so optimal rank-one directions lie in
        // span{conj(a), h}: parameterize the w direction by (t, phi) in that
        // plane and the power split by pw. Given those three, the best r
        // direction has a closed form, so a fine grid plus pattern search
        // converges to the true optimum of the rank-one-parameterized set.
        let u1 = &a_conj / cplx(a_conj.norm());
        let mut u2 = &h - &u1 * u1.dotc(&h);
        let u2_norm = u2.norm();
        u2 /= cplx(u2_norm);
        let s_peak = a_conj.norm_squared();
        let h1 = u1.dotc(&h).norm();
        let h2 = u2.dotc(&h).norm();
        // (s-value, h-value) of the direction cos(t) u1 + sin(t) e^{i phi} u2.
        let dir_values = |t: f64, phi: f64| {
            let d = &u1 * cplx(t.cos()) + &u2 * (Complex64::from_polar(1.0, phi) * t.sin());
            let sv = d.dotc(&(&s_mat * &d)).re;
            let hv = d.dotc(&(&h_mat * &d)).re;
            (sv, hv)
        };
        // Best r-direction s-value subject to its h-value <= cap: with the
        // phase of the u2 coefficient chosen to cancel, the constraint reads
        // (h1 cos(t) - h2 sin(t))^2 <= cap, and s-value = s_peak cos^2(t).
        let best_sr = |cap: f64| {
            if cap.is_infinite() || h1 * h1 <= cap {
                return s_peak;
            }
            let r = (h1 * h1 + h2 * h2).sqrt();
            let delta = h2.atan2(h1);
            let theta = (cap.sqrt() / r).min(1.0).acos() - delta;
            if theta <= 0.0 {
                s_peak
            } else {
                s_peak * theta.cos().powi(2)
            }
        };
        // Objective of (t_w, phi_w, pw); the r block is solved exactly.
        let evaluate = |q: &[f64; 3]| {
            let [tw, phiw, pw] = *q;
            if !(0.0..=p_budget).contains(&pw) {
                return f64::NEG_INFINITY;
            }
            let pr = p_budget - pw;
            let (sw, gw) = dir_values(tw, phiw);
            let slack = pw * gw - g0 * s2;
            if slack < 0.0 {
                return f64::NEG_INFINITY;
            }
            let cap = if pr > 0.0 {
                slack / (g0 * pr)
            } else {
                f64::INFINITY
            };
            beta * pw * sw + 2.0 * pr * best_sr(cap)
        };

        let mut best = f64::NEG_INFINITY;
        let mut best_q = [0.0f64; 3];
        for i in 0..200 {
            let t = std::f64::consts::FRAC_PI_2 * i as f64 / 199.0;
            for j in 0..128 {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / 128.0;
                for k in 0..=200 {
                    let pw = p_budget * k as f64 / 200.0;
                    let q = [t, phi, pw];
                    let val = evaluate(&q);
                    if val > best {
                        best = val;
                        best_q = q;
                    }
                }
            }
        }
        // Shrinking-step pattern search around the grid argmax.
        let mut q = best_q;
        let mut scale = 0.02;
        for _ in 0..200 {
            let mut improved = false;
            for dim in 0..3 {
                for dir in [-1.0, 1.0] {
                    let mut cand = q;
                    let step = if dim == 2 { scale * p_budget } else { scale };
                    cand[dim] += dir * step;
                    let val = evaluate(&cand);
                    if val > best {
                        best = val;
                        q = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                scale *= 0.5;
                if scale < 1e-12 {
                    break;
                }
            }
        }

        assert!(
            (sol.objective - best).abs() < 1e-5 * (1.0 + best.abs()),
            "solver {} vs brute force {best}",
            sol.objective
        );
        assert!(
            sol.objective >= best - 1e-6,
            "solver below brute-force bound"
        );
        assert!(sol.kkt.primal < 1e-7 && sol.kkt.gap < 1e-7);
    }
}
