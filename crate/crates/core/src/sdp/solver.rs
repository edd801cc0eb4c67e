//! Homogeneous self-dual interior-point solver for small dense semidefinite
//! programs in standard equality form over a product of real symmetric
//! positive-semidefinite blocks:
//!
//! ```text
//! minimize <C, X>   subject to   <A_i, X> = b_i,   X >= 0.
//! ```
//!
//! Path following with Nesterov-Todd scaling and a Mehrotra-style centering
//! heuristic (predictor solve, then one combined step per iteration). The
//! self-dual embedding (tau, kappa) provides feasibility initialization and
//! infeasibility certificates without a big-M phase. Block sizes here stay
//! at or below ~34 (real-embedded 16x16 complex blocks plus scalar slacks),
//! so dense eigendecompositions dominate and no sparsity is exploited.

use nalgebra::DMatrix;

/// One constraint's coefficient blocks plus the full problem data.
pub(crate) struct StdProblem {
    pub dims: Vec<usize>,
    pub c: Vec<DMatrix<f64>>,
    /// a[i][j]: coefficient of block j in constraint i.
    pub a: Vec<Vec<DMatrix<f64>>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RawStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RawRecord {
    pub iteration: usize,
    /// <C, X/tau> in the internal (minimize) orientation.
    pub primal_objective: f64,
    /// b . y/tau in the internal orientation.
    pub dual_objective: f64,
    pub mu: f64,
    pub step: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub tau: f64,
    pub kappa: f64,
}

pub(crate) struct StdSolution {
    pub x: Vec<DMatrix<f64>>,
    pub y: Vec<f64>,
    pub status: RawStatus,
    pub iterations: usize,
    pub records: Vec<RawRecord>,
    /// How well the returned (y, Z) certifies infeasibility, when it does.
    pub certificate_residual: f64,
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Principal square root of a symmetric PSD matrix, clamping rounding noise.
fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut eig = m.clone().symmetric_eigen();
    for v in eig.eigenvalues.iter_mut() {
        *v = v.max(0.0).sqrt();
    }
    let mut s = eig.recompose();
    symmetrize(&mut s);
    s
}

/// Inverse square root; eigenvalues are floored to protect against loss of
/// positive definiteness in the last interior-point steps.
fn sym_inv_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut eig = m.clone().symmetric_eigen();
    let floor = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v)) * 1e-15 + 1e-300;
    for v in eig.eigenvalues.iter_mut() {
        *v = 1.0 / v.max(floor).sqrt();
    }
    let mut s = eig.recompose();
    symmetrize(&mut s);
    s
}

/// Nesterov-Todd scaling point W with W Z W = X.
fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    if x.nrows() == 1 {
        return DMatrix::from_element(1, 1, (x[(0, 0)] / z[(0, 0)]).sqrt());
    }
    let xs = sym_sqrt(x);
    let inner = &xs * z * &xs;
    let mut w = &xs * sym_inv_sqrt(&inner) * &xs;
    symmetrize(&mut w);
    w
}

/// Largest step alpha with X + alpha dX >= 0 (infinite when dX >= 0).
fn max_psd_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    if x.nrows() == 1 {
        let (xv, dv) = (x[(0, 0)], dx[(0, 0)]);
        return if dv >= 0.0 { f64::INFINITY } else { -xv / dv };
    }
    // lambda_min of X^{-1/2} dX X^{-1/2} via the eigenbasis of X.
    let inv_sqrt = sym_inv_sqrt(x);
    let s = &inv_sqrt * dx * &inv_sqrt;
    let mut sym = s;
    symmetrize(&mut sym);
    let lam_min = sym
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v));
    if lam_min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam_min
    }
}

struct State {
    x: Vec<DMatrix<f64>>,
    y: Vec<f64>,
    z: Vec<DMatrix<f64>>,
    tau: f64,
    kappa: f64,
}

fn block_dot(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| p.dot(q)).sum()
}

fn apply_a(prob: &StdProblem, x: &[DMatrix<f64>]) -> Vec<f64> {
    prob.a.iter().map(|row| block_dot(row, x)).collect()
}

fn apply_a_adjoint(prob: &StdProblem, y: &[f64]) -> Vec<DMatrix<f64>> {
    let mut out: Vec<DMatrix<f64>> = prob.dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
    for (yi, row) in y.iter().zip(prob.a.iter()) {
        for (o, a) in out.iter_mut().zip(row.iter()) {
            *o += a * *yi;
        }
    }
    out
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dy: Vec<f64>,
    dz: Vec<DMatrix<f64>>,
    dtau: f64,
    dkappa: f64,
}

/// Shared per-iteration quantities for the two Newton solves.
struct KktFactors {
    w: Vec<DMatrix<f64>>,
    /// Cholesky factor of the Schur complement M_ij = <A_i, W A_j W>.
    m_chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    wcw: Vec<DMatrix<f64>>,
    h_tau: f64,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

fn factor_kkt(prob: &StdProblem, st: &State) -> Option<KktFactors> {
    let m = prob.b.len();
    let w: Vec<DMatrix<f64>> =
        st.x.iter()
            .zip(st.z.iter())
            .map(|(x, z)| nt_scaling(x, z))
            .collect();
    // G_i = W A_i W per block.
    let g: Vec<Vec<DMatrix<f64>>> = prob
        .a
        .iter()
        .map(|row| {
            row.iter()
                .zip(w.iter())
                .map(|(a, wb)| wb * a * wb)
                .collect()
        })
        .collect();
    let mut schur = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = block_dot(&prob.a[i], &g[j]);
            schur[(i, j)] = v;
            schur[(j, i)] = v;
        }
    }
    // Tiny diagonal lift guards rank deficiencies in degenerate programs.
    let lift = 1e-14 * schur.diagonal().amax().max(1e-300);
    for i in 0..m {
        schur[(i, i)] += lift;
    }
    let m_chol = nalgebra::Cholesky::new(schur)?;
    let wcw: Vec<DMatrix<f64>> = prob
        .c
        .iter()
        .zip(w.iter())
        .map(|(c, wb)| wb * c * wb)
        .collect();
    let a_wcw = apply_a(prob, &wcw);
    let h_tau = block_dot(&wcw, &prob.c) + st.kappa / st.tau;
    let g1: Vec<f64> = a_wcw
        .iter()
        .zip(prob.b.iter())
        .map(|(v, b)| v + b)
        .collect();
    let g2: Vec<f64> = prob
        .b
        .iter()
        .zip(a_wcw.iter())
        .map(|(b, v)| b - v)
        .collect();
    Some(KktFactors {
        w,
        m_chol,
        wcw,
        h_tau,
        g1,
        g2,
    })
}

/// Solves the HSDE Newton system for centering target sigma*mu.
fn newton_direction(
    prob: &StdProblem,
    st: &State,
    kkt: &KktFactors,
    r_p: &[f64],
    r_d: &[DMatrix<f64>],
    r_g: f64,
    sigma_mu: f64,
) -> Option<Direction> {
    let m = prob.b.len();
    // R_c = sigma mu Z^{-1} - X blockwise; r_tk = sigma mu - tau kappa.
    let r_c: Vec<DMatrix<f64>> =
        st.x.iter()
            .zip(st.z.iter())
            .map(|(x, z)| {
                if z.nrows() == 1 {
                    DMatrix::from_element(1, 1, sigma_mu / z[(0, 0)] - x[(0, 0)])
                } else {
                    let inv_sqrt = sym_inv_sqrt(z);
                    let mut zi = &inv_sqrt * &inv_sqrt;
                    zi *= sigma_mu;
                    zi -= x;
                    symmetrize(&mut zi);
                    zi
                }
            })
            .collect();
    let r_tk = sigma_mu - st.tau * st.kappa;

    // W R_d W blockwise.
    let wrdw: Vec<DMatrix<f64>> = r_d
        .iter()
        .zip(kkt.w.iter())
        .map(|(rd, wb)| wb * rd * wb)
        .collect();

    let a_rc = apply_a(prob, &r_c);
    let a_wrdw = apply_a(prob, &wrdw);
    let mut rhs1 = vec![0.0; m];
    for i in 0..m {
        rhs1[i] = -r_p[i] - a_rc[i] + a_wrdw[i];
    }
    let rhs2 = -r_g + block_dot(&prob.c, &r_c) - block_dot(&kkt.wcw, r_d) + r_tk / st.tau;

    let u1 = kkt.m_chol.solve(&nalgebra::DVector::from_vec(rhs1.clone()));
    let v1 = kkt
        .m_chol
        .solve(&nalgebra::DVector::from_vec(kkt.g1.clone()));
    let g2 = nalgebra::DVector::from_vec(kkt.g2.clone());
    let denom = kkt.h_tau + g2.dot(&v1);
    if !denom.is_finite() || denom.abs() < 1e-300 {
        return None;
    }
    let dtau = (rhs2 - g2.dot(&u1)) / denom;
    let dy: Vec<f64> = (0..m).map(|i| u1[i] + dtau * v1[i]).collect();

    // dZ = -A*(dy) + C dtau + R_d;  dX = R_c - W dZ W;  dkappa from the
    // scalar complementarity row.
    let a_adj_dy = apply_a_adjoint(prob, &dy);
    let mut dz = Vec::with_capacity(prob.dims.len());
    for j in 0..prob.dims.len() {
        let mut m_dz = -&a_adj_dy[j] + &prob.c[j] * dtau + &r_d[j];
        symmetrize(&mut m_dz);
        dz.push(m_dz);
    }
    let mut dx = Vec::with_capacity(prob.dims.len());
    for j in 0..prob.dims.len() {
        let mut m_dx = &r_c[j] - &kkt.w[j] * &dz[j] * &kkt.w[j];
        symmetrize(&mut m_dx);
        dx.push(m_dx);
    }
    let dkappa = (r_tk - st.kappa * dtau) / st.tau;
    Some(Direction {
        dx,
        dy,
        dz,
        dtau,
        dkappa,
    })
}

fn max_step(st: &State, dir: &Direction) -> f64 {
    let mut alpha = f64::INFINITY;
    for (x, dx) in st.x.iter().zip(dir.dx.iter()) {
        alpha = alpha.min(max_psd_step(x, dx));
    }
    for (z, dz) in st.z.iter().zip(dir.dz.iter()) {
        alpha = alpha.min(max_psd_step(z, dz));
    }
    if dir.dtau < 0.0 {
        alpha = alpha.min(-st.tau / dir.dtau);
    }
    if dir.dkappa < 0.0 {
        alpha = alpha.min(-st.kappa / dir.dkappa);
    }
    alpha
}

fn total_dim(prob: &StdProblem) -> f64 {
    prob.dims.iter().sum::<usize>() as f64
}

pub(crate) fn solve_std(
    prob: &StdProblem,
    tol: f64,
    max_iter: usize,
    collect: bool,
) -> StdSolution {
    let n_plus = total_dim(prob) + 1.0;
    let mut st = State {
        x: prob.dims.iter().map(|&d| DMatrix::identity(d, d)).collect(),
        y: vec![0.0; prob.b.len()],
        z: prob.dims.iter().map(|&d| DMatrix::identity(d, d)).collect(),
        tau: 1.0,
        kappa: 1.0,
    };
    let c_norm: f64 = prob.c.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();

    let mut records = Vec::new();
    let mut status = RawStatus::NumericalFailure;
    let mut iterations = 0;
    let mut certificate_residual = f64::INFINITY;
    let mut tiny_steps = 0;

    for iter in 0..max_iter {
        iterations = iter + 1;
        // Residuals of the self-dual system.
        let ax = apply_a(prob, &st.x);
        let r_p: Vec<f64> = ax
            .iter()
            .zip(prob.b.iter())
            .map(|(axi, bi)| axi - bi * st.tau)
            .collect();
        let a_adj_y = apply_a_adjoint(prob, &st.y);
        let r_d: Vec<DMatrix<f64>> = (0..prob.dims.len())
            .map(|j| {
                let mut r = -&a_adj_y[j] - &st.z[j] + &prob.c[j] * st.tau;
                symmetrize(&mut r);
                r
            })
            .collect();
        let b_dot_y: f64 = prob.b.iter().zip(st.y.iter()).map(|(b, y)| b * y).sum();
        let c_dot_x = block_dot(&prob.c, &st.x);
        let r_g = b_dot_y - c_dot_x - st.kappa;

        let xz: f64 = st.x.iter().zip(st.z.iter()).map(|(x, z)| x.dot(z)).sum();
        let mu = (xz + st.tau * st.kappa) / n_plus;

        // Scaled-solution convergence metrics.
        let p_res = r_p
            .iter()
            .zip(prob.b.iter())
            .map(|(r, b)| (r / st.tau).abs() / (1.0 + b.abs()))
            .fold(0.0f64, f64::max);
        let d_res = r_d.iter().map(|r| r.norm() / st.tau).sum::<f64>() / (1.0 + c_norm);
        let p_obj = c_dot_x / st.tau;
        let d_obj = b_dot_y / st.tau;
        let gap_rel = (p_obj - d_obj).abs() / (1.0 + p_obj.abs() + d_obj.abs());

        if collect {
            records.push(RawRecord {
                iteration: iter,
                primal_objective: p_obj,
                dual_objective: d_obj,
                mu,
                step: 0.0,
                primal_residual: p_res,
                dual_residual: d_res,
                tau: st.tau,
                kappa: st.kappa,
            });
        }

        if p_res <= tol && d_res <= tol && gap_rel <= tol {
            status = RawStatus::Optimal;
            break;
        }

        // Infeasibility: Farkas certificate A*(y) <= 0 (up to residual),
        // b.y > 0, materializing as tau -> 0 with kappa bounded away.
        if st.tau < 1e-9 * st.kappa.max(1.0) {
            if b_dot_y > 0.0 {
                // Residual of the Farkas certificate, normalized by b.y.
                certificate_residual =
                    r_d.iter().map(|r| r.norm()).sum::<f64>() / b_dot_y.max(1e-300);
                status = RawStatus::Infeasible;
            } else {
                status = RawStatus::NumericalFailure;
            }
            break;
        }

        let kkt = match factor_kkt(prob, &st) {
            Some(k) => k,
            None => {
                status = RawStatus::NumericalFailure;
                break;
            }
        };

        // Predictor: affine direction, sigma = 0.
        let aff = match newton_direction(prob, &st, &kkt, &r_p, &r_d, r_g, 0.0) {
            Some(d) => d,
            None => {
                status = RawStatus::NumericalFailure;
                break;
            }
        };
        let alpha_aff = max_step(&st, &aff).min(1.0);
        let mu_aff = {
            let mut acc = 0.0;
            for ((x, dx), (z, dz)) in
                st.x.iter()
                    .zip(aff.dx.iter())
                    .zip(st.z.iter().zip(aff.dz.iter()))
            {
                acc += (x + dx * alpha_aff).dot(&(z + dz * alpha_aff));
            }
            acc += (st.tau + alpha_aff * aff.dtau) * (st.kappa + alpha_aff * aff.dkappa);
            acc / n_plus
        };
        let sigma = (mu_aff / mu).powi(3).clamp(1e-8, 0.999);

        // Combined centering step.
        let dir = match newton_direction(prob, &st, &kkt, &r_p, &r_d, r_g, sigma * mu) {
            Some(d) => d,
            None => {
                status = RawStatus::NumericalFailure;
                break;
            }
        };
        let alpha = (0.99 * max_step(&st, &dir)).min(1.0);
        if alpha < 1e-9 {
            tiny_steps += 1;
            if tiny_steps >= 3 {
                status = RawStatus::NumericalFailure;
                break;
            }
        } else {
            tiny_steps = 0;
        }

        for (x, dx) in st.x.iter_mut().zip(dir.dx.iter()) {
            *x += dx * alpha;
            symmetrize(x);
        }
        for (z, dz) in st.z.iter_mut().zip(dir.dz.iter()) {
            *z += dz * alpha;
            symmetrize(z);
        }
        for (y, dy) in st.y.iter_mut().zip(dir.dy.iter()) {
            *y += dy * alpha;
        }
        st.tau += alpha * dir.dtau;
        st.kappa += alpha * dir.dkappa;
        if let Some(last) = records.last_mut() {
            last.step = alpha;
        }
    }

    let inv_tau = 1.0 / st.tau;
    StdSolution {
        x: st.x.iter().map(|x| x * inv_tau).collect(),
        y: st.y.iter().map(|y| y * inv_tau).collect(),
        status,
        iterations,
        records,
        certificate_residual,
    }
}
