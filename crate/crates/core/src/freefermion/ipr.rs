use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use faer::Mat;

use super::{build_bdg, Closure};
use crate::error::{Error, Result};
use crate::model::{derive_seed, sample_disorder, DisorderRealization, SpinEnsembleSpec};

/// Disorder-averaged inverse participation ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IprStatistics {
    pub mean: f64,
    /// Standard error over realizations.
    pub stderr: f64,
    /// Per-realization averages over the selected modes, in seed order.
    pub per_realization: Vec<f64>,
}

/// IPR `Σᵢ (|uᵢ|² + |vᵢ|²)²` of the `n_states` positive-energy modes closest
/// to zero, lowest energy first.
///
/// The right singular vectors `ψ` of `M` are eigenvectors of the cyclic
/// tridiagonal `K = MᵀM` with eigenvalues `E²`; they are found by inverse
/// iteration at the exact eigenvalues, and `φ = Mψ/E`.
pub fn mode_iprs(realization: &DisorderRealization, omega: f64, n_states: usize) -> Result<Vec<f64>> {
    let n = realization.n;
    if n_states == 0 || n_states > n {
        return Err(Error::invalid(
            "n_states",
            format!("must lie in 1..={n} (positive branch of a {}-dim spectrum)", 2 * n),
        ));
    }
    let bdg = build_bdg(realization, omega)?;
    if n < 8 {
        return mode_iprs_svd(&bdg.reduced(), n_states);
    }
    // Column i of M holds d_i on the diagonal and s_i one row below (cyclic).
    let d: Vec<f64> = bdg.fields.iter().map(|f| -0.5 * f).collect();
    let mut s: Vec<f64> = bdg.couplings.iter().map(|j| 0.25 * j).collect();
    s[n - 1] *= match bdg.closure {
        Closure::Antiperiodic => -1.0,
        Closure::Periodic => 1.0,
        Closure::Open => 0.0,
    };
    let diag: Vec<f64> = (0..n).map(|i| d[i] * d[i] + s[i] * s[i]).collect();
    // off[i] = K_{i, i+1 mod n}
    let off: Vec<f64> = (0..n).map(|i| s[i] * d[(i + 1) % n]).collect();
    let mut k = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = diag[i];
        let j = (i + 1) % n;
        k[(i, j)] += off[i];
        k[(j, i)] += off[i];
    }
    let mut lambdas = k
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    lambdas.sort_by(f64::total_cmp);
    let scale = diag.iter().fold(0.0f64, |a, b| a.max(b.abs())) + 2.0 * off.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if lambdas[0].max(0.0).sqrt() < 1e-9 * scale.sqrt() {
        // A zero mode leaves φ undetermined by Mψ/E.
        return mode_iprs_svd(&bdg.reduced(), n_states);
    }

    let apply_m = |psi: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[i] += d[i] * psi[i];
            out[(i + 1) % n] += s[i] * psi[i];
        }
        out
    };
    let cluster = 1e-10 * scale;
    let mut found: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n_states);
    let mut out = Vec::with_capacity(n_states);
    for (idx, &lambda) in lambdas[..n_states].iter().enumerate() {
        let mut x: Vec<f64> = (0..n)
            .map(|i| ((i * 7 + idx * 13) as f64 * 0.618_034).sin() + 0.1)
            .collect();
        for _ in 0..4 {
            orthogonalize(
                &mut x,
                found
                    .iter()
                    .filter(|(l, _)| (l - lambda).abs() <= cluster)
                    .map(|(_, v)| v),
            );
            normalize(&mut x);
            x = cyclic_solve(&diag, &off, lambda, &x);
        }
        orthogonalize(
            &mut x,
            found
                .iter()
                .filter(|(l, _)| (l - lambda).abs() <= cluster)
                .map(|(_, v)| v),
        );
        normalize(&mut x);
        let e = lambda.max(0.0).sqrt();
        let mut phi = apply_m(&x);
        normalize(&mut phi);
        debug_assert!(e > 0.0);
        out.push(
            x.iter()
                .zip(&phi)
                .map(|(a, b)| {
                    let w = 0.5 * (a * a + b * b);
                    w * w
                })
                .sum(),
        );
        found.push((lambda, x));
    }
    Ok(out)
}

/// Reference route through a full SVD of `M`.
fn mode_iprs_svd(m: &Mat<f64>, n_states: usize) -> Result<Vec<f64>> {
    let n = m.nrows();
    let svd = m.svd().map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let (left, right) = (svd.U(), svd.V());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    Ok(order[..n_states]
        .iter()
        .map(|&k| {
            (0..n)
                .map(|i| {
                    let w = 0.5 * (left[(i, k)].powi(2) + right[(i, k)].powi(2));
                    w * w
                })
                .sum()
        })
        .collect())
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

fn orthogonalize<'a>(x: &mut [f64], basis: impl Iterator<Item = &'a Vec<f64>>) {
    for q in basis {
        let c: f64 = q.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(q).for_each(|(v, q)| *v -= c * q);
    }
}

/// Solves `(K − λ)x = rhs` for the symmetric cyclic tridiagonal `K` with
/// diagonal `diag` and `off[i] = K_{i,i+1 mod n}` (Sherman–Morrison on the
/// corner, pivoted elimination for the tridiagonal part).
fn cyclic_solve(diag: &[f64], off: &[f64], lambda: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut b: Vec<f64> = diag.iter().map(|v| v - lambda).collect();
    let beta = off[n - 1];
    let tiny = f64::EPSILON * (b.iter().fold(0.0f64, |a, v| a.max(v.abs())) + 1.0);
    if beta == 0.0 {
        return tridiagonal_solve(&b, &off[..n - 1], rhs, tiny);
    }
    let gamma = -(b[0].abs() + beta.abs());
    b[0] -= gamma;
    b[n - 1] -= beta * beta / gamma;
    let y = tridiagonal_solve(&b, &off[..n - 1], rhs, tiny);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = beta;
    let q = tridiagonal_solve(&b, &off[..n - 1], &u, tiny);
    let vy = y[0] + beta / gamma * y[n - 1];
    let vq = q[0] + beta / gamma * q[n - 1];
    // At an exact eigenvalue the corrected system is singular; a tiny
    // denominator keeps the iterate pointing along the eigenvector.
    let mut denom = 1.0 + vq;
    if denom.abs() < 1e-14 {
        denom = 1e-14_f64.copysign(denom);
    }
    let f = vy / denom;
    y.iter().zip(&q).map(|(a, b)| a - f * b).collect()
}

/// Symmetric tridiagonal solve with partial pivoting; zero pivots are
/// replaced by `tiny`, as usual for inverse iteration.
fn tridiagonal_solve(diag: &[f64], off: &[f64], rhs: &[f64], tiny: f64) -> Vec<f64> {
    let n = diag.len();
    // Rows hold (sub, main, super, super2) after elimination.
    let mut d = diag.to_vec();
    let mut du = off.to_vec();
    du.push(0.0);
    let mut du2 = vec![0.0; n];
    let mut dl = off.to_vec();
    dl.push(0.0);
    let mut b = rhs.to_vec();
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let m = dl[i] / d[i];
            d[i + 1] -= m * du[i];
            b[i + 1] -= m * b[i];
        } else {
            // Swap rows i and i+1.
            let m = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - m * tmp;
            if i + 1 < n - 1 {
                du2[i] = du[i + 1];
                du[i + 1] = -m * du2[i];
            }
            du[i] = tmp;
            b.swap(i, i + 1);
            b[i + 1] -= m * b[i];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = b[i];
        if i + 1 < n {
            v -= du[i] * x[i + 1];
        }
        if i + 2 < n {
            v -= du2[i] * x[i + 2];
        }
        x[i] = v / d[i];
    }
    x
}

/// Averages [`mode_iprs`] over `n_realizations` disorder draws. Realization
/// `r` uses seed `derive_seed(spec.disorder.seed, r)`, so the result does not
/// depend on thread scheduling.
pub fn ipr_average(
    spec: &SpinEnsembleSpec,
    omega: f64,
    n_realizations: usize,
    n_states: usize,
) -> Result<IprStatistics> {
    if n_realizations == 0 {
        return Err(Error::invalid("n_realizations", "must be >= 1"));
    }
    let per_realization = (0..n_realizations)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(spec.disorder.seed, r as u64);
            let s = spec.clone().with_disorder(spec.disorder.with_seed(seed));
            let iprs = mode_iprs(&sample_disorder(&s)?, omega, n_states)?;
            Ok(iprs.iter().sum::<f64>() / iprs.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let k = per_realization.len() as f64;
    let mean = per_realization.iter().sum::<f64>() / k;
    let stderr = if per_realization.len() > 1 {
        (per_realization.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        0.0
    };
    Ok(IprStatistics {
        mean,
        stderr,
        per_realization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Boundary, DisorderSpec};

    fn spec(n: usize, w: f64) -> SpinEnsembleSpec {
        SpinEnsembleSpec::chain(n, 1.0, Boundary::Periodic).with_disorder(DisorderSpec::uniform(w, 17))
    }

    #[test]
    fn matches_full_diagonalization() {
        // Oracle: site weights of the dense 2N BdG eigenvectors. Several seeds
        // include eigenvalues at which the shifted system is exactly singular.
        for r in 0..12 {
            let s = SpinEnsembleSpec::chain(60, 1.0, Boundary::Periodic)
                .with_disorder(DisorderSpec::uniform(0.3, derive_seed(17, r)));
            let real = sample_disorder(&s).unwrap();
            let fast = mode_iprs(&real, 0.5, 30).unwrap();
            let sol = build_bdg(&real, 0.5).unwrap().solve().unwrap();
            for (j, ipr) in fast.iter().enumerate() {
                assert!((sol.ipr(60 + j) - ipr).abs() < 1e-9, "seed {r} mode {j}");
            }
        }
    }

    #[test]
    fn fast_route_matches_svd_route() {
        for (w, seed, omega) in [(0.1, 3, 0.5), (0.5, 8, 0.5), (0.3, 2, 0.0), (0.3, 2, 1.4)] {
            let s = SpinEnsembleSpec::chain(200, 1.0, Boundary::Periodic).with_disorder(DisorderSpec::uniform(w, seed));
            let r = sample_disorder(&s).unwrap();
            let fast = mode_iprs(&r, omega, 50).unwrap();
            let slow = mode_iprs_svd(&build_bdg(&r, omega).unwrap().reduced(), 50).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-8 * b.max(1e-3), "W {w}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn tridiagonal_solver() {
        let diag = [2.0, -1.0, 0.5, 3.0, 1.0];
        let off = [1.0, 2.0, -0.5, 0.7, 0.3];
        let x = [0.3, -1.2, 0.8, 2.0, -0.4];
        // rhs = (K − λ)x with the cyclic corner.
        let lambda = 0.25;
        let n = 5;
        let rhs: Vec<f64> = (0..n)
            .map(|i| (diag[i] - lambda) * x[i] + off[i] * x[(i + 1) % n] + off[(i + n - 1) % n] * x[(i + n - 1) % n])
            .collect();
        let sol = cyclic_solve(&diag, &off, lambda, &rhs);
        for (a, b) in sol.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn clean_modes_are_extended() {
        let r = sample_disorder(&SpinEnsembleSpec::chain(1000, 1.0, Boundary::Periodic)).unwrap();
        for ipr in mode_iprs(&r, 0.5, 50).unwrap() {
            assert!(ipr < 10.0 / 1000.0);
            assert!(ipr >= 1.0 / 1000.0 - 1e-12);
        }
    }

    #[test]
    fn average_is_deterministic_and_bounded() {
        let a = ipr_average(&spec(60, 0.3), 0.5, 4, 5).unwrap();
        let b = ipr_average(&spec(60, 0.3), 0.5, 4, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.mean > 1.0 / 60.0 && a.mean <= 1.0);
    }

    #[test]
    fn rejects_too_many_states() {
        let r = sample_disorder(&spec(10, 0.1)).unwrap();
        assert!(mode_iprs(&r, 0.5, 11).is_err());
        assert!(ipr_average(&spec(10, 0.1), 0.5, 0, 2).is_err());
    }
}
