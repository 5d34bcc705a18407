//! Independent oracles shared by the integration suites. Nothing here goes
//! through the library's Bessel table or quadrature paths.

#![allow(dead_code)]

/// Modified Bessel function `I_n(z)` by direct power series,
/// `sum_k (z/2)^{n+2k} / (k! (n+k)!)`, summed to machine precision.
pub fn bessel_series(n: i64, z: f64) -> f64 {
    let n = n.unsigned_abs();
    if z == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let mut term = 1.0_f64;
    for k in 1..=n {
        term *= z / 2.0 / k as f64;
    }
    let mut sum = term;
    let mut k = 1.0_f64;
    while term.abs() > sum.abs() * 1e-18 + 1e-320 {
        term *= (z / 2.0) * (z / 2.0) / (k * (k + n as f64));
        sum += term;
        k += 1.0;
    }
    sum
}

/// `e^{-z} I_n(z)` from the series.
pub fn bessel_series_scaled(n: i64, z: f64) -> f64 {
    bessel_series(n, z) * (-z).exp()
}

/// All step sequences of length `len` with entries in `[-s_max, s_max]`
/// summing to `total`.
pub fn enumerate_sequences(len: usize, s_max: i64, total: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn recurse(
        cur: &mut Vec<i64>,
        len: usize,
        s_max: i64,
        remaining: i64,
        out: &mut Vec<Vec<i64>>,
    ) {
        let left = len - cur.len();
        if left == 0 {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        if remaining.abs() > left as i64 * s_max {
            return;
        }
        for s in -s_max..=s_max {
            cur.push(s);
            recurse(cur, len, s_max, remaining - s, out);
            cur.pop();
        }
    }
    recurse(&mut cur, len, s_max, total, &mut out);
    out
}

/// Total-variation distance between an empirical count map and a target
/// probability vector over the same index space.
pub fn tv_distance(counts: &[u64], target: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(target)
        .map(|(&c, &t)| (c as f64 / n as f64 - t).abs())
        .sum::<f64>()
        / 2.0
}

/// Exact finite-p striped observables on a ring of `l` sites via the
/// transfer matrix `T_{jk} = e^{-(beta/p) V_j} I_{j-k}(2 beta t / p)`:
/// the discretization the Metropolis chain actually samples. Returns
/// `(mean potential, mean kinetic tau)`.
pub fn transfer_matrix_striped(beta: f64, p: usize, eps: f64, t: f64, l: usize) -> (f64, f64) {
    let z = 2.0 * beta * t / p as f64;
    let pot: Vec<f64> = (0..l).map(|j| if j % 2 == 1 { eps } else { 0.0 }).collect();
    // wrapped kernel and the dlog1-weighted kernel for the kinetic trace
    let mut kernel = vec![vec![0.0; l]; l];
    let mut kinetic_kernel = vec![vec![0.0; l]; l];
    let reach = 4 * l as i64;
    for d in -reach..=reach {
        let id = bessel_series_scaled(d, z);
        if id == 0.0 {
            continue;
        }
        let r = (bessel_series_scaled(d - 1, z) + bessel_series_scaled(d + 1, z)) / (2.0 * id);
        for j in 0..l {
            let k = ((j as i64 - d).rem_euclid(l as i64)) as usize;
            kernel[j][k] += id;
            kinetic_kernel[j][k] += r * id;
        }
    }
    let gibbs: Vec<f64> = pot.iter().map(|v| (-(beta / p as f64) * v).exp()).collect();
    let apply_g = |m: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..l)
            .map(|j| m[j].iter().map(|x| gibbs[j] * x).collect())
            .collect()
    };
    let t_mat = apply_g(&kernel);
    let r_mat = apply_g(&kinetic_kernel);
    let matmul = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let mut c = vec![vec![0.0; l]; l];
        for i in 0..l {
            for k in 0..l {
                let aik = a[i][k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..l {
                    c[i][j] += aik * b[k][j];
                }
            }
        }
        c
    };
    // T^p and T^{p-1} by repeated squaring on the exponent bits
    let power = |mut e: usize| -> Vec<Vec<f64>> {
        let mut base = t_mat.clone();
        let mut acc: Option<Vec<Vec<f64>>> = None;
        while e > 0 {
            if e % 2 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => matmul(&a, &base),
                });
            }
            base = matmul(&base, &base);
            e /= 2;
        }
        acc.unwrap()
    };
    let tp = power(p);
    let tp1 = power(p - 1);
    let trace: f64 = (0..l).map(|j| tp[j][j]).sum();
    let v_mean: f64 = (0..l).map(|j| pot[j] * tp[j][j]).sum::<f64>() / trace;
    let mut kin_trace = 0.0;
    for i in 0..l {
        for k in 0..l {
            kin_trace += tp1[i][k] * r_mat[k][i];
        }
    }
    let tau = 2.0 * t - 2.0 * t * kin_trace / trace;
    (v_mean, tau)
}
