//! Reference implementations shared by the integration tests. Nothing here
//! calls into the crate's solver or statistics code.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use treerules::featurize::DesignMatrix;

/// Dense copy of a design matrix plus labels as 0/1.
pub struct Dense {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Dense {
    pub fn from_matrix(m: &DesignMatrix) -> Self {
        let x = (0..m.n_rows())
            .map(|i| {
                let mut row = vec![0.0; m.n_features()];
                for &f in m.row(i) {
                    row[f as usize] = 1.0;
                }
                row
            })
            .collect();
        let y = m.labels().iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        Self { x, y }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }
}

fn log1pexp(w: f64) -> f64 {
    // ln(1 + e^w), split to avoid overflow
    if w > 0.0 {
        w + (-w).exp().ln_1p()
    } else {
        w.exp().ln_1p()
    }
}

fn logistic(w: f64) -> f64 {
    if w >= 0.0 {
        1.0 / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        e / (1.0 + e)
    }
}

fn margin(d: &Dense, i: usize, a: &[f64], b: f64) -> f64 {
    b + d.x[i].iter().zip(a).map(|(x, w)| x * w).sum::<f64>()
}

pub fn smooth_part(d: &Dense, a: &[f64], b: f64) -> f64 {
    let n = d.n() as f64;
    (0..d.n())
        .map(|i| {
            let m = margin(d, i, a, b);
            log1pexp(m) - d.y[i] * m
        })
        .sum::<f64>()
        / n
}

pub fn objective(d: &Dense, a: &[f64], b: f64, lambda: f64) -> f64 {
    smooth_part(d, a, b) + lambda * a.iter().map(|w| w.abs()).sum::<f64>()
}

/// Gradient of the smooth part with respect to (a, b).
pub fn gradient(d: &Dense, a: &[f64], b: f64) -> (Vec<f64>, f64) {
    let n = d.n() as f64;
    let mut ga = vec![0.0; d.p()];
    let mut gb = 0.0;
    for i in 0..d.n() {
        let r = logistic(margin(d, i, a, b)) - d.y[i];
        gb += r;
        for (g, x) in ga.iter_mut().zip(&d.x[i]) {
            *g += r * x;
        }
    }
    (ga.iter().map(|g| g / n).collect(), gb / n)
}

/// Largest violation of the subgradient optimality conditions.
pub fn kkt(d: &Dense, a: &[f64], b: f64, lambda: f64) -> f64 {
    let (ga, gb) = gradient(d, a, b);
    let mut worst = gb.abs();
    for (g, w) in ga.iter().zip(a) {
        let v = if *w == 0.0 {
            (g.abs() - lambda).max(0.0)
        } else {
            (g + lambda * w.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// KKT violation computed row-wise from the sparse rows, for large matrices.
pub fn kkt_sparse(m: &DesignMatrix, a: &[f64], b: f64, lambda: f64) -> f64 {
    let n = m.n_rows() as f64;
    let mut ga = vec![0.0; m.n_features()];
    let mut gb = 0.0;
    for i in 0..m.n_rows() {
        let row = m.row(i);
        let w = b + row.iter().map(|&f| a[f as usize]).sum::<f64>();
        let y = if m.labels()[i] { 1.0 } else { 0.0 };
        let r = logistic(w) - y;
        gb += r;
        for &f in row {
            ga[f as usize] += r;
        }
    }
    let mut worst = (gb / n).abs();
    for (g, w) in ga.iter().zip(a) {
        let g = g / n;
        let v = if *w == 0.0 {
            (g.abs() - lambda).max(0.0)
        } else {
            (g + lambda * w.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

pub struct OracleSolution {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub objective: f64,
    pub kkt: f64,
}

/// Accelerated proximal gradient (FISTA) with function-value adaptive
/// restart, run to a tight fixed point. The intercept is unpenalized.
pub fn fista(d: &Dense, lambda: f64, max_iters: usize) -> OracleSolution {
    let n = d.n() as f64;
    let p = d.p();
    // ‖[X 1]‖₂² ≤ ‖[X 1]‖_F²; logistic curvature ≤ 1/4
    let fro: f64 = d.x.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0).sum();
    let step = 4.0 * n / fro;
    let ybar = d.y.iter().sum::<f64>() / n;
    let mut x_a = vec![0.0; p];
    let mut x_b = (ybar / (1.0 - ybar)).ln();
    let mut z_a = x_a.clone();
    let mut z_b = x_b;
    let mut t = 1.0f64;
    let mut f_prev = objective(d, &x_a, x_b, lambda);
    for _ in 0..max_iters {
        let (ga, gb) = gradient(d, &z_a, z_b);
        let new_a: Vec<f64> = z_a
            .iter()
            .zip(&ga)
            .map(|(z, g)| {
                let u = z - step * g;
                u.signum() * (u.abs() - step * lambda).max(0.0)
            })
            .collect();
        let new_b = z_b - step * gb;
        let f_new = objective(d, &new_a, new_b, lambda);
        if f_new > f_prev {
            // restart momentum from the last iterate
            t = 1.0;
            z_a = x_a.clone();
            z_b = x_b;
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t_next;
        let moved = new_a
            .iter()
            .zip(&x_a)
            .map(|(a, b)| (a - b).abs())
            .fold((new_b - x_b).abs(), f64::max);
        z_a = new_a.iter().zip(&x_a).map(|(a, b)| a + beta * (a - b)).collect();
        z_b = new_b + beta * (new_b - x_b);
        x_a = new_a;
        x_b = new_b;
        t = t_next;
        let done = moved < 1e-14 && (f_prev - f_new).abs() < 1e-16;
        f_prev = f_new;
        if done {
            break;
        }
    }
    OracleSolution {
        objective: objective(d, &x_a, x_b, lambda),
        kkt: kkt(d, &x_a, x_b, lambda),
        weights: x_a,
        intercept: x_b,
    }
}

/// A small random problem with mixed labels: rows drawn with per-feature
/// densities, labels from a random logistic model plus noise.
pub fn random_problem(rng: &mut ChaCha8Rng, max_n: usize, max_f: usize) -> DesignMatrix {
    loop {
        let n = rng.gen_range(4..=max_n);
        let f = rng.gen_range(1..=max_f);
        let density: Vec<f64> = (0..f).map(|_| rng.gen_range(0.1..0.7)).collect();
        let truth: Vec<f64> = (0..f).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let bias = rng.gen_range(-1.0..1.0);
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<u32> = (0..f).filter(|&j| rng.gen_bool(density[j])).map(|j| j as u32).collect();
            let w = bias + row.iter().map(|&j| truth[j as usize]).sum::<f64>();
            labels.push(rng.gen_bool(logistic(w)));
            rows.push(row);
        }
        let pos = labels.iter().filter(|&&l| l).count();
        if pos > 0 && pos < n {
            return DesignMatrix::from_rows(f, rows, labels).unwrap();
        }
    }
}

/// Average (fractional) ranks, 1-based, computed by counting.
pub fn fractional_ranks_by_counting(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let less = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// 1 − 6Σd²/(n(n²−1)) for tie-free rankings, evaluated as the single
/// fraction (n(n²−1) − 6Σd²) / (n(n²−1)) of exact integers.
pub fn spearman_no_ties(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as i64;
    let ra = fractional_ranks_by_counting(a);
    let rb = fractional_ranks_by_counting(b);
    let d2: i64 = ra.iter().zip(&rb).map(|(x, y)| ((x - y) as i64).pow(2)).sum();
    let denom = n * (n * n - 1);
    (denom - 6 * d2) as f64 / denom as f64
}

/// KL(Bern(α) ‖ Bern(μ)) in nats, with 0·ln 0 = 0.
pub fn bernoulli_kl(alpha: f64, mu: f64) -> f64 {
    let term = |p: f64, q: f64| if p == 0.0 { 0.0 } else { p * (p.ln() - q.ln()) };
    term(alpha, mu) + term(1.0 - alpha, 1.0 - mu)
}
