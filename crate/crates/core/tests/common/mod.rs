//! Independent reference implementations shared by the integration tests
//! and the acceptance harness.
#![allow(dead_code, clippy::needless_range_loop)]

use age_core::eval::{auc, top_k};
use age_core::sampling::{NegativeTable, NoiseSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pairwise AUC with half credit for ties, O(|pos|·|neg|).
pub fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut s = 0.0;
    for p in pos {
        for n in neg {
            s += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    s / (pos.len() * neg.len()) as f64
}

/// Full sort by (score desc, id asc), then truncate.
pub fn sorted_top_k(scores: &[f64], k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..scores.len()).filter(|&i| Some(i) != skip).collect();
    ids.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    ids.truncate(k);
    ids
}

/// Scores drawn from a small grid so ties are frequent.
fn tie_heavy(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let grid = rng.random_range(2..20);
    (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                rng.random_range(0..grid) as f64 / grid as f64
            } else {
                rng.random_range(-3.0..3.0)
            }
        })
        .collect()
}

/// Largest |rank AUC - pairwise AUC| over `sets` random score sets.
pub fn auc_oracle_gap(seed: u64, sets: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..sets {
        let (np, nn) = (rng.random_range(1..80), rng.random_range(1..80));
        let pos = tie_heavy(&mut rng, np);
        let neg = tie_heavy(&mut rng, nn);
        worst = worst.max((auc(&pos, &neg).unwrap() - brute_auc(&pos, &neg)).abs());
    }
    worst
}

/// Number of instances where heap top-k disagrees with the full sort.
pub fn topk_oracle_mismatches(seed: u64, instances: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..instances {
        let n = rng.random_range(2..150);
        let scores = tie_heavy(&mut rng, n);
        let skip = rng.random_bool(0.5).then(|| rng.random_range(0..n));
        let k = rng.random_range(1..n);
        if top_k(&scores, k, skip) != sorted_top_k(&scores, k, skip) {
            bad += 1;
        }
    }
    bad
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Newton's method on `(1/n) Σ log(1+exp(-y f)) + (l2/2n)‖w‖²` with the
/// bias (last coordinate) unregularized.
pub fn newton_logreg(xs: &[Vec<f64>], y: &[f64], l2: f64) -> Vec<f64> {
    let (n, d) = (xs.len(), xs[0].len() + 1);
    let aug: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().copied().chain([1.0]).collect()).collect();
    let mut w = vec![0.0; d];
    for _ in 0..100 {
        let mut g = vec![0.0; d];
        let mut h = vec![vec![0.0; d]; d];
        for (x, &yi) in aug.iter().zip(y) {
            let f: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (yi * f).exp());
            let s = p * (1.0 - p);
            for i in 0..d {
                g[i] -= yi * p * x[i] / n as f64;
                for j in 0..d {
                    h[i][j] += s * x[i] * x[j] / n as f64;
                }
            }
        }
        for i in 0..d - 1 {
            g[i] += l2 * w[i] / n as f64;
            h[i][i] += l2 / n as f64;
        }
        let step = solve(h, g.clone());
        w.iter_mut().zip(&step).for_each(|(a, s)| *a -= s);
        if g.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-12 {
            break;
        }
    }
    w
}

/// Gaussian blobs: `n` points in `d` dims over `classes` classes.
pub fn blobs(n: usize, d: usize, classes: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        let eps = age_core::sampling::standard_normal(d, &mut rng);
        xs.push(centers[c].iter().zip(eps).map(|(m, e)| m + 0.8 * e).collect());
        ys.push(c);
    }
    (xs, ys)
}

/// Fraction of points where the trained one-vs-rest model and the Newton
/// oracle predict the same class.
pub fn logreg_agreement(seed: u64) -> f64 {
    let classes = 3;
    let (xs, ys) = blobs(100, 16, classes, seed);
    let model = age_core::eval::train_logreg_ovr(&xs, &ys, classes, 1.0, &|c| c.to_string()).unwrap();
    let oracle: Vec<Vec<f64>> = (0..classes)
        .map(|c| {
            let y: Vec<f64> = ys.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            newton_logreg(&xs, &y, 1.0)
        })
        .collect();
    let agree = xs
        .iter()
        .filter(|x| {
            let s: Vec<f64> = oracle
                .iter()
                .map(|w| x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + w[16])
                .collect();
            let mut best = 0;
            for c in 1..classes {
                if s[c] > s[best] {
                    best = c;
                }
            }
            model.predict(x) == best
        })
        .count();
    agree as f64 / xs.len() as f64
}

pub struct NoiseStats {
    /// Largest per-dimension |sample mean - mean| in units of σ/√n.
    pub mean_z: f64,
    /// Largest per-dimension |sample var / var - 1|.
    pub var_rel: f64,
}

pub fn noise_stats(n: usize, seed: u64) -> NoiseStats {
    let mean = vec![0.5, -1.0, 2.0, 0.0];
    let log_var = vec![0.0, (0.25f64).ln(), (4.0f64).ln(), (1.7f64).ln()];
    let spec = NoiseSpec::new(mean.clone(), log_var.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = mean.len();
    let (mut s1, mut s2) = (vec![0.0; d], vec![0.0; d]);
    for _ in 0..n {
        let x = spec.sample(&mut rng);
        for i in 0..d {
            s1[i] += x[i];
            s2[i] += x[i] * x[i];
        }
    }
    let mut out = NoiseStats { mean_z: 0.0, var_rel: 0.0 };
    for i in 0..d {
        let m = s1[i] / n as f64;
        let v = s2[i] / n as f64 - m * m;
        let var = log_var[i].exp();
        out.mean_z = out.mean_z.max((m - mean[i]).abs() / (var / n as f64).sqrt());
        out.var_rel = out.var_rel.max((v / var - 1.0).abs());
    }
    out
}

/// Draws from a degree-power table and returns the largest deviation of
/// any node's count from its closed-form expectation, in multinomial
/// standard deviations. Degrees 16:1 should be drawn 8:1.
pub fn negative_sampler_z(n: usize, seed: u64) -> f64 {
    let degrees = [16, 1, 0, 81, 16];
    let table = NegativeTable::from_degrees(&degrees).unwrap();
    let weights: Vec<f64> = degrees.iter().map(|&d| (d as f64).powf(0.75)).collect();
    let total: f64 = weights.iter().sum();
    let mut counts = vec![0usize; degrees.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        counts[table.sample(&mut rng)] += 1;
    }
    let mut worst: f64 = 0.0;
    for (c, w) in counts.iter().zip(&weights) {
        let p = w / total;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        let z = if sd == 0.0 {
            if *c == 0 { 0.0 } else { f64::INFINITY }
        } else {
            (*c as f64 - n as f64 * p).abs() / sd
        };
        worst = worst.max(z);
    }
    worst
}
