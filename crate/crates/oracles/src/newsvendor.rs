//! Monte-Carlo newsvendor optimum.
//!
//! Draws demand from N(μ, σ) truncated at zero, then scans a grid of order
//! quantities over [μ − 4σ, μ + 4σ]. The draws are histogrammed onto the grid
//! so each candidate Q is evaluated exactly against all draws in O(1) via
//! prefix sums, which keeps 10⁶ draws per scenario affordable.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub struct McScenario {
    pub price: f64,
    pub cost: f64,
    pub salvage: f64,
    pub mu: f64,
    pub sigma: f64,
}

/// Profit of ordering `q` when demand is `d`.
pub fn profit(sc: &McScenario, q: f64, d: f64) -> f64 {
    sc.price * q.min(d) + sc.salvage * (q - d).max(0.0) - sc.cost * q
}

/// Grid point with the highest sample-mean profit. The grid has step
/// `grid_step_sigma · σ`.
pub fn mc_argmax(sc: &McScenario, draws: usize, grid_step_sigma: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(sc.mu, sc.sigma).unwrap();
    let lo = sc.mu - 4.0 * sc.sigma;
    let step = grid_step_sigma * sc.sigma;
    let n_grid = (8.0 / grid_step_sigma).round() as usize + 1;
    let grid: Vec<f64> = (0..n_grid).map(|i| lo + i as f64 * step).collect();

    // For a grid point q: E[min(q, D)] = Σ_{d<q} d + q · #{d ≥ q}, all / n.
    // Bucket b collects draws in [grid[b-1], grid[b]); bucket 0 is below grid[0].
    let mut count = vec![0u64; n_grid + 1];
    let mut sum = vec![0f64; n_grid + 1];
    for _ in 0..draws {
        let d = normal.sample(&mut rng).max(0.0);
        let b = if d < lo {
            0
        } else {
            (((d - lo) / step).floor() as usize + 1).min(n_grid)
        };
        count[b] += 1;
        sum[b] += d;
    }

    let n = draws as f64;
    let (mut below_cnt, mut below_sum) = (0u64, 0f64);
    let mut best = (f64::NEG_INFINITY, lo);
    for (i, &q) in grid.iter().enumerate() {
        below_cnt += count[i];
        below_sum += sum[i];
        let above = n - below_cnt as f64;
        let sold = (below_sum + q * above) / n;
        let leftover = q - sold;
        let value = sc.price * sold + sc.salvage * leftover - sc.cost * q;
        if value > best.0 {
            best = (value, q);
        }
    }
    best.1
}
