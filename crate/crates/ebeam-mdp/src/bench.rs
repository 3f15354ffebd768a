//! Wall-clock comparison of the exact per-shot exposure path against the
//! dose-map/convolution path, over a sweep of shot counts.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::total_energy;
use crate::fast::FastModel;
use crate::model::{EblParams, Shot, ShotBounds, ShotSet};

/// Column header of the benchmark CSV.
pub const BENCH_CSV_HEADER: &str = "n_shots,exact_ms,fast_ms";

/// One sweep point: median wall-clock milliseconds for both paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub n_shots: usize,
    pub exact_ms: f64,
    pub fast_ms: f64,
}

/// Renders benchmark rows as CSV.
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.n_shots, r.exact_ms, r.fast_ms));
    }
    out
}

/// Draws `n` random valid shots with integer geometry, each placed at
/// least `margin` pixels from every grid border. Deterministic in the RNG
/// state.
pub fn random_shot_set(
    rng: &mut ChaCha8Rng,
    n: usize,
    grid: usize,
    bounds: &ShotBounds,
    margin: f64,
) -> Result<ShotSet> {
    let margin = margin.ceil().max(0.0) as i64;
    let grid_i = grid as i64;
    let room = grid_i - 2 * margin - bounds.w_min.max(bounds.h_min);
    if room < 1 {
        return Err(Error::invalid(format!(
            "grid {grid} leaves no interior for shots with margin {margin}"
        )));
    }
    let shots = (0..n)
        .map(|_| {
            let w = rng.gen_range(bounds.w_min..=bounds.w_max.min(grid_i - 2 * margin));
            let h = rng.gen_range(bounds.h_min..=bounds.h_max.min(grid_i - 2 * margin));
            let x = rng.gen_range(margin..=grid_i - margin - w);
            let y = rng.gen_range(margin..=grid_i - margin - h);
            let d = rng.gen_range(bounds.d_min..=bounds.d_max);
            Shot::new(x as f64, y as f64, w as f64, h as f64, d, 1.0)
        })
        .collect();
    Ok(ShotSet::new(shots, grid))
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}

fn time_ms(mut f: impl FnMut()) -> f64 {
    let start = Instant::now();
    f();
    start.elapsed().as_secs_f64() * 1e3
}

/// Times both exposure paths on randomized valid shot sets and reports the
/// per-count medians over `trials` runs.
///
/// Timed regions run inside a private single-threaded worker pool so the
/// comparison is fair regardless of the caller's parallelism settings; the
/// fast-path timing includes transform-plan and kernel construction (the
/// cold cost a single invocation pays).
pub fn benchmark_methods(
    shot_counts: &[usize],
    grid: usize,
    trials: usize,
    ebl: &EblParams,
    sigma_prime: f64,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if shot_counts.is_empty() {
        return Err(Error::invalid("shot count list must be nonempty"));
    }
    if !shot_counts.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("shot counts must be strictly ascending"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    ebl.validate()?;
    if !(sigma_prime > 0.0) {
        return Err(Error::invalid("sigma_prime must be positive"));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;

    let bounds = ShotBounds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(shot_counts.len());
    for &n in shot_counts {
        let shots = random_shot_set(&mut rng, n, grid, &bounds, 0.0)?;
        let exact_samples: Vec<f64> = (0..trials)
            .map(|_| pool.install(|| time_ms(|| drop(total_energy(&shots, ebl)))))
            .collect();
        let fast_samples: Vec<f64> = (0..trials)
            .map(|_| {
                pool.install(|| {
                    time_ms(|| {
                        let model = FastModel::new(grid, ebl, sigma_prime);
                        drop(model.energy(&shots));
                    })
                })
            })
            .collect();
        rows.push(BenchRow {
            n_shots: n,
            exact_ms: median(exact_samples),
            fast_ms: median(fast_samples),
        });
    }
    Ok(rows)
}
