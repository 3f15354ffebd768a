//! Times both exposure paths over a rising shot count and prints the
//! crossover table. The exact path costs one grid pass per shot; the fast
//! path pays a fixed transform cost regardless of count.
//!
//! Timings run single-threaded inside the library's private benchmark
//! pool, so the numbers compare algorithms rather than core counts.

use ebeam_mdp::model::EblParams;
use ebeam_mdp::{bench_csv, benchmark_methods};

fn main() {
    let counts = [1, 10, 50, 100, 500, 1000];
    let rows = benchmark_methods(&counts, 512, 3, &EblParams::default(), 0.5, 42)
        .expect("valid benchmark request");

    println!("{}", bench_csv(&rows).trim_end());

    let crossover = rows.iter().find(|r| r.fast_ms < r.exact_ms);
    match crossover {
        Some(row) => println!("\nfast path wins from {} shots up", row.n_shots),
        None => println!("\nno crossover in this range; raise the shot count"),
    }
}
