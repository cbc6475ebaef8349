//! Prints per-stage wall timings of the sequential and monolithic solve
//! paths on a synthetic operator set, for quick cost inspection:
//!
//! ```text
//! cargo run --release -p jumpbem --example cost_probe -- 1500
//! ```

use jumpbem::solver::{solve_monolithic, solve_sequential, SolveOptions};
use jumpbem::synthetic::{synthetic_jump_data, synthetic_operator_set};

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1500);
    let ops = synthetic_operator_set(n, 42);
    let data = synthetic_jump_data(&ops, 43, 2.0, 0.5).unwrap();
    let opts = SolveOptions::default();
    for rep in 0..2 {
        let seq = solve_sequential(&ops, &data, &opts).unwrap();
        let mono = solve_monolithic(&ops, &data, &opts).unwrap();
        println!("rep {rep} sequential total {:.3}s", seq.report.total_seconds());
        for st in &seq.report.stage_times {
            println!("  {:<28} {:.3}s", st.stage, st.seconds);
        }
        println!("rep {rep} monolithic total {:.3}s", mono.report.total_seconds());
        for st in &mono.report.stage_times {
            println!("  {:<28} {:.3}s", st.stage, st.seconds);
        }
    }
}
