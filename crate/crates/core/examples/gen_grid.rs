//! Writes a random-weight grid road network in DIMACS .gr format.
//!
//! cargo run -p knn-index --example gen_grid -- ROWS COLS SEED > grid.gr

use std::io::Write;

use knn_index::{generate_grid, WeightRange};

fn main() {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("arguments are integers"))
        .collect();
    let [rows, cols, seed] = args[..] else {
        eprintln!("usage: gen_grid ROWS COLS SEED");
        std::process::exit(1);
    };
    let g = generate_grid(rows as usize, cols as usize, WeightRange::new(1, 1000).unwrap(), seed)
        .unwrap_or_else(|e| {
            eprintln!("error: {e}");
            std::process::exit(1);
        });
    std::io::stdout().write_all(g.to_dimacs().as_bytes()).unwrap();
}
