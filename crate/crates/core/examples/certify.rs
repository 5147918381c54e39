//! Searches for and certifies a free divisor for each `g,a,r` argument.
//!
//! ```text
//! cargo run --release -p freediv-core --example certify -- 4,1,1 7,1,2
//! ```

use std::time::Instant;

use freediv::{find_free_divisor, Error, SearchOptions};

fn main() {
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    for arg in std::env::args().skip(1) {
        let parts: Vec<i64> = arg.split(',').map(|x| x.trim().parse().expect("expected g,a,r")).collect();
        let [g, a, r] = parts[..] else { panic!("expected g,a,r, got {arg}") };
        let opts = SearchOptions { jobs, ..SearchOptions::default() };
        let start = Instant::now();
        match find_free_divisor(g as usize, a as usize, r, &opts) {
            Ok(w) => println!(
                "({g},{a},{r}) degree {} rank {} after {} attempts, {} points scanned, {:.2?}\n  {}",
                w.degree(),
                w.rank.rank,
                w.attempts,
                w.freeness.checked_points,
                start.elapsed(),
                w.divisor
            ),
            Err(Error::BudgetExhausted { near_misses, .. }) => {
                println!("({g},{a},{r}) budget exhausted");
                for m in near_misses.iter().take(5) {
                    println!("  {}: {}", m.divisor, m.reason);
                }
            }
            Err(e) => println!("({g},{a},{r}) {e}"),
        }
    }
}
