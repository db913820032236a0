//! Prints the first small-graph instance of each tunneling regime.
//!
//! Usage: `cargo run --example find_fixtures -- [max_n] [seed]`

use loopwalk::search::{find_fixture, FixtureKind};

fn main() {
    let mut args = std::env::args().skip(1);
    let max_n: usize = args.next().map_or(8, |a| a.parse().expect("max_n"));
    let seed: u64 = args.next().map_or(1, |a| a.parse().expect("seed"));
    for kind in FixtureKind::ALL {
        match find_fixture(kind, max_n, seed) {
            Some(f) => println!("{}", f.to_text(seed, max_n)),
            None => eprintln!("no {kind} instance with n <= {max_n}"),
        }
    }
}
