//! Prints the standard sweep tables and worst cases.
use tandem_clearing::evaluation::{run_sweep, SweepSpec};

fn main() {
    let t = std::time::Instant::now();
    let report = run_sweep(&SweepSpec::standard()).expect("sweep");
    print!("{}", report.summary_text());
    print!("{}", report.worstcases_text());
    println!("elapsed {:?}", t.elapsed());
}
