// scratch: run verify suites from the command line during development
fn main() {
    let args: Vec<String> = std::env::args().collect();
    let suite = args.get(1).map(|s| s.as_str()).unwrap_or("plateau");
    let samples: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let opts = rhodos::verify::VerifyOptions { seed: 42, samples };
    let t0 = std::time::Instant::now();
    match rhodos::verify::run_suite(suite, &opts) {
        Ok(rep) => {
            for c in &rep.checks {
                println!("{} {} — {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("[{suite}] {} in {:.1?}", if rep.passed() { "ok" } else { "FAILED" }, t0.elapsed());
        }
        Err(e) => println!("[{suite}] error: {e}"),
    }
}
