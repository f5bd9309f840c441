//! Dev probe for solver timings (not part of the artifact surface).

use guiltycut::drivers::{Mode, SolverConfig};
use guiltycut::oracle::corpus::{corpus_get, default_start};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let problem = args.get(1).map(String::as_str).unwrap_or("valley1d");
    if args.get(2).map(String::as_str) == Some("sweep") {
        let eps: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1e-2);
        let mode = Mode::parse(args.get(4).map(String::as_str).unwrap_or("guarded")).unwrap();
        let t0 = Instant::now();
        let cells = guiltycut::suites::scaling_points(
            problem,
            mode,
            &[eps],
            1,
            &guiltycut::CenterOracle::analytic(),
        )
        .unwrap();
        println!(
            "sweep {} {} eps={:.0e}: m={} wall={:.2}s",
            problem,
            mode.as_str(),
            eps,
            cells[0].1,
            t0.elapsed().as_secs_f64()
        );
        return;
    }
    let mode = Mode::parse(args.get(2).map(String::as_str).unwrap_or("guarded")).unwrap();
    let eps: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1e-2);
    let f = corpus_get(problem).unwrap();
    let z0 = default_start(&f);
    let mut cfg = SolverConfig::new(mode, eps);
    cfg.seed = 1;
    if mode == Mode::GdBaseline {
        cfg.max_outer = 50_000_000;
        if problem == "valley1d" {
            cfg.l1 = Some(1.01);
        }
    }
    let t0 = Instant::now();
    match guiltycut::run_solver(&f, &z0, &cfg) {
        Ok(r) => println!(
            "{} {} eps={:.0e}: m={} gn={:.2e} lam={:?} kbar={:.2} wall={:.2}s",
            problem,
            mode.as_str(),
            eps,
            r.outer_iterations,
            r.final_grad_norm,
            r.final_lambda_min,
            r.k_bar,
            t0.elapsed().as_secs_f64()
        ),
        Err(e) => println!("{problem} {} eps={eps:.0e}: ERROR {e}", mode.as_str()),
    }
}
