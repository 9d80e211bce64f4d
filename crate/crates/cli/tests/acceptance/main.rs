//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::{Duration, Instant};

#[path = "../common/mod.rs"]
mod common;

mod describer;
mod fps;
mod kinematics;
mod metrics;
mod mix;
mod pres3;
mod protocol;
mod tal;

pub type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

pub fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

const BUDGET: Duration = Duration::from_secs(300);

fn main() {
    let criteria: [Criterion; 8] = [
        ("metric oracles", metrics::run),
        ("protocol fixture", protocol::run),
        ("tal end-to-end", tal::run),
        ("fps correctness", fps::run),
        ("describer determinism and symmetry", describer::run),
        ("kinematics numerics", kinematics::run),
        ("pres3 mock pipeline", pres3::run),
        ("mix ratios", mix::run),
    ];
    let started = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {}: {name} ({detail}; {secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}: {name} ({why}; {secs:.2}s)", i + 1);
            }
        }
    }
    let total = started.elapsed();
    if total < BUDGET {
        println!(
            "PASS 9: runtime ({:.1}s of {}s budget, mock client only)",
            total.as_secs_f64(),
            BUDGET.as_secs()
        );
    } else {
        failed += 1;
        println!(
            "FAIL 9: runtime ({:.1}s exceeds {}s)",
            total.as_secs_f64(),
            BUDGET.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
