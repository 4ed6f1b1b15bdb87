//! Drives the command-line interface in-process: trans, solve, simulate.

use cpomdp::cli::run_from;

fn main() {
    let work = std::env::temp_dir().join("cpomdp-example");
    let w = work.to_str().unwrap();
    let steps: [&[&str]; 4] = [
        &["cpomdp", "--work", w, "trans", "--builtin", "tiger", "--finite", "10", "--size", "40"],
        &["cpomdp", "--work", w, "solve", "--builtin", "tiger", "--budget", "30"],
        &["cpomdp", "--work", w, "simulate", "--builtin", "tiger", "--episodes", "2000"],
        &["cpomdp", "--work", w, "bounds", "--builtin", "tiger", "--finite", "10", "--size", "40", "--eval", "20"],
    ];
    for argv in steps {
        println!("$ {}", argv[1..].join(" "));
        let code = run_from(argv.iter().copied());
        if code != 0 {
            eprintln!("exited with {code}");
            std::process::exit(code);
        }
    }
}
