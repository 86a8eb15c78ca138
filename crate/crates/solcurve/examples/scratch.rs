//! Temporary diagnostic: turn counts across the acceptance matrix.

use solcurve::curve::trace;
use solcurve::problems::ProblemSpec;
use std::time::Instant;

fn main() {
    // Criterion 1: n in 3..=9, alpha = 0, t_max = 1e6, expect >= 4 turns.
    for n in 3..=9 {
        let spec = ProblemSpec::gelfand_exp(n as f64, 0.0).unwrap();
        let t0 = Instant::now();
        let curve = trace(&spec, 1e6, 200).unwrap();
        let el = t0.elapsed().as_secs_f64();
        let turns = curve.turns();
        let crossings = curve.guiding_crossings().len();
        print!(
            "gelfand n={n}: {} turns, {} crossings, {:.2}s |",
            turns.len(),
            crossings,
            el
        );
        for tp in turns {
            print!(" ({:.4}, {:+.3e})", tp.t, tp.lambda_minus_star.unwrap());
        }
        println!();
    }
    // Criterion 2: monotone regime.
    for n in [10.0, 12.0, 16.0] {
        let spec = ProblemSpec::gelfand_exp(n, 0.0).unwrap();
        let curve = trace(&spec, 1e6, 200).unwrap();
        let min_ind = curve
            .points()
            .iter()
            .map(|p| p.indicator)
            .fold(f64::INFINITY, f64::min);
        let max_off = curve
            .points()
            .iter()
            .map(|p| curve.guiding_offset(p.t).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        println!(
            "gelfand n={n}: {} turns, {} crossings, min indicator {:+.2e}, max w-w0 {:+.2e}",
            curve.turns().len(),
            curve.guiding_crossings().len(),
            min_ind,
            max_off
        );
    }
    // Criterion 4: generalized threshold.
    for (n, alpha) in [(12.0, 1.0), (14.0, 1.0)] {
        let spec = ProblemSpec::gelfand_exp(n, alpha).unwrap();
        let curve = trace(&spec, 1e6, 200).unwrap();
        print!(
            "gelfand n={n} alpha={alpha}: {} turns |",
            curve.turns().len()
        );
        for tp in curve.turns() {
            print!(" ({:.3}, {:+.2e})", tp.t, tp.lambda_minus_star.unwrap());
        }
        println!();
    }
    // Criterion 5: MEMS cases.
    for (n, alpha, p, t_max) in [(2.0, 0.2, 2.0, 1e4), (8.0, 0.0, 2.0, 1e6)] {
        let spec = ProblemSpec::mems(n, alpha, p).unwrap();
        let curve = trace(&spec, t_max, 200).unwrap();
        let last = *curve.points().last().unwrap();
        print!(
            "mems n={n} alpha={alpha} p={p}: {} turns, end (u0={:.6}, lambda={:.8}, star={:.8}) |",
            curve.turns().len(),
            last.u0,
            last.lambda,
            curve.lambda_star().unwrap()
        );
        for tp in curve.turns() {
            print!(" ({:.4}, l={:.6}, u0={:.4})", tp.t, tp.lambda, tp.u0);
        }
        println!();
    }
}
