use std::f64::consts::PI;

use rough_ldp::approx::{g_delta, gdelta_convergence, riemann_stieltjes, stopping_times};
use rough_ldp::grid::{holder_dist, GridFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = GridFunction::from_fn(1.0, 1024, |t| (2.0 * PI * t).sin())?;
    let x = GridFunction::from_fn(1.0, 1024, |t| t + (4.0 * PI * t).sin() / 4.0)?;
    let exact = riemann_stieltjes(&a, &x)?;

    for delta in [0.5, 0.1, 0.02] {
        let part = stopping_times(&a, delta)?;
        let g = g_delta(&a, &x, delta)?;
        println!(
            "delta={delta:<5} stops={:<4} end={:+.6} dist={:.3e}",
            part.taus.len(),
            g.last(),
            holder_dist(&g, &exact, 0.3)?
        );
    }

    let rep = gdelta_convergence(&a, &x, 0.3, &[0.5, 0.25, 0.1, 0.05, 0.02])?;
    println!("monotone={} final={:.3e}", rep.monotone, rep.final_distance);
    rep.write_csv(std::io::stdout().lock())?;
    Ok(())
}
