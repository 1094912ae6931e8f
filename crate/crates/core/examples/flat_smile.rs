//! Constant-vol model: the rate function is z²/(2c²) and the smile is flat.

use rough_ldp::rate;
use rough_ldp::{preset, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = preset(Preset::BlackScholes);
    for z in [0.05, 0.1, 0.2] {
        let r = rate::solve_rate(&m, z, 128, 1e-8)?;
        println!("z={z:<5} J={:.8} exact={:.8} iters={}", r.value, z * z / 0.18, r.iterations);
    }

    let xs: Vec<f64> = (-3..=3).map(|k| k as f64 * 0.1).collect();
    let table = rate::smile(&m, &xs, 128)?;
    for row in &table.rows {
        println!("x={:+.2} sigma={:.6}", row.x, row.sigma_asym);
    }
    Ok(())
}
