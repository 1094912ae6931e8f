//! Minimises the rate functional for each preset and prints the optimal control.

use rough_ldp::rate::{self, RateProblem};
use rough_ldp::{preset, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let z = 0.15;
    for p in Preset::ALL {
        let m = preset(p);
        let r = rate::solve_rate(&m, z, 128, 1e-8)?;
        println!(
            "{:<18} J({z})={:.6} |grad|={:.1e} start={} converged={} mode={:?}",
            p.name(),
            r.value,
            r.grad_norm,
            r.start_label,
            r.converged,
            r.gradient_mode
        );

        let prob = RateProblem::new(&m, z, 128)?;
        let h = prob.orthogonal_control(&r.control)?;
        let energy = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        println!("    |g|^2/2={:.6} |h|^2/2={:.6}", 0.5 * energy(&r.control), 0.5 * energy(&h));
    }
    Ok(())
}
