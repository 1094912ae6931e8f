use rough_ldp::grid::GridFunction;
use rough_ldp::kernels::{kernel_eval, keps_convergence_report, KernelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kernels = [
        KernelSpec::riemann_liouville(0.3),
        KernelSpec::gamma_fractional(-0.2, -1.0),
        KernelSpec::power_law(-0.2, 1.0),
    ];
    for k in &kernels {
        println!("{:?} mu={} kappa(0.5)={:.6}", k.family, k.mu(), kernel_eval(k, 0.5)?);
    }

    let paths = vec![
        GridFunction::from_fn(1.0, 512, |t| t.powf(0.45))?,
        GridFunction::from_fn(1.0, 512, |t| (6.0 * t).sin())?,
    ];
    let ladder: Vec<f64> = (0..7).map(|k| 0.5f64.powi(k)).collect();
    for k in &kernels {
        let rep = keps_convergence_report(k, &paths, &ladder, k.gamma())?;
        if k.is_riemann_liouville() {
            // the RL kernel is exactly scale invariant, so every distance is zero
            let worst = rep.rows.iter().map(|r| r.distance).fold(0.0, f64::max);
            println!("{}: max distance {worst:.1e}", k.family.name());
            continue;
        }
        let ratios: Vec<String> = rep.ratios(0).iter().map(|r| format!("{r:.3}")).collect();
        println!("{}: halving ratios {}", k.family.name(), ratios.join(" "));
    }
    Ok(())
}
