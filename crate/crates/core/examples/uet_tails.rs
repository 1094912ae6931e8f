use rough_ldp::mc::{uet_tail_experiment, Integrand, MCConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MCConfig { n_paths: 10_000, n_steps: 128, maturities: vec![], ..Default::default() };
    let integrands = [Integrand::UnitConstant, Integrand::SignSwitch, Integrand::ClippedBrownian];
    let rep = uet_tail_experiment(0.4, &[0.5, 0.2, 0.1], &[0.5, 1.0, 1.5], &integrands, &cfg)?;

    for f in &rep.fits {
        println!(
            "{:<17} slope={:+.3} R2={:.3} cells={} p_U/p_1<={:.2}",
            f.integrand.name(),
            f.slope,
            f.r_squared,
            f.cells_used,
            f.domination_ratio
        );
    }
    rep.write_csv(std::io::stdout().lock())?;
    Ok(())
}
