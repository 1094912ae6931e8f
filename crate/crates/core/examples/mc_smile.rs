use rough_ldp::mc::{bs_price, implied_vol, smile_convergence_report, MCConfig, Side};
use rough_ldp::{preset, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // round trip through the Black-Scholes formula first
    let p = bs_price(1.0, 0.9, 0.2 * 0.5f64.sqrt(), Side::Put);
    println!("put(K=0.9, vol 0.2, t=0.5) = {p:.6}, implied {:.6}", implied_vol(p, 1.0, 0.9, 0.5, Side::Put)?);

    let m = preset(Preset::RoughBergomi);
    let cfg = MCConfig { n_paths: 40_000, n_steps: 200, ..Default::default() };
    let rep = smile_convergence_report(&m, &[-0.1, 0.1], &[0.1, 0.05, 0.02], &cfg)?;
    for c in &rep.cells {
        println!(
            "t={:<5} x={:+} {} iv={} target={:.4}",
            c.t,
            c.x,
            c.side.name(),
            c.implied_vol.map_or("-".into(), |v| format!("{v:.4}")),
            c.target
        );
    }
    println!("put side gaps shrink: {}", rep.trend_ok(-0.1));
    Ok(())
}
