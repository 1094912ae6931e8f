//! Small-time tail probabilities and option prices from the Euler scheme.
//! Pass a path count to override the default of 50000.

use rough_ldp::mc::{simulate_terminal, MCConfig, Side};
use rough_ldp::rate;
use rough_ldp::{preset, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_paths = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(50_000);
    let m = preset(Preset::RoughBergomi);
    let cfg = MCConfig { n_paths, n_steps: 200, ..Default::default() };
    let xs = [-0.1, 0.1];

    for x in xs {
        let ls = rate::lambda_star(&m, x, 128, rate::default_span(x), rate::DEFAULT_SCAN_POINTS)?;
        println!("x={x:+} Lambda*={:.4}", ls.value);
    }
    for &t in &cfg.maturities {
        let s = simulate_terminal(&m, t, &cfg)?;
        for x in xs {
            let tail = s.tail(x)?;
            let px = s.price(x, Side::otm(x))?;
            let stat = tail.rate_stat.map_or("-".into(), |r| format!("{r:.4}"));
            println!(
                "t={t:<5} x={x:+} p={:.4}±{:.4} rate_stat={stat} {}={:.3e}",
                tail.p_hat,
                tail.ci_halfwidth,
                px.side.name(),
                px.price
            );
        }
    }
    Ok(())
}
