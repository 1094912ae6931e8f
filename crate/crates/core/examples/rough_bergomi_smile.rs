use rough_ldp::rate;
use rough_ldp::{preset, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = preset(Preset::RoughBergomi);
    let xs: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.05).collect();
    let table = rate::smile(&m, &xs, 128)?;

    println!("{:>7} {:>12} {:>10}", "x", "Lambda*", "sigma");
    for r in &table.rows {
        let mark = if r.extrapolated { " (interpolated)" } else { "" };
        println!("{:>7.3} {:>12.6} {:>10.6}{mark}", r.x, r.lambda_star, r.sigma_asym);
    }
    // negative correlation tilts the smile down to the right
    if let Some(skew) = table.atm_skew() {
        println!("atm skew {skew:.4}");
    }
    table.write_csv(std::io::stdout().lock())?;
    Ok(())
}
