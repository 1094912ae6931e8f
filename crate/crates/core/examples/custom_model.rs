//! Builds a model from JSON, validates it and prints a few smile points.

use rough_ldp::model::ModelSpec;
use rough_ldp::rate;

const CONFIG: &str = r#"{
  "sigma": { "family": "constant", "c": 1.0 },
  "f": { "family": "bergomi_f", "xi": 0.09, "eta": 1.0, "H": 0.1 },
  "psi": { "family": "identity" },
  "a": { "family": "constant", "c": 1.0 },
  "b": { "family": "constant", "c": 0.0 },
  "rho": -0.9,
  "y0": 0.0,
  "a0": 0.0,
  "kernel": { "family": "riemann_liouville", "H": 0.1 }
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = ModelSpec::from_json_str(CONFIG)?;
    m.validate()?;
    println!("spot vol {:.4}", m.spot_vol());
    for note in m.deviations() {
        println!("note: {note}");
    }

    let table = rate::smile(&m, &[-0.2, -0.1, 0.1, 0.2], 96)?;
    for r in &table.rows {
        println!("x={:+.2} sigma={:.5}", r.x, r.sigma_asym);
    }

    let bad = ModelSpec::from_json_str(&CONFIG.replace("-0.9", "1.0"))?;
    println!("rho = 1 rejected: {}", bad.validate().unwrap_err());
    Ok(())
}
