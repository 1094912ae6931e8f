//! Second-level lift of a pair of rough paths, plus the deterministic skeleton.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rough_ldp::cli::random_path;
use rough_ldp::grid::GridFunction;
use rough_ldp::lift::{chen_defect, integration_by_parts_defect, short_time_skeleton, skeleton_solve, young_bound_check, young_pair};
use rough_ldp::model::FunctionFamily;
use rough_ldp::{preset, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let z1 = random_path(&mut rng, 256)?;
    let z2 = GridFunction::from_fn(1.0, 256, |t| (3.0 * t).sin() + t * t)?;
    let lift = young_pair(&z1, &z2)?;
    println!("chen defect {:.2e}", chen_defect(&lift));
    println!("ibp defect  {:.2e}", integration_by_parts_defect(&lift));
    println!("z12 over [0,1] = {:.6}", lift.second(0, 1, 0, lift.n()));
    let b = young_bound_check(&lift, 0.45, 1.0)?;
    println!("young ratio {:.3} <= {:.3}: {}", b.ratio, b.young_constant, b.within_bound);

    // y' = (1 + y/10) a x' with a smooth control
    let a = GridFunction::from_fn(1.0, 200, |t| 1.0 + 0.5 * t)?;
    let zero = GridFunction::zeros(1.0, 200)?;
    let x = GridFunction::from_fn(1.0, 200, |t| t.sin())?;
    let sigma = FunctionFamily::Linear { m: 0.1, c: 1.0 };
    let sk = skeleton_solve(&sigma, &FunctionFamily::Constant { c: 0.0 }, &a, &zero, &x, 0.0)?;
    println!("skeleton y(1) = {:.8}", sk.y.last());

    let m = preset(Preset::RoughBergomi);
    let w = GridFunction::from_fn(1.0, 200, |t| 0.3 * t)?;
    let y = short_time_skeleton(&m, &w, &zero)?;
    println!("short-time skeleton at w = 0.3t: {:.6}", y.last());
    Ok(())
}
