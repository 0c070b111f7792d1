//! The left shift on the half-line: every bit of amplitude reaches the
//! origin, at the time equal to its starting position.

use semigroup_lab::trajectory::shift_arrival_density;
use semigroup_lab::{Result, C64};

fn main() -> Result<()> {
    let h = 1e-3;
    let psi: Vec<C64> = (0..=4000)
        .map(|i| {
            let x = i as f64 * h;
            let s = if (1.0..=2.0).contains(&x) { (std::f64::consts::PI * (x - 1.0)).sin() } else { 0.0 };
            C64::new(s * s, 0.0)
        })
        .collect();
    let out = shift_arrival_density(&psi, h)?;
    for i in (0..out.times.len()).step_by(500) {
        println!("t={:.2}  density {:.6}  arrived {:.6}", out.times[i], out.density[i], out.cumulative[i]);
    }
    println!("||psi||^2 = {:.9}", out.norm_sq);
    Ok(())
}
