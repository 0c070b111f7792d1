//! Absorbing diffusion acting on kernels: how fast trace leaks through the
//! boundary depends on the kernel's slope on the diagonal at the origin.

use semigroup_lab::diffusion::{dd_resolvent, dd_semigroup, dd_trace, dd_trace_loss, diagonal_slope, KernelGrid};
use semigroup_lab::Result;

fn main() -> Result<()> {
    let phi = |x: f64| x * (-2.0 * (x - 2.0) * (x - 2.0)).exp();
    let pure = KernelGrid::from_fn(10.0, 0.01, |x, y| phi(x) * phi(y))?;
    let mixed = dd_resolvent(&pure, 1.0)?;

    for (name, w) in [("pure state", &pure), ("resolvent image", &mixed)] {
        println!("{name}: trace {:.6}, diagonal slope {:.3e}", dd_trace(w), diagonal_slope(w));
        for t in [1e-3, 1e-2, 1e-1] {
            let loss = dd_trace_loss(w, t)?;
            // the resolvent image reaches the domain edge, where evolving it in full is refused
            let evolved = match dd_semigroup(w, t) {
                Ok(s) => format!("{:.6}", dd_trace(&s)),
                Err(_) => "(tail too wide)".to_string(),
            };
            println!("  t={t:<6} loss {loss:.4e}  loss/t {:.4e}  trace after {evolved}", loss / t);
        }
    }
    Ok(())
}
