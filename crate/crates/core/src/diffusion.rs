//! Diffusion with absorption at the origin, acting on integral kernels `omega(x, y)`.
//!
//! The generator moves both arguments together along the diagonal direction,
//! so `S_t` acts on each line `y - x = const` as the absorbed heat semigroup
//! in the smaller coordinate. Kernels live on a uniform grid over `[0, X]^2`
//! and are treated as zero outside it.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// `omega(i h, j h)` for `0 <= i, j <= M`, `X = M h`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelGrid {
    x_max: f64,
    h: f64,
    values: DMatrix<f64>,
}

impl KernelGrid {
    pub fn new(x_max: f64, h: f64, values: DMatrix<f64>) -> Result<Self> {
        let m = grid_steps(x_max, h)?;
        if values.nrows() != m + 1 || values.ncols() != m + 1 {
            return Err(Error::DimensionMismatch {
                expected: m + 1,
                found: values.nrows().max(values.ncols()),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: k % (m + 1),
                col: k / (m + 1),
            });
        }
        Ok(Self { x_max, h, values })
    }

    pub fn zeros(x_max: f64, h: f64) -> Result<Self> {
        let m = grid_steps(x_max, h)?;
        Ok(Self {
            x_max,
            h,
            values: DMatrix::zeros(m + 1, m + 1),
        })
    }

    pub fn from_fn(x_max: f64, h: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let m = grid_steps(x_max, h)?;
        Self::new(x_max, h, DMatrix::from_fn(m + 1, m + 1, |i, j| f(i as f64 * h, j as f64 * h)))
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of grid intervals `M`.
    pub fn steps(&self) -> usize {
        self.values.nrows() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.amax()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.values.shape() != other.values.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.values.nrows(),
                found: other.values.nrows(),
            });
        }
        Ok((&self.values - &other.values).amax())
    }

    /// Largest coordinate at which `|omega|` exceeds `1e-12` of its maximum.
    pub fn support_extent(&self) -> f64 {
        let cut = 1e-12 * self.max_abs();
        let m = self.steps();
        let mut last = 0;
        for j in 0..=m {
            for i in 0..=m {
                if self.values[(i, j)].abs() > cut {
                    last = last.max(i.max(j));
                }
            }
        }
        last as f64 * self.h
    }

    /// CSV with a metadata row `X,h` followed by `M + 1` rows of values.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:.16e},{:.16e}", self.x_max, self.h);
        for i in 0..self.values.nrows() {
            for j in 0..self.values.ncols() {
                if j > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{:.16e}", self.values[(i, j)]);
            }
            s.push('\n');
        }
        s
    }

    /// Inverse of [`KernelGrid::to_csv`]; lines starting with `#` are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let parse_row = |(n, line): (usize, &str)| -> Result<Vec<f64>> {
            line.split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", n + 1)))
                })
                .collect()
        };
        let meta = parse_row(rows.next().ok_or_else(|| Error::InvalidArgument("empty kernel file".into()))?)?;
        let [x_max, h] = meta[..] else {
            return Err(Error::InvalidArgument("metadata row must be `X,h`".into()));
        };
        let m = grid_steps(x_max, h)?;
        let mut values = DMatrix::zeros(m + 1, m + 1);
        let mut count = 0;
        for row in rows {
            let r = parse_row(row)?;
            if count > m || r.len() != m + 1 {
                return Err(Error::DimensionMismatch {
                    expected: m + 1,
                    found: if count > m { count + 1 } else { r.len() },
                });
            }
            for (j, v) in r.into_iter().enumerate() {
                values[(count, j)] = v;
            }
            count += 1;
        }
        if count != m + 1 {
            return Err(Error::DimensionMismatch {
                expected: m + 1,
                found: count,
            });
        }
        Self::new(x_max, h, values)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::from_csv(&text)
    }

    /// Entries along the line `i - j = d` (`d` may be negative), indexed by `min(i, j)`.
    fn line(&self, d: isize) -> Vec<f64> {
        let m = self.steps();
        let off = d.unsigned_abs();
        (0..=m - off)
            .map(|k| if d >= 0 { self.values[(k + off, k)] } else { self.values[(k, k + off)] })
            .collect()
    }

    fn from_lines(&self, lines: Vec<Vec<f64>>) -> Self {
        let m = self.steps();
        let mut values = DMatrix::zeros(m + 1, m + 1);
        for (idx, line) in lines.into_iter().enumerate() {
            let d = idx as isize - m as isize;
            let off = d.unsigned_abs();
            for (k, v) in line.into_iter().enumerate() {
                if d >= 0 {
                    values[(k + off, k)] = v;
                } else {
                    values[(k, k + off)] = v;
                }
            }
        }
        Self {
            x_max: self.x_max,
            h: self.h,
            values,
        }
    }
}

fn grid_steps(x_max: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !h.is_finite() || !(x_max > 0.0) || !x_max.is_finite() {
        return Err(Error::InvalidArgument(format!("need X > 0 and h > 0, got X={x_max}, h={h}")));
    }
    let m = (x_max / h).round();
    if m < 2.0 || (m * h - x_max).abs() > 1e-9 * x_max {
        return Err(Error::InvalidArgument(format!("X={x_max} is not a multiple (>= 2) of h={h}")));
    }
    Ok(m as usize)
}

/// Complementary error function; `erfc(-x) = 2 - erfc(x)` holds exactly.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        2.0 - libm::erfc(-x)
    } else {
        libm::erfc(x)
    }
}

/// Quadrature weights `w[a][k]` with `(S omega)(a) = sum_k w[a][k] omega(k)` along a line.
struct Weights {
    n: usize,
    w: Vec<f64>,
    /// Half-width of the nonzero band around `k = a`.
    window: usize,
}

impl Weights {
    fn row(&self, a: usize) -> &[f64] {
        &self.w[a * self.n..(a + 1) * self.n]
    }
}

/// Absorbed heat kernel of variance `2t`.
///
/// While the Gaussian is resolved by the grid (`sqrt(2t) >= h`) this is the
/// trapezoid rule. Below that the trapezoid rule aliases, and the kernel is
/// replaced by the three-point stencil with the same moments up to order
/// three, `omega + t omega''`, applied to the odd extension of `omega`.
fn heat_weights(m: usize, h: f64, t: f64) -> Weights {
    let n = m + 1;
    let mut w = vec![0.0; n * n];
    if (2.0 * t).sqrt() < h {
        let c = t / (h * h);
        for a in 1..=m {
            w[a * n + a] = 1.0 - 2.0 * c;
            w[a * n + a - 1] = c;
            if a < m {
                w[a * n + a + 1] = c;
            }
        }
        return Weights { n, w, window: 1 };
    }
    let window = ((13.0 * t.sqrt() / h).ceil() as usize + 2).min(m);
    let norm = 1.0 / (2.0 * (std::f64::consts::PI * t).sqrt());
    w.par_chunks_mut(n).enumerate().for_each(|(a, row)| {
        let lo = a.saturating_sub(window);
        let hi = (a + window).min(m);
        let x = a as f64 * h;
        for (k, slot) in row.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let xi = k as f64 * h;
            let direct = (-(x - xi).powi(2) / (4.0 * t)).exp();
            let image = (-(x + xi).powi(2) / (4.0 * t)).exp();
            let end = if k == 0 || k == m { 0.5 } else { 1.0 };
            *slot = end * h * norm * (direct - image);
        }
    });
    Weights { n, w, window }
}

/// `f(xi) = (2 sqrt(lambda))^-1 (e^{-sqrt(lambda)|x - xi|} - e^{-sqrt(lambda)(x + xi)})`, trapezoid weights.
fn resolvent_weights(m: usize, h: f64, lambda: f64) -> Weights {
    let n = m + 1;
    let r = lambda.sqrt();
    let mut w = vec![0.0; n * n];
    w.par_chunks_mut(n).enumerate().for_each(|(a, row)| {
        let x = a as f64 * h;
        for (k, slot) in row.iter_mut().enumerate() {
            let xi = k as f64 * h;
            let end = if k == 0 || k == m { 0.5 } else { 1.0 };
            *slot = end * h * ((-r * (x - xi).abs()).exp() - (-r * (x + xi)).exp()) / (2.0 * r);
        }
    });
    Weights { n, w, window: m }
}

fn apply_weights(omega: &KernelGrid, weights: &Weights, kink: f64) -> KernelGrid {
    let m = omega.steps();
    let lines: Vec<Vec<f64>> = (0..=2 * m)
        .into_par_iter()
        .map(|idx| {
            let d = idx as isize - m as isize;
            let line = omega.line(d);
            (0..line.len())
                .map(|a| {
                    let lo = a.saturating_sub(weights.window);
                    let hi = (a + weights.window).min(line.len() - 1);
                    let row = &weights.row(a)[lo..=hi];
                    let s: f64 = row.iter().zip(&line[lo..=hi]).map(|(w, v)| w * v).sum();
                    s + kink * line[a]
                })
                .collect()
        })
        .collect();
    let mut out = omega.from_lines(lines);
    // the reflected kernel vanishes identically on the boundary
    out.values.row_mut(0).fill(0.0);
    out.values.column_mut(0).fill(0.0);
    out
}

/// `(S_t omega)(x, y) = int_0^inf K_t(min(x, y), xi) omega(xi + [x - y]_+, xi + [y - x]_+) dxi`
/// with the absorbed heat kernel `K_t`.
///
/// Requires `X >= extent + 8 sqrt(t)`, where `extent` is
/// [`KernelGrid::support_extent`].
pub fn dd_semigroup(omega: &KernelGrid, t: f64) -> Result<KernelGrid> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    let extent = omega.support_extent();
    let margin = 8.0 * t.sqrt();
    if omega.max_abs() > 0.0 && omega.x_max < extent + margin {
        return Err(Error::TailControl {
            extent,
            margin,
            cutoff: omega.x_max,
        });
    }
    let weights = heat_weights(omega.steps(), omega.h, t);
    Ok(apply_weights(omega, &weights, 0.0))
}

/// Resolvent `(lambda - L)^{-1}` of the same diffusion, by trapezoid quadrature.
///
/// The kernel has a kink at `xi = min(x, y)`, which is a grid node; the
/// leading Euler-Maclaurin term of that kink is added back.
pub fn dd_resolvent(omega: &KernelGrid, lambda: f64) -> Result<KernelGrid> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    let weights = resolvent_weights(omega.steps(), omega.h, lambda);
    Ok(apply_weights(omega, &weights, -omega.h * omega.h / 12.0))
}

fn trapezoid(h: f64, f: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = f.collect();
    let n = v.len();
    h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1]))
}

/// `int omega(xi, xi) dxi`.
pub fn dd_trace(omega: &KernelGrid) -> f64 {
    trapezoid(omega.h, (0..=omega.steps()).map(|k| omega.get(k, k)))
}

/// `int erfc(xi / 2 sqrt(t)) omega(xi, xi) dxi`, the trace lost by time `t`.
pub fn dd_trace_loss(omega: &KernelGrid, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    let s = 2.0 * t.sqrt();
    Ok(trapezoid(
        omega.h,
        (0..=omega.steps()).map(|k| erfc(k as f64 * omega.h / s) * omega.get(k, k)),
    ))
}

/// `Lambda = d/dxi omega(xi, xi)` at `xi = 0`, by the one-sided three-point stencil with `omega(0, 0) = 0`.
pub fn diagonal_slope(omega: &KernelGrid) -> f64 {
    (4.0 * omega.get(1, 1) - omega.get(2, 2)) / (2.0 * omega.h)
}
