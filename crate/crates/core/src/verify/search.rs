use super::GOLDEN_ITERS;
use crate::divergences::golden_max;
use crate::Result;

/// Result of a one-dimensional minimisation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Opt {
    pub x: f64,
    pub value: f64,
    /// Best value on the grid alone.
    pub grid_value: f64,
}

/// Minimises `f` on `points` (ascending, inside `[lo, hi]`), then runs a
/// golden-section search between the neighbours of the best point.
pub(crate) fn refine_min(
    points: &[f64],
    lo: f64,
    hi: f64,
    refine: bool,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<Opt> {
    let mut best = (f64::NAN, f64::INFINITY);
    let mut k_best = 0;
    for (k, &x) in points.iter().enumerate() {
        let v = f(x)?;
        if best.0.is_nan() || v < best.1 {
            best = (x, v);
            k_best = k;
        }
    }
    let grid_value = best.1;
    if refine && grid_value.is_finite() && !points.is_empty() {
        let a = if k_best == 0 { lo } else { points[k_best - 1] };
        let b = if k_best + 1 == points.len() { hi } else { points[k_best + 1] };
        if b > a {
            let (x, v) = golden_max(a, b, GOLDEN_ITERS, |x| f(x).map(|v| -v))?;
            if -v < best.1 {
                best = (x, -v);
            }
        }
    }
    Ok(Opt { x: best.0, value: best.1, grid_value })
}

/// Maximisation counterpart of [`refine_min`].
pub(crate) fn refine_max(
    points: &[f64],
    lo: f64,
    hi: f64,
    refine: bool,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<Opt> {
    let o = refine_min(points, lo, hi, refine, |x| f(x).map(|v| -v))?;
    Ok(Opt { x: o.x, value: -o.value, grid_value: -o.grid_value })
}

/// `k / (n + 1)` scaled into the open interval `(lo, hi)`, `k = 1..=n`.
pub(crate) fn open_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
}

/// `lo + (hi - lo) k / n`, `k = 1..=n`: open at `lo`, closed at `hi`.
pub(crate) fn half_open_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 }).collect()
}

/// Finds the grid minimiser of `sign * D(r_k) + c_k`, where `D` is
/// non-increasing in the radius `r`, evaluating `D` only where the bound
/// from already known values and `floor <= D <= ceil` cannot exclude it.
///
/// `eval(k)` must return `D(r_k)`. Returns the indices evaluated.
pub(crate) fn bnb_min(
    radii: &[f64],
    consts: &[f64],
    floor: &[f64],
    ceil: &[f64],
    sign: f64,
    mut eval: impl FnMut(usize) -> Result<f64>,
) -> Result<Vec<usize>> {
    let n = radii.len();
    let mut known: Vec<Option<f64>> = vec![None; n];
    let mut order = Vec::new();
    let mut best = f64::INFINITY;
    loop {
        let mut pick: Option<(usize, f64)> = None;
        for k in 0..n {
            if known[k].is_some() {
                continue;
            }
            let mut lo = floor[k];
            let mut hi = ceil[k];
            for j in 0..n {
                if let Some(d) = known[j] {
                    if radii[j] >= radii[k] {
                        lo = lo.max(d);
                    }
                    if radii[j] <= radii[k] {
                        hi = hi.min(d);
                    }
                }
            }
            let lb = if sign > 0.0 { lo + consts[k] } else { -hi + consts[k] };
            let better = match pick {
                None => true,
                Some((pk, pl)) => lb < pl || (lb == pl && radii[k] < radii[pk]),
            };
            if better {
                pick = Some((k, lb));
            }
        }
        let Some((k, lb)) = pick else { break };
        if lb >= best {
            break;
        }
        let d = eval(k)?;
        known[k] = Some(d);
        order.push(k);
        let v = sign * d + consts[k];
        if v < best {
            best = v;
        }
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinement_finds_interior_minimum() {
        let pts = half_open_grid(0.0, 1.0, 7);
        let o = refine_min(&pts, 0.0, 1.0, true, |x| Ok((x - 0.3337).powi(2))).unwrap();
        assert!((o.x - 0.3337).abs() < 1e-6);
        assert!(o.value <= o.grid_value);
    }

    #[test]
    fn bnb_matches_exhaustive_search() {
        let radii: Vec<f64> = (0..20).map(|k| 1.0 - k as f64 / 20.0).collect();
        let d = |r: f64| (1.0 - r).powi(2) * 3.0;
        let consts: Vec<f64> = (0..20).map(|k| ((k as f64 + 1.0) / 5.0).sin()).collect();
        let floor = vec![f64::NEG_INFINITY; 20];
        let ceil = vec![f64::INFINITY; 20];
        let seen = bnb_min(&radii, &consts, &floor, &ceil, 1.0, |k| Ok(d(radii[k]))).unwrap();
        let exact = (0..20).map(|k| d(radii[k]) + consts[k]).fold(f64::INFINITY, f64::min);
        let found = seen.iter().map(|&k| d(radii[k]) + consts[k]).fold(f64::INFINITY, f64::min);
        assert_eq!(exact, found);
        assert!(seen.len() <= 20);
    }
}
