//! One-dimensional maximization: dense grid scan plus golden-section polish.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a local maximum of `f` on `[lo, hi]`.
/// Returns `(argmax, max)`; the endpoints are considered too.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Maximize over `grid` (sorted), then polish the `top` best grid points by
/// golden section on their neighbouring cells.
pub fn grid_max<F: Fn(f64) -> f64>(f: &F, grid: &[f64], top: usize, tol: f64) -> (f64, f64) {
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    refine_grid_max(f, grid, &vals, top, tol)
}

/// Same as [`grid_max`] with precomputed grid values.
pub fn refine_grid_max<F: Fn(f64) -> f64>(
    f: &F,
    grid: &[f64],
    vals: &[f64],
    top: usize,
    tol: f64,
) -> (f64, f64) {
    assert_eq!(grid.len(), vals.len());
    assert!(!grid.is_empty());
    let mut order: Vec<usize> = (0..grid.len()).collect();
    // stable ordering: ties resolved by index
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let mut best = (grid[order[0]], vals[order[0]]);
    for &i in order.iter().take(top) {
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(grid.len() - 1)];
        if hi > lo {
            let (x, v) = golden_max(f, lo, hi, tol);
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    best
}
