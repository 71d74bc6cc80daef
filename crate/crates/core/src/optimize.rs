//! Small deterministic optimizers: golden-section search, a grid-seeded
//! golden-section maximizer, and Nelder–Mead.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximizes a unimodal `f` on `[lo, hi]` until the bracket is narrower than `tol`.
/// Returns `(argmax, max)`.
pub fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    // the bracket shrinks by INV_PHI per step; 200 steps is ~1e-42 of the span
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `f` on the open interval `(lo, hi)`: evaluates `grid` interior
/// points, then refines the best one with golden-section search inside its
/// neighbouring grid cells. Ties keep the lowest grid index.
pub fn grid_golden_max<F>(f: F, lo: f64, hi: f64, grid: usize, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    assert!(grid >= 3 && hi > lo);
    let step = (hi - lo) / grid as f64;
    let point = |k: usize| lo + step * (k as f64 + 0.5);
    let mut best_k = 0;
    let mut best_v = f64::NEG_INFINITY;
    for k in 0..grid {
        let v = f(point(k));
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    let a = if best_k == 0 { lo } else { point(best_k - 1) };
    let b = if best_k + 1 == grid { hi } else { point(best_k + 1) };
    let (x, v) = golden_section_max(&f, a, b, tol);
    if v >= best_v {
        (x, v)
    } else {
        (point(best_k), best_v)
    }
}

/// Result of a Nelder–Mead run.
#[derive(Clone, Debug)]
pub struct Simplex {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of size `step`.
/// Stops when the spread of simplex values is below `ftol` or after `max_iter`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: f64, ftol: f64, max_iter: usize) -> Simplex
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    pts.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if (vals[dim] - vals[0]).abs() <= ftol {
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| pts[..dim].iter().map(|p| p[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(pts[dim].iter())
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[dim] = xe;
                vals[dim] = fe;
            } else {
                pts[dim] = xr;
                vals[dim] = fr;
            }
            continue;
        }
        if fr < vals[dim - 1] {
            pts[dim] = xr;
            vals[dim] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[dim] {
            let xc = along(-0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        if fc < vals[dim].min(fr) {
            pts[dim] = xc;
            vals[dim] = fc;
            continue;
        }
        // shrink towards the best vertex
        let best = pts[0].clone();
        for i in 1..=dim {
            for j in 0..dim {
                pts[i][j] = best[j] + 0.5 * (pts[i][j] - best[j]);
            }
            vals[i] = f(&pts[i]);
        }
    }

    let (bi, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty simplex");
    Simplex {
        x: pts[bi].clone(),
        value: vals[bi],
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_section_max(|x| -(x - 0.3).powi(2) + 2.0, -1.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn grid_escapes_local_maximum() {
        // two bumps, the right one higher
        let f = |x: f64| (-(x - 0.2).powi(2) * 400.0).exp() + 1.5 * (-(x - 0.8).powi(2) * 400.0).exp();
        let (x, _) = grid_golden_max(f, 0.0, 1.0, 1000, 1e-12);
        assert!((x - 0.8).abs() < 1e-5);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let s = nelder_mead(f, &[-1.2, 1.0], 0.5, 1e-20, 10_000);
        assert!((s.x[0] - 1.0).abs() < 1e-5, "{:?}", s.x);
        assert!((s.x[1] - 1.0).abs() < 1e-5);
    }
}
