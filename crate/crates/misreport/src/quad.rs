//! Composite Simpson quadrature for population quantities.

/// Integrates `f` over `[a, b]` with roughly `n_points` evaluations,
/// splitting at the interior `breaks` so kinks (running envelopes, index
/// sign changes) sit on segment boundaries.
pub fn integrate<F>(f: F, a: f64, b: f64, n_points: usize, breaks: &[f64]) -> f64
where
    F: Fn(f64) -> f64,
{
    if a >= b {
        return 0.0;
    }
    let mut edges = vec![a];
    let mut interior: Vec<f64> = breaks.iter().copied().filter(|t| a < *t && *t < b).collect();
    interior.sort_by(|x, y| x.partial_cmp(y).unwrap());
    interior.dedup();
    edges.extend(interior);
    edges.push(b);

    let total = b - a;
    let mut sum = 0.0;
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        // Proportional allocation, always enough points for Simpson.
        let m = ((n_points as f64 * (hi - lo) / total).ceil() as usize).max(8);
        let m = m + m % 2;
        sum += simpson(&f, lo, hi, m);
    }
    sum
}

fn simpson<F>(f: &F, a: f64, b: f64, intervals: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for k in 1..intervals {
        let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(a + k as f64 * h);
    }
    acc * h / 3.0
}
