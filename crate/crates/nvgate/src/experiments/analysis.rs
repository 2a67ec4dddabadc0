//! Peak and window extraction on sampled curves.

/// Indices of interior local maxima (plateaus count once, at their first sample).
pub fn local_maxima(y: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = y.len();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Upper envelope through the local maxima (and end points), linearly interpolated.
pub fn envelope(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 3 {
        return y.to_vec();
    }
    let mut knots = vec![0];
    knots.extend(local_maxima(y));
    knots.push(n - 1);
    let mut out = vec![0.0; n];
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (i, o) in out.iter_mut().enumerate().take(b + 1).skip(a) {
            let t = if b == a {
                0.0
            } else {
                (i - a) as f64 / (b - a) as f64
            };
            *o = y[a] + t * (y[b] - y[a]);
        }
    }
    // never below the data itself
    for (o, v) in out.iter_mut().zip(y) {
        *o = o.max(*v);
    }
    out
}

fn nearest(x: &[f64], centre: f64) -> usize {
    x.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - centre).abs().total_cmp(&(b.1 - centre).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Width of the contiguous region around `centre` where y > level, with
/// linear interpolation at the crossings. None if the region touches the grid
/// edge or y(centre) is below the level.
pub fn threshold_window(x: &[f64], y: &[f64], centre: f64, level: f64) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let c = nearest(x, centre);
    if y[c] <= level {
        return None;
    }
    let cross = |i: usize, j: usize| x[i] + (level - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let mut l = c;
    while l > 0 && y[l - 1] > level {
        l -= 1;
    }
    let mut r = c;
    while r + 1 < x.len() && y[r + 1] > level {
        r += 1;
    }
    if l == 0 || r + 1 == x.len() {
        return None;
    }
    Some(cross(r, r + 1) - cross(l, l - 1))
}

/// Full width at half of the peak value nearest `centre`.
pub fn fwhm_around(x: &[f64], y: &[f64], centre: f64) -> Option<f64> {
    let c = nearest(x, centre);
    // climb to the local peak
    let mut p = c;
    loop {
        if p + 1 < y.len() && y[p + 1] > y[p] {
            p += 1;
        } else if p > 0 && y[p - 1] > y[p] {
            p -= 1;
        } else {
            break;
        }
    }
    threshold_window(x, y, x[p], 0.5 * y[p])
}
