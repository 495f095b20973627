//! Descriptive statistics and learning-curve aggregation.

/// Count, mean, sample standard deviation and linear-interpolation quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// `n − 1` denominator; zero for a single value.
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub max: f64,
}

/// Quantile `q ∈ [0, 1]` of sorted data, interpolating between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard deviation with an `n` denominator.
pub fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

impl Summary {
    /// `None` for empty input.
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = xs.len();
        let m = mean(xs);
        let std = if n > 1 {
            (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self {
            count: n,
            mean: m,
            std,
            min: sorted[0],
            q25: quantile_sorted(&sorted, 0.25),
            q50: quantile_sorted(&sorted, 0.5),
            q75: quantile_sorted(&sorted, 0.75),
            max: sorted[n - 1],
        })
    }

    /// Row labels and values in display order.
    pub fn rows(&self) -> [(&'static str, f64); 8] {
        [
            ("count", self.count as f64),
            ("mean", self.mean),
            ("std", self.std),
            ("min", self.min),
            ("25%", self.q25),
            ("50%", self.q50),
            ("75%", self.q75),
            ("max", self.max),
        ]
    }
}

/// Trailing moving average; the first `window − 1` points average what exists so far.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    assert!(window > 0, "moving-average window must be positive");
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        sum += x;
        if i >= window {
            sum -= xs[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// One aggregated learning-curve point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub episode: usize,
    pub mean_return: f64,
    pub std_return: f64,
}

/// Per-episode mean and population std across seeds of each seed's moving
/// average, over the episode range every seed covers.
pub fn aggregate_curves(per_seed_returns: &[Vec<f64>], window: usize) -> Vec<CurvePoint> {
    let Some(len) = per_seed_returns.iter().map(Vec::len).min() else {
        return Vec::new();
    };
    let smoothed: Vec<Vec<f64>> = per_seed_returns.iter().map(|r| moving_average(&r[..len], window)).collect();
    (0..len)
        .map(|e| {
            let column: Vec<f64> = smoothed.iter().map(|s| s[e]).collect();
            CurvePoint { episode: e, mean_return: mean(&column), std_return: population_std(&column) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_matches_hand_values() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.count, s.min, s.max), (4, 1.0, 4.0));
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!((s.q25, s.q50, s.q75), (1.75, 2.5, 3.25));
        assert_eq!(Summary::of(&[7.0]).unwrap().std, 0.0);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn moving_average_warms_up() {
        assert_eq!(moving_average(&[2.0, 4.0, 6.0, 8.0], 2), vec![2.0, 3.0, 5.0, 7.0]);
        assert_eq!(moving_average(&[1.0, 2.0], 20), vec![1.0, 1.5]);
    }

    #[test]
    fn single_seed_aggregate_is_its_moving_average() {
        let r = vec![1.0, 5.0, 3.0, -2.0, 0.5];
        let agg = aggregate_curves(std::slice::from_ref(&r), 3);
        let ma = moving_average(&r, 3);
        for (p, m) in agg.iter().zip(&ma) {
            assert_eq!(p.mean_return, *m);
            assert_eq!(p.std_return, 0.0);
        }
    }

    #[test]
    fn aggregate_truncates_to_the_shortest_seed() {
        let agg = aggregate_curves(&[vec![0.0, 2.0, 4.0], vec![2.0, 2.0]], 1);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].mean_return, 1.0);
        assert_eq!(agg[0].std_return, 1.0);
    }
}
