//! Summation and regression helpers shared by the kernels.

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn scale(&mut self, k: f64) {
        self.sum *= k;
        self.comp *= k;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Streaming `log Σ exp(l_k)` together with the exp-weighted sums of `K`
/// auxiliary values, all held relative to a running maximum so that
/// neither overflow nor underflow can occur.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSumExp<const K: usize> {
    max: f64,
    mass: CompensatedSum,
    moments: [CompensatedSum; K],
}

impl<const K: usize> Default for LogSumExp<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<const K: usize> LogSumExp<K> {
    pub fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            mass: CompensatedSum::new(),
            moments: [CompensatedSum::new(); K],
        }
    }

    #[inline]
    fn rebase(&mut self, new_max: f64) {
        if self.max > f64::NEG_INFINITY {
            let k = (self.max - new_max).exp();
            self.mass.scale(k);
            for m in &mut self.moments {
                m.scale(k);
            }
        }
        self.max = new_max;
    }

    #[inline]
    pub fn push(&mut self, log_value: f64, aux: [f64; K]) {
        if log_value == f64::NEG_INFINITY {
            return;
        }
        if log_value > self.max {
            self.rebase(log_value);
        }
        let w = (log_value - self.max).exp();
        self.mass.add(w);
        for (m, a) in self.moments.iter_mut().zip(aux) {
            m.add(w * a);
        }
    }

    pub fn merge(mut self, mut other: Self) -> Self {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if self.max == f64::NEG_INFINITY {
            return other;
        }
        if other.max > self.max {
            self.rebase(other.max);
        } else {
            other.rebase(self.max);
        }
        self.mass.merge(&other.mass);
        for (m, o) in self.moments.iter_mut().zip(other.moments.iter()) {
            m.merge(o);
        }
        self
    }

    /// `log Σ exp(l_k)`.
    pub fn log_total(&self) -> f64 {
        self.max + self.mass.value().ln()
    }

    /// Weighted mean of auxiliary component `i` under weights `exp(l_k)`.
    pub fn mean(&self, i: usize) -> f64 {
        self.moments[i].value() / self.mass.value()
    }
}

/// Combine partial results in a fixed balanced tree over their order.
pub fn pairwise_reduce<T: Clone>(items: Vec<T>, combine: impl Fn(T, T) -> T + Copy) -> Option<T> {
    fn go<T: Clone>(items: &[T], combine: impl Fn(T, T) -> T + Copy) -> T {
        if items.len() == 1 {
            return items[0].clone();
        }
        let mid = items.len() / 2;
        combine(go(&items[..mid], combine), go(&items[mid..], combine))
    }
    if items.is_empty() {
        None
    } else {
        Some(go(&items, combine))
    }
}

/// Pairwise summation of a slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = CompensatedSum::new();
        for &x in xs {
            s.add(x);
        }
        return s.value();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero when the fit is exact or has two points.
    pub slope_stderr: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Linear-in-`1/n` extrapolation from values at two depths.
pub fn extrapolate_depth(n1: usize, x1: f64, n2: usize, x2: f64) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    (b * x2 - a * x1) / (b - a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-13).abs() < 1e-24, "{}", s.value());
    }

    #[test]
    fn log_sum_exp_survives_extreme_values() {
        let mut acc = LogSumExp::<1>::new();
        acc.push(-2000.0, [1.0]);
        acc.push(-2000.0 + 2f64.ln(), [4.0]);
        assert!(
            (acc.log_total() - (-2000.0 + 3f64.ln())).abs() < 1e-12,
            "{}",
            acc.log_total()
        );
        assert!((acc.mean(0) - 3.0).abs() < 1e-12);

        let mut hi = LogSumExp::<1>::new();
        hi.push(800.0, [0.0]);
        let merged = acc.merge(hi);
        assert!((merged.log_total() - 800.0).abs() < 1e-12);
    }

    #[test]
    fn merge_is_order_insensitive_up_to_rounding() {
        let vals: Vec<f64> = (0..100).map(|k| (k as f64 * 0.37).sin() * 5.0).collect();
        let mut whole = LogSumExp::<0>::new();
        for &v in &vals {
            whole.push(v, []);
        }
        let parts: Vec<_> = vals
            .chunks(7)
            .map(|c| {
                let mut a = LogSumExp::<0>::new();
                for &v in c {
                    a.push(v, []);
                }
                a
            })
            .collect();
        let tree = pairwise_reduce(parts, |a, b| a.merge(b)).unwrap();
        assert!((whole.log_total() - tree.log_total()).abs() < 1e-14);
    }

    #[test]
    fn line_fit_exact_and_degenerate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-14);
        assert!((fit.intercept + 1.0).abs() < 1e-14);
        assert!(fit.slope_stderr < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn depth_extrapolation_removes_one_over_n_term() {
        let f = |n: usize| 0.7 + 0.3 / n as f64;
        assert!((extrapolate_depth(7, f(7), 14, f(14)) - 0.7).abs() < 1e-14);
    }
}
