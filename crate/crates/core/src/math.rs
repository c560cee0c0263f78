//! Scalar helpers that work without `std`.

pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + ln_1p(exp(lo - hi))
}

/// `log(1 + exp(x))`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + ln_1p(exp(-x))
    } else {
        ln_1p(exp(x))
    }
}

/// `exp(x) / (1 + exp(x))`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `exp(x) / (1 + exp(x))^2`, the variance of a Bernoulli(sigmoid(x)).
pub fn logistic_variance(x: f64) -> f64 {
    let p = sigmoid(x);
    p * (1.0 - p)
}

/// Kullback-Leibler divergence between Bernoulli(x) and Bernoulli(y), in nats.
pub fn bernoulli_kl(x: f64, y: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * ln(a / b) };
    term(x, y) + term(1.0 - x, 1.0 - y)
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub const fn new() -> Self {
        Self { max: f64::NEG_INFINITY, scaled: 0.0 }
    }

    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += exp(x - self.max);
        } else {
            self.scaled = self.scaled * exp(self.max - x) + 1.0;
            self.max = x;
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max <= self.max {
            self.scaled += other.scaled * exp(other.max - self.max);
        } else {
            self.scaled = self.scaled * exp(self.max - other.max) + other.scaled;
            self.max = other.max;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.max == f64::NEG_INFINITY
    }

    /// Log of the accumulated sum; `-inf` when nothing was added.
    pub fn value(&self) -> f64 {
        if self.is_empty() {
            f64::NEG_INFINITY
        } else {
            self.max + ln(self.scaled)
        }
    }
}

pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = LogSumExp::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

pub(crate) fn check_beta(beta: f64) -> crate::Result<()> {
    if !beta.is_finite() || beta.abs() > crate::MAX_ABS_BETA {
        return Err(crate::Error::ParameterOutOfRange { value: beta, max: crate::MAX_ABS_BETA });
    }
    Ok(())
}

/// Minimizes a convex function on `[lo, hi]` given its derivative, by
/// bisection on the sign of the derivative.
pub fn bisect_convex_minimizer<F: Fn(f64) -> f64>(derivative: F, lo: f64, hi: f64, tol: f64) -> f64 {
    if derivative(lo) >= 0.0 {
        return lo;
    }
    if derivative(hi) <= 0.0 {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if derivative(mid) > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streaming_matches_direct_sum() {
        let xs: [f64; 5] = [0.3, -2.0, 5.0, 1.25, -40.0];
        let direct: f64 = xs.iter().map(|&x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(xs) - direct).abs() < 1e-12);

        let mut a = LogSumExp::new();
        let mut b = LogSumExp::new();
        xs[..2].iter().for_each(|&x| a.add(x));
        xs[2..].iter().for_each(|&x| b.add(x));
        a.merge(&b);
        assert!((a.value() - direct).abs() < 1e-12);
    }

    #[test]
    fn large_arguments_do_not_overflow() {
        let v = log_add_exp(2000.0, 2000.0);
        assert!((v - (2000.0 + 2f64.ln())).abs() < 1e-9);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert_eq!(LogSumExp::new().value(), f64::NEG_INFINITY);
    }

    #[test]
    fn bernoulli_kl_at_half_is_zero() {
        assert_eq!(bernoulli_kl(0.5, 0.5), 0.0);
        assert!((bernoulli_kl(0.0, 0.5) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bisection_finds_parabola_minimum() {
        let x = bisect_convex_minimizer(|x| 2.0 * (x - 0.7), -5.0, 5.0, 1e-13);
        assert!((x - 0.7).abs() < 1e-12);
        assert_eq!(bisect_convex_minimizer(|x| x - 9.0, -5.0, 5.0, 1e-13), 5.0);
    }
}
