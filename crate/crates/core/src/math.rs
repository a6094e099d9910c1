//! Float helpers backed by `libm` so the crate stays `no_std`.

pub(crate) const INV_LN2: f64 = core::f64::consts::LOG2_E;

#[inline]
pub(crate) fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// `tanh` through one `expm1`, which is accurate near zero and cheaper than
/// `libm::tanh`.
#[inline]
pub(crate) fn tanh(x: f64) -> f64 {
    let e = libm::expm1(-2.0 * x.abs());
    libm::copysign(-e / (2.0 + e), x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `-p log2 p` with the `0 log 0 = 0` convention.
#[inline]
pub(crate) fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * log2(p)
    } else {
        0.0
    }
}

/// Max-subtracted softmax, in place.
pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = exp(*x - max);
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Pairwise summation of `values`; exact for `k` copies of one value when
/// `k` is a power of two.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;

    #[test]
    fn tanh_matches_std() {
        for i in -4000..=4000 {
            let x = i as f64 * 0.005;
            let want = std::primitive::f64::tanh(x);
            assert!((tanh(x) - want).abs() <= 4.0 * f64::EPSILON * want.abs().max(1e-300), "{x}");
        }
        assert_eq!(tanh(0.0), 0.0);
        assert_eq!(tanh(1e3), 1.0);
        assert_eq!(tanh(-1e3), -1.0);
        assert!((tanh(1e-12) - 1e-12).abs() < 1e-27);
    }

    #[test]
    fn pairwise_sum_of_copies_is_exact() {
        for k in [1usize, 2, 4, 8, 16] {
            let v = std::vec![0.1f64; k];
            assert_eq!(pairwise_sum(&v) / k as f64, 0.1);
        }
    }
}
