//! Small numeric helpers shared by both back-ends.

/// Largest `n` held in the precomputed binomial table.
pub const BINOMIAL_TABLE_MAX: usize = 8;

const fn build_binomials() -> [[u32; BINOMIAL_TABLE_MAX + 1]; BINOMIAL_TABLE_MAX + 1] {
    let mut t = [[0u32; BINOMIAL_TABLE_MAX + 1]; BINOMIAL_TABLE_MAX + 1];
    let mut n = 0;
    while n <= BINOMIAL_TABLE_MAX {
        t[n][0] = 1;
        let mut m = 1;
        while m <= n {
            t[n][m] = t[n - 1][m - 1] + if m < n { t[n - 1][m] } else { 0 };
            m += 1;
        }
        n += 1;
    }
    t
}

static BINOMIALS: [[u32; BINOMIAL_TABLE_MAX + 1]; BINOMIAL_TABLE_MAX + 1] = build_binomials();

/// Binomial coefficient `C(n, m)`, zero whenever `m < 0`, `m > n` or `n < 0`.
///
/// ```
/// use amdi_core::math::binomial;
/// assert_eq!(binomial(2, 1), 2);
/// assert_eq!(binomial(1, -1), 0);
/// assert_eq!(binomial(0, 1), 0);
/// ```
pub fn binomial(n: i64, m: i64) -> u64 {
    if n < 0 || m < 0 || m > n {
        return 0;
    }
    if (n as usize) <= BINOMIAL_TABLE_MAX {
        return BINOMIALS[n as usize][m as usize] as u64;
    }
    let m = m.min(n - m) as u64;
    let n = n as u64;
    let mut acc: u64 = 1;
    for k in 0..m {
        acc = acc * (n - k) / (k + 1);
    }
    acc
}

/// `n!` for `0 <= n <= 20`; zero for negative `n`.
pub fn factorial(n: i64) -> u64 {
    if n < 0 {
        return 0;
    }
    (1..=n as u64).product()
}

/// Integer power with `0^0 = 1`. A zero base with a negative exponent
/// gives `inf`, which callers treat as a diagnostic.
pub fn powi(base: f64, exp: i32) -> f64 {
    if exp == 0 {
        return 1.0;
    }
    let mut e = exp.unsigned_abs();
    let mut b = base;
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    if exp < 0 {
        1.0 / acc
    } else {
        acc
    }
}

/// Compensated (Neumaier) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Relative-or-absolute agreement test used throughout the verification
/// code: values below `abs_floor` (in magnitude) are compared absolutely.
pub fn within_tolerance(value: f64, reference: f64, rel: f64, abs: f64, abs_floor: f64) -> bool {
    let diff = libm::fabs(value - reference);
    let scale = libm::fabs(reference).max(libm::fabs(value));
    if scale < abs_floor {
        diff <= abs
    } else {
        diff <= rel * scale
    }
}

/// Signed relative deviation of `value` from `reference`, or the absolute
/// deviation when the reference is zero.
pub fn relative_deviation(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value
    } else {
        (value - reference) / libm::fabs(reference)
    }
}
