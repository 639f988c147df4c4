/// Step weights of the fast gradient method: `gamma_0 = 1` and
/// `2L + Gamma_k mu / 2 = 2L gamma_{k+1}^2 / Gamma_{k+1}` with
/// `Gamma_k = gamma_0 + ... + gamma_k`.
///
/// For `mu > 0` the weights grow geometrically and overflow `f64` after a
/// few thousand steps when `L/mu` is small, so the schedule is stored as
/// `ln Gamma_k` plus the scale-free ratios the iteration actually uses.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSchedule {
    l: f64,
    mu: f64,
    ln_partial: Vec<f64>,
    /// `gamma_k / Gamma_k`.
    share: Vec<f64>,
    /// `gamma_{k+1} / Gamma_k`, for `k < K`.
    growth: Vec<f64>,
}

/// `gamma_{k+1} / Gamma_k`: positive root of
/// `2L u^2 - c u - c = 0` with `c = 2L/Gamma_k + mu/2`, which is the
/// recursion divided through by `Gamma_k`.
fn next_growth(l: f64, mu: f64, ln_partial: f64) -> f64 {
    let c = 2.0 * l * (-ln_partial).exp() + 0.5 * mu;
    (c + (c * c + 8.0 * l * c).sqrt()) / (4.0 * l)
}

pub fn gamma_schedule(l: f64, mu: f64, k: usize) -> GammaSchedule {
    assert!(l > 0.0 && mu >= 0.0, "need L > 0 and mu >= 0");
    let mut ln_partial = vec![0.0];
    let mut share = vec![1.0];
    let mut growth = Vec::with_capacity(k);
    for i in 0..k {
        let u = next_growth(l, mu, ln_partial[i]);
        growth.push(u);
        ln_partial.push(ln_partial[i] + u.ln_1p());
        share.push(u / (1.0 + u));
    }
    GammaSchedule {
        l,
        mu,
        ln_partial,
        share,
        growth,
    }
}

impl GammaSchedule {
    /// Largest index `K` with `gamma_K` defined.
    pub fn len(&self) -> usize {
        self.growth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.growth.is_empty()
    }

    /// Appends steps until `gamma_k` is defined.
    pub fn extend_to(&mut self, k: usize) {
        while self.growth.len() < k {
            let i = self.growth.len();
            let u = next_growth(self.l, self.mu, self.ln_partial[i]);
            self.growth.push(u);
            self.ln_partial.push(self.ln_partial[i] + u.ln_1p());
            self.share.push(u / (1.0 + u));
        }
    }

    /// `gamma_k`; may be `+inf` once it exceeds the `f64` range.
    pub fn gamma(&self, k: usize) -> f64 {
        self.share[k] * self.ln_partial[k].exp()
    }

    /// `Gamma_k`; may be `+inf` once it exceeds the `f64` range.
    pub fn partial_sum(&self, k: usize) -> f64 {
        self.ln_partial[k].exp()
    }

    pub fn ln_partial_sum(&self, k: usize) -> f64 {
        self.ln_partial[k]
    }

    pub fn gammas(&self) -> Vec<f64> {
        (0..=self.len()).map(|k| self.gamma(k)).collect()
    }

    pub fn partial_sums(&self) -> Vec<f64> {
        (0..=self.len()).map(|k| self.partial_sum(k)).collect()
    }

    /// `gamma_k / gamma_{k+1}`.
    pub fn ratio_next_gamma(&self, k: usize) -> f64 {
        self.share[k] / self.growth[k]
    }

    /// `gamma_{k+1} / gamma_k`.
    pub fn gamma_growth(&self, k: usize) -> f64 {
        self.growth[k] / self.share[k]
    }

    /// `Gamma_{k-1} / Gamma_k`, with `Gamma_{-1} = 0`.
    pub fn ratio_prev_partial(&self, k: usize) -> f64 {
        1.0 - self.share[k]
    }

    /// `Gamma_k / Gamma_{k+1}`.
    pub fn ratio_next_partial(&self, k: usize) -> f64 {
        1.0 / (1.0 + self.growth[k])
    }

    /// `|2L + Gamma_k mu/2 - 2L gamma_{k+1}^2/Gamma_{k+1}|` divided by
    /// `2L + Gamma_k mu/2`, computed in the scaled variables.
    pub fn relative_residual(&self, k: usize) -> f64 {
        let u = self.growth[k];
        let c = 2.0 * self.l * (-self.ln_partial[k]).exp() + 0.5 * self.mu;
        (c - 2.0 * self.l * u * u / (1.0 + u)).abs() / c
    }

    /// The unscaled recursion residual; only meaningful while `Gamma_k` is
    /// representable.
    pub fn absolute_residual(&self, k: usize) -> f64 {
        let big = self.partial_sum(k);
        let next = self.gamma(k + 1);
        (2.0 * self.l + big * self.mu / 2.0 - 2.0 * self.l * next * next / self.partial_sum(k + 1)).abs()
    }
}
