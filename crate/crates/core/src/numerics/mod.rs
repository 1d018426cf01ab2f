//! Small numerical helpers shared across modules.

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub struct GaussRule {
    pub nodes: &'static [f64],
    pub weights: &'static [f64],
}

pub const GAUSS2: GaussRule = GaussRule {
    nodes: &[0.211_324_865_405_187_1, 0.788_675_134_594_812_9],
    weights: &[0.5, 0.5],
};

pub const GAUSS4: GaussRule = GaussRule {
    nodes: &[
        0.069_431_844_202_973_71,
        0.330_009_478_207_571_9,
        0.669_990_521_792_428_1,
        0.930_568_155_797_026_3,
    ],
    weights: &[
        0.173_927_422_568_726_93,
        0.326_072_577_431_273_07,
        0.326_072_577_431_273_07,
        0.173_927_422_568_726_93,
    ],
};

pub const GAUSS8: GaussRule = GaussRule {
    nodes: &[
        0.019_855_071_751_231_85,
        0.101_666_761_293_186_6,
        0.237_233_795_041_835_5,
        0.408_282_678_752_175_1,
        0.591_717_321_247_824_9,
        0.762_766_204_958_164_5,
        0.898_333_238_706_813_4,
        0.980_144_928_248_768_2,
    ],
    weights: &[
        0.050_614_268_145_188_15,
        0.111_190_517_226_687_25,
        0.156_853_322_938_943_65,
        0.181_341_891_689_181,
        0.181_341_891_689_181,
        0.156_853_322_938_943_65,
        0.111_190_517_226_687_25,
        0.050_614_268_145_188_15,
    ],
};

impl GaussRule {
    /// `∫₀¹ f`.
    pub fn unit(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(self.weights).map(|(&s, &w)| w * f(s)).sum()
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn composite(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                h * self.unit(|s| f(lo + s * h))
            })
            .sum()
    }
}

/// Minimum eigenvalue of a symmetric 2×2 matrix `[[a, b], [b, c]]`.
pub fn min_eig_sym2(a: f64, b: f64, c: f64) -> f64 {
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    mean - r
}

/// Unit eigenvector for the minimum eigenvalue of `[[a, b], [b, c]]`.
pub fn min_eigvec_sym2(a: f64, b: f64, c: f64) -> [f64; 2] {
    let lam = min_eig_sym2(a, b, c);
    let (vx, vy) = if b.abs() > 1e-300 {
        (b, lam - a)
    } else if a <= c {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let n = (vx * vx + vy * vy).sqrt();
    [vx / n, vy / n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_polynomials_exactly() {
        // GL8 is exact through degree 15, GL4 through 7, GL2 through 3
        let p7 = |x: f64| 8.0 * x.powi(7) - 3.0 * x.powi(4) + x;
        assert!((GAUSS4.unit(p7) - (1.0 - 0.6 + 0.5)).abs() < 1e-14);
        let p3 = |x: f64| 4.0 * x.powi(3) + 1.0;
        assert!((GAUSS2.unit(p3) - 2.0).abs() < 1e-14);
        let p15 = |x: f64| 16.0 * x.powi(15) + 2.0 * x.powi(9);
        assert!((GAUSS8.unit(p15) - 1.2).abs() < 1e-14);
        let s: f64 = GAUSS4.composite(0.0, std::f64::consts::PI, 16, f64::sin);
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sym2_eigen() {
        assert!((min_eig_sym2(2.0, 1.0, 2.0) - 1.0).abs() < 1e-15);
        let v = min_eigvec_sym2(2.0, 1.0, 2.0);
        assert!((v[0] + v[1]).abs() < 1e-15);
        assert_eq!(min_eigvec_sym2(3.0, 0.0, 1.0), [0.0, 1.0]);
    }
}
