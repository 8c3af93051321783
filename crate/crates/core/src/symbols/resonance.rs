/// Four frequencies `[xi1, xi2, xi3, xi4]`; slots 1 and 3 carry `u`,
/// slots 2 and 4 carry `conj(u)`.
pub type FreqQuadruple = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceData {
    /// `xi1 - xi2 + xi3 - xi4`
    pub d4: f64,
    /// `xi1^2 - xi2^2 + xi3^2 - xi4^2`
    pub d4sq: f64,
    /// `d4sq - 2 xi_avg d4`, the Galilean-invariant part of `d4sq`.
    pub d4sq_tilde: f64,
    pub hi: f64,
    pub med: f64,
}

impl ResonanceData {
    /// On the slice `d4 = 0`, membership in the resonant set.
    pub fn is_resonant(&self, tol: f64) -> bool {
        self.d4.abs() <= tol && self.med <= tol
    }
}

pub fn resonance_data(q: FreqQuadruple) -> ResonanceData {
    let [x1, x2, x3, x4] = q;
    let d4 = x1 - x2 + x3 - x4;
    let d4sq = x1 * x1 - x2 * x2 + x3 * x3 - x4 * x4;
    let avg = 0.25 * (x1 + x2 + x3 + x4);
    let a = (x1 - x2).abs() + (x3 - x4).abs();
    let b = (x1 - x4).abs() + (x3 - x2).abs();
    ResonanceData {
        d4,
        d4sq,
        d4sq_tilde: d4sq - 2.0 * avg * d4,
        hi: a.max(b),
        med: a.min(b),
    }
}

/// `<x> = sqrt(1 + x^2)`
pub fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_quadruple() {
        let r = resonance_data([0.0; 4]);
        assert_eq!((r.d4, r.d4sq, r.hi, r.med), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn worked_example() {
        let r = resonance_data([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(r.d4, -2.0);
        assert_eq!(r.d4sq, -10.0);
        assert_eq!(r.d4sq_tilde, 0.0);
        assert_eq!(r.hi, 4.0);
        assert_eq!(r.med, 2.0);
    }

    #[test]
    fn crossed_pairing_is_resonant() {
        let r = resonance_data([3.0, 0.0, 0.0, 3.0]);
        assert_eq!((r.d4, r.d4sq, r.hi, r.med), (0.0, 0.0, 6.0, 0.0));
        assert!(r.is_resonant(0.0));
    }

    fn quad() -> impl Strategy<Value = FreqQuadruple> {
        prop::array::uniform4(-50.0f64..50.0)
    }

    proptest! {
        #[test]
        fn ordering_and_symmetries(q in quad()) {
            let r = resonance_data(q);
            prop_assert!(r.hi >= r.med && r.med >= 0.0);
            for p in [[q[2], q[1], q[0], q[3]], [q[0], q[3], q[2], q[1]]] {
                let s = resonance_data(p);
                prop_assert!((s.d4 - r.d4).abs() < 1e-12);
                prop_assert!((s.d4sq - r.d4sq).abs() < 1e-9);
                prop_assert_eq!((s.hi, s.med), (r.hi, r.med));
            }
        }

        #[test]
        fn galilean_invariance(q in quad(), h in -20.0f64..20.0) {
            let r = resonance_data(q);
            let s = resonance_data([q[0] + h, q[1] + h, q[2] + h, q[3] + h]);
            prop_assert!((s.hi - r.hi).abs() < 1e-9);
            prop_assert!((s.med - r.med).abs() < 1e-9);
            prop_assert!((s.d4sq_tilde - r.d4sq_tilde).abs() < 1e-8 * (1.0 + r.d4sq_tilde.abs()));
        }

        #[test]
        fn tilde_agrees_on_slice(a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0) {
            let r = resonance_data([a, b, c, a - b + c]);
            prop_assert!(r.d4.abs() < 1e-12);
            prop_assert!((r.d4sq_tilde - r.d4sq).abs() < 1e-9);
            // on the slice d4sq = 2 (xi1 - xi2)(xi2 - xi3) and med = 0 iff d4sq = 0
            prop_assert!((r.d4sq - 2.0 * (a - b) * (b - c)).abs() < 1e-8);
            prop_assert!((r.hi * r.med - 2.0 * r.d4sq.abs()).abs() < 1e-8 * (1.0 + r.d4sq.abs()));
        }
    }
}
