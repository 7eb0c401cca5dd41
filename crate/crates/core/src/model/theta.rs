use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use std::fmt;

use super::poly;
use crate::error::{MrfError, Result};

/// Relative slack used by the float structural predicates.
pub const PREDICATE_SLACK: f64 = 1e-12;

/// Binomial coefficient `C(n, k)` as a float.
///
/// Exact integer arithmetic up to `n = 120`, multiplicative recurrence above.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    if n <= 120 {
        return binomial_exact(n, k) as f64;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Exact `C(n, k)`; panics on overflow, which cannot happen for `n <= 120`.
pub fn binomial_exact(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) is divisible by (i + 1) at every step
        c = c
            .checked_mul((n - i) as u128)
            .expect("binomial coefficient overflow")
            / (i + 1) as u128;
    }
    c
}

/// Clique potentials `θ_0..θ_Δ` of the second-order field, with the binomial
/// weighted coefficient arrays used by `f`, `g` and `L` precomputed.
#[derive(Clone, Debug)]
pub struct ThetaVector {
    values: Vec<f64>,
    // θ_k C(Δ-1, k) for k < Δ: denominator of f and reciprocal of g
    den: Vec<f64>,
    // θ_{k+1} C(Δ-1, k) for k < Δ: numerator of f
    num: Vec<f64>,
    // θ_k C(Δ, k) for k <= Δ: coefficients of L
    full: Vec<f64>,
}

impl PartialEq for ThetaVector {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl ThetaVector {
    /// Builds a potential vector; requires `Δ >= 3` (length at least 4) and
    /// strictly positive finite entries. The vector is never normalized.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 {
            return Err(MrfError::InvalidTheta(format!(
                "need at least 4 entries (degree >= 3), got {}",
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(MrfError::InvalidTheta(format!(
                "entry {i} is {v}; all entries must be finite and strictly positive"
            )));
        }
        let delta = values.len() - 1;
        let den = (0..delta)
            .map(|k| values[k] * binomial(delta - 1, k))
            .collect();
        let num = (0..delta)
            .map(|k| values[k + 1] * binomial(delta - 1, k))
            .collect();
        let full = (0..=delta)
            .map(|k| values[k] * binomial(delta, k))
            .collect();
        Ok(Self {
            values,
            den,
            num,
            full,
        })
    }

    /// Checks that the vector has length `delta + 1` as well.
    pub fn with_delta(delta: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != delta + 1 {
            return Err(MrfError::LengthMismatch {
                expected: delta + 1,
                got: values.len(),
            });
        }
        Self::new(values)
    }

    /// The hardcore potentials (all ones).
    pub fn ones(delta: usize) -> Result<Self> {
        Self::new(vec![1.0; delta + 1])
    }

    pub fn delta(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// `θ_Δ / θ_{Δ-1}`, the largest consecutive ratio of a log-convex vector.
    pub fn top_ratio(&self) -> f64 {
        let d = self.delta();
        self.values[d] / self.values[d - 1]
    }

    /// `θ_1 / θ_0`, the smallest consecutive ratio of a log-convex vector.
    pub fn bottom_ratio(&self) -> f64 {
        self.values[1] / self.values[0]
    }

    /// `f_θ(x)` for `x >= 0`.
    pub fn f(&self, x: f64) -> f64 {
        poly::ratio(&self.num, &self.den, x)
    }

    /// `g_θ(x)` for `x >= 0`.
    pub fn g(&self, x: f64) -> f64 {
        poly::log_eval(&self.den, x).map_or(f64::INFINITY, |l| (-l).exp())
    }

    /// `ln g_θ(x)`.
    pub fn log_g(&self, x: f64) -> f64 {
        poly::log_eval(&self.den, x).map_or(f64::INFINITY, |l| -l)
    }

    /// `ln f_θ(x)`.
    pub fn log_f(&self, x: f64) -> f64 {
        self.f(x).ln()
    }

    /// `f'(x) / f(x)`.
    pub fn dlog_f(&self, x: f64) -> f64 {
        poly::log_derivative(&self.num, x) - poly::log_derivative(&self.den, x)
    }

    /// `g'(x) / g(x)`.
    pub fn dlog_g(&self, x: f64) -> f64 {
        -poly::log_derivative(&self.den, x)
    }

    /// Smallest and largest consecutive ratio `θ_{k+1} / θ_k`. `f` is a
    /// weighted average of these ratios, so it always lies between them.
    pub fn ratio_range(&self) -> (f64, f64) {
        self.values
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold((f64::INFINITY, 0.0), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }

    /// `L_θ(z) = Σ θ_i C(Δ, i) z^i`.
    pub fn big_l(&self, z: f64) -> f64 {
        poly::log_eval(&self.full, z).map_or(0.0, f64::exp)
    }

    /// `ln L_θ(z)`.
    pub fn log_big_l(&self, z: f64) -> f64 {
        poly::log_eval(&self.full, z).unwrap_or(f64::NEG_INFINITY)
    }

    /// `λ g(y) f(x)^{Δ-1}`, one coordinate of the two-equation system.
    pub fn update(&self, lambda: f64, y: f64, x: f64) -> f64 {
        let e = (self.delta() - 1) as f64;
        (lambda.ln() + self.log_g(y) + e * self.log_f(x)).exp()
    }

    /// `f` evaluated at a vector of `Δ - 1` possibly distinct arguments.
    pub fn f_multi(&self, x: &[f64]) -> Result<f64> {
        let sigma = self.multi_sigma(x)?;
        let d = self.delta();
        let top: f64 = (0..d).map(|k| self.values[k + 1] * sigma[k]).sum();
        let bottom: f64 = (0..d).map(|k| self.values[k] * sigma[k]).sum();
        Ok(top / bottom)
    }

    /// `g` evaluated at a vector of `Δ - 1` possibly distinct arguments.
    pub fn g_multi(&self, x: &[f64]) -> Result<f64> {
        let sigma = self.multi_sigma(x)?;
        let bottom: f64 = (0..self.delta()).map(|k| self.values[k] * sigma[k]).sum();
        Ok(1.0 / bottom)
    }

    fn multi_sigma(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.delta();
        if x.len() != d - 1 {
            return Err(MrfError::LengthMismatch {
                expected: d - 1,
                got: x.len(),
            });
        }
        if let Some(v) = x.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(MrfError::param(
                "x",
                format!("entries must be finite and >= 0, got {v}"),
            ));
        }
        Ok(poly::sym_polys(x))
    }

    /// Log-convexity: `θ_k^2 <= θ_{k-1} θ_{k+1}` for interior `k`, up to a
    /// relative slack of [`PREDICATE_SLACK`].
    pub fn is_log_convex(&self) -> bool {
        is_log_convex_slice(&self.values)
    }

    /// `1 + c h` componentwise, the perturbation of the hardcore potentials.
    pub fn perturbed_ones(c: &[f64], h: f64) -> Result<Self> {
        Self::new(c.iter().map(|ci| 1.0 + ci * h).collect())
    }

    /// Decimal strings that round-trip exactly to the stored doubles.
    pub fn to_decimal_strings(&self) -> Vec<String> {
        self.values.iter().map(|v| format!("{v}")).collect()
    }

    /// Parses decimal strings (as produced by [`Self::to_decimal_strings`]).
    pub fn from_decimal_strings<S: AsRef<str>>(items: &[S]) -> Result<Self> {
        let values = items
            .iter()
            .map(|s| {
                s.as_ref()
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| MrfError::Parse(format!("`{}`: {e}", s.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }
}

/// Log-convexity of a positive sequence with relative slack.
pub fn is_log_convex_slice(v: &[f64]) -> bool {
    v.windows(3)
        .all(|w| w[1] * w[1] <= w[0] * w[2] * (1.0 + PREDICATE_SLACK))
}

/// Convexity `c_{i+1} - c_i >= c_i - c_{i-1}` with relative slack.
pub fn is_convex(c: &[f64]) -> bool {
    c.windows(3).all(|w| {
        let second = w[2] - 2.0 * w[1] + w[0];
        let scale = w[0].abs().max(w[1].abs()).max(w[2].abs());
        second >= -PREDICATE_SLACK * scale
    })
}

impl Serialize for ThetaVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.values.len()))?;
        for s in self.to_decimal_strings() {
            seq.serialize_element(&s)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for ThetaVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ThetaVisitor;

        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Entry {
            Text(String),
            Number(f64),
        }

        impl<'de> Visitor<'de> for ThetaVisitor {
            type Value = ThetaVector;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of positive decimal strings or numbers")
            }

            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<ThetaVector, A::Error> {
                let mut values = Vec::new();
                while let Some(entry) = seq.next_element::<Entry>()? {
                    values.push(match entry {
                        Entry::Number(v) => v,
                        Entry::Text(s) => s.trim().parse::<f64>().map_err(de::Error::custom)?,
                    });
                }
                ThetaVector::new(values).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_seq(ThetaVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th(v: &[f64]) -> ThetaVector {
        ThetaVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(ThetaVector::new(vec![1.0, 1.0, 1.0]).is_err());
        assert!(ThetaVector::new(vec![1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(ThetaVector::new(vec![1.0, f64::NAN, 1.0, 1.0]).is_err());
        assert!(ThetaVector::with_delta(4, vec![1.0; 4]).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_exact(5, 2), 10);
        assert_eq!(binomial_exact(60, 30), 118264581564861424);
        assert_eq!(binomial(3, 4), 0.0);
        let far = binomial(200, 3);
        assert!((far - 1313400.0).abs() < 1e-6);
    }

    #[test]
    fn f_g_l_examples() {
        let ones = ThetaVector::ones(3).unwrap();
        assert_eq!(ones.f(7.3), 1.0);
        assert!((ones.g(1.0) - 0.25).abs() < 1e-15);
        assert!((ones.big_l(1.0) - 8.0).abs() < 1e-13);

        let t = th(&[1.0, 1.0, 1.0, 2.0]);
        assert!((t.f(1.0) - 1.25).abs() < 1e-15);
        assert!((t.g(1.0) - 0.25).abs() < 1e-15);
        assert_eq!(t.g(0.0), 1.0);
        assert_eq!(t.big_l(0.0), 1.0);

        let p = th(&[1.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]);
        assert!((p.big_l(1.0) - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn large_arguments_stay_finite() {
        let t = th(&[1.0, 2.0, 5.0, 30.0, 400.0]);
        let f = t.f(1e200);
        assert!((f - 400.0 / 30.0).abs() < 1e-12);
        assert!(t.log_g(1e200).is_finite());
        assert!(t.log_big_l(1e300) > 0.0);
    }

    #[test]
    fn multi_matches_scalar() {
        let t = th(&[1.0, 1.0, 1.0, 2.0]);
        assert!((t.f_multi(&[1.0, 1.0]).unwrap() - 1.25).abs() < 1e-15);
        assert!((t.g_multi(&[0.3, 0.3]).unwrap() - t.g(0.3)).abs() < 1e-15);
        assert!(t.f_multi(&[1.0]).is_err());
        assert!(t.f_multi(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn predicates() {
        assert!(ThetaVector::ones(5).unwrap().is_log_convex());
        assert!(th(&[1.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]).is_log_convex());
        assert!(!th(&[1.0, 2.0, 1.0, 1.0]).is_log_convex());
        assert!(is_convex(&[1.0; 6]));
        // e0: second differences are (1, 0), so it is convex
        assert!(is_convex(&[1.0, 0.0, 0.0, 0.0]));
        assert!(!is_convex(&[0.0, 1.0, 0.0, 0.0]));
        assert!(is_convex(&[0.0, 0.0, 0.0, 1.0]));
        assert!(is_convex(&[0.0, 0.0, 0.0]));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let t = th(&[0.1, 1.0 / 3.0, 2.5e-7, 7.0]);
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.starts_with("[\""));
        let back: ThetaVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back.values(), t.values());
        let numeric: ThetaVector = serde_json::from_str("[1, 1, 1, 2]").unwrap();
        assert_eq!(numeric.values(), &[1.0, 1.0, 1.0, 2.0]);
        assert!(serde_json::from_str::<ThetaVector>("[\"1\", \"-1\", \"1\", \"1\"]").is_err());
    }
}
