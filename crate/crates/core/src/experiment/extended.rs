//! Double-double arithmetic and a loss evaluator built on it.
//!
//! Central differences at step 1e-6 lose about ten digits to cancellation.
//! Evaluating the loss to ~28 significant digits keeps the difference
//! quotient accurate to well below 1e-18, so the check measures the
//! backward pass rather than round-off. The forward pass here is written
//! with scalar loops and shares no code with `network`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::network::{Activation, ExpDnnParams, LossKind, NetworkConfig, PROBABILITY_CLAMP};
use crate::numerics::Matrix;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn mul_pow2(self, p: f64) -> Self {
        Dd {
            hi: self.hi * p,
            lo: self.lo * p,
        }
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        // x = k ln2 + r, |r| <= ln2 / 2; e^r computed from r / 2^10 and squared back
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::new(k)).mul_pow2(1.0 / 1024.0);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for n in 1..=20 {
            term = term * r / Dd::new(n as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        // split the power of two so neither factor overflows
        let half = (k / 2.0).trunc();
        sum.mul_pow2(2f64.powi(half as i32))
            .mul_pow2(2f64.powi((k - half) as i32))
    }

    pub fn ln(self) -> Self {
        // Newton on exp(y) = x, each step doubles the correct digits
        let mut y = Dd::new(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    pub fn tanh(self) -> Self {
        let t = (self.abs().mul_pow2(-2.0)).exp();
        let mag = (Dd::ONE - t) / (Dd::ONE + t);
        if self.hi < 0.0 {
            -mag
        } else {
            mag
        }
    }

    pub fn sigmoid(self) -> Self {
        Dd::ONE / (Dd::ONE + (-self).exp())
    }

    fn max(self, other: Dd) -> Dd {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Dd) -> Dd {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::new(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::new(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

fn activate(kind: Activation, z: &mut [Dd]) {
    match kind {
        Activation::Linear => {}
        Activation::Tanh => z.iter_mut().for_each(|v| *v = v.tanh()),
        Activation::Sigmoid => z.iter_mut().for_each(|v| *v = v.sigmoid()),
        Activation::Softmax => {
            let max = z.iter().copied().fold(Dd::new(f64::NEG_INFINITY), Dd::max);
            let mut total = Dd::ZERO;
            for v in z.iter_mut() {
                *v = (*v - max).exp();
                total = total + *v;
            }
            z.iter_mut().for_each(|v| *v = *v / total);
        }
    }
}

/// Loss of `params` with parameter `probe.0` (flat index) shifted by
/// exactly `probe.1`, evaluated in double-double.
fn loss_dd(
    params: &ExpDnnParams,
    net: &NetworkConfig,
    features: &Matrix,
    targets: &Matrix,
    probe: (usize, f64),
) -> Dd {
    let mut theta: Vec<Vec<Dd>> = params
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&v| Dd::new(v)).collect())
        .collect();
    let mut rest = probe.0;
    for block in theta.iter_mut() {
        if rest < block.len() {
            block[rest] = block[rest] + Dd::new(probe.1);
            break;
        }
        rest -= block.len();
    }

    let l = net.n_hidden();
    let explainable = &theta[0];
    let layer = |k: usize| (&theta[1 + 2 * k], &theta[2 + 2 * k]);
    let (out_w, out_b) = (&theta[1 + 2 * l], &theta[2 + 2 * l]);
    let lo = Dd::new(PROBABILITY_CLAMP);
    let hi = Dd::ONE - lo;

    let mut total = Dd::ZERO;
    for s in 0..features.rows() {
        let mut a: Vec<Dd> = (0..net.n_inputs)
            .map(|i| explainable[i] * Dd::new(features.get(s, i)))
            .collect();
        for k in 0..l {
            let (w, b) = layer(k);
            let fan_in = a.len();
            let mut z: Vec<Dd> = (0..net.hidden_sizes[k])
                .map(|j| {
                    let mut acc = b[j];
                    for i in 0..fan_in {
                        acc = acc + w[j * fan_in + i] * a[i];
                    }
                    acc
                })
                .collect();
            activate(net.hidden_activations[k], &mut z);
            a = z;
        }
        let fan_in = a.len();
        let mut y: Vec<Dd> = (0..net.n_outputs)
            .map(|j| {
                let mut acc = out_b[j];
                for i in 0..fan_in {
                    acc = acc + out_w[j * fan_in + i] * a[i];
                }
                acc
            })
            .collect();
        activate(net.output_activation, &mut y);

        for (j, yj) in y.into_iter().enumerate() {
            let t = Dd::new(targets.get(s, j));
            total = total
                + match net.loss {
                    LossKind::Mse => (yj - t) * (yj - t),
                    LossKind::BinaryCrossEntropy => {
                        let p = yj.max(lo).min(hi);
                        -(t * p.ln() + (Dd::ONE - t) * (Dd::ONE - p).ln())
                    }
                    LossKind::CategoricalCrossEntropy => -(t * yj.max(lo).min(hi).ln()),
                };
        }
    }
    let denom = match net.loss {
        LossKind::Mse | LossKind::BinaryCrossEntropy => (features.rows() * net.n_outputs) as f64,
        LossKind::CategoricalCrossEntropy => features.rows() as f64,
    };
    total / Dd::new(denom)
}

/// `(L(θ + step) - L(θ - step)) / 2 step` for one parameter, with both
/// losses kept in double-double until the subtraction.
pub(crate) fn central_difference(
    params: &ExpDnnParams,
    net: &NetworkConfig,
    features: &Matrix,
    targets: &Matrix,
    index: usize,
    step: f64,
) -> f64 {
    let up = loss_dd(params, net, features, targets, (index, step));
    let down = loss_dd(params, net, features, targets, (index, -step));
    ((up - down) / Dd::new(2.0 * step)).to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn arithmetic_beyond_f64() {
        let third = Dd::ONE / Dd::new(3.0);
        let back = third * Dd::new(3.0) - Dd::ONE;
        assert!(back.to_f64().abs() < 1e-31);
        let tiny = Dd::new(1.0) + Dd::new(1e-20);
        assert_eq!((tiny - Dd::ONE).to_f64(), 1e-20);
    }

    #[test]
    fn transcendental_functions() {
        for x in [-30.0, -1.5, -1e-8, 0.0, 0.3, 1.0, 12.0, 200.0] {
            assert!(close(Dd::new(x).exp(), f64::exp(x), 4e-16), "exp {x}");
            assert!(
                close(Dd::new(x).tanh(), f64::tanh(x), 4e-16) || x == 0.0,
                "tanh {x}"
            );
        }
        for x in [1e-7, 0.5, 1.0, 2.0, 1e5] {
            assert!(
                close(Dd::new(x).ln(), f64::ln(x), 4e-16) || x == 1.0,
                "ln {x}"
            );
        }
        // ln(exp(x)) recovers x far beyond f64 precision
        let x = Dd::new(0.7) + Dd::new(3e-25);
        assert!((x.exp().ln() - x).to_f64().abs() < 1e-28);
        // e = exp(1) to double-double accuracy
        let e = Dd::ONE.exp();
        assert_eq!(e.hi, std::f64::consts::E);
        assert!((e.lo - 1.445_646_891_729_250_2e-16).abs() < 1e-28);
    }
}
