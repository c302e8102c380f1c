//! Complex DFT: iterative radix-2 for power-of-two lengths, Bluestein's
//! chirp-z reduction otherwise, and an axis-by-axis multidimensional driver.
//!
//! Twiddles are computed from exact integer angle indices, never by
//! recurrence, so transform error stays near `log2(len) * eps`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

/// Sign of the exponent: `Forward` uses `e^{-2 pi i jk/N}`, `Inverse` uses
/// `e^{+2 pi i jk/N}`. Neither direction is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Plan {
    len: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Trivial,
    Radix2 {
        twiddles: Vec<Complex64>,
        bitrev: Vec<usize>,
    },
    Bluestein {
        chirp: Vec<Complex64>,
        kernel: Vec<Complex64>,
        forward: Box<Plan>,
        inverse: Box<Plan>,
    },
}

impl Plan {
    pub fn new(len: usize, dir: Direction) -> Plan {
        assert!(len > 0, "transform length must be positive");
        if len == 1 {
            return Plan {
                len,
                kind: Kind::Trivial,
            };
        }
        if len.is_power_of_two() {
            let sign = dir.sign();
            let twiddles = (0..len / 2)
                .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / len as f64))
                .collect();
            let bits = len.trailing_zeros();
            let bitrev = (0..len).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
            return Plan {
                len,
                kind: Kind::Radix2 { twiddles, bitrev },
            };
        }
        let sign = dir.sign();
        let modulus = 2 * len as u128;
        // c_m = exp(sign * i pi m^2 / N), with m^2 reduced mod 2N.
        let chirp: Vec<Complex64> = (0..len)
            .map(|m| {
                let r = (m as u128 * m as u128) % modulus;
                Complex64::from_polar(1.0, sign * PI * r as f64 / len as f64)
            })
            .collect();
        let conv_len = (2 * len - 1).next_power_of_two();
        let forward = Plan::new(conv_len, Direction::Forward);
        let inverse = Plan::new(conv_len, Direction::Inverse);
        let mut kernel = vec![Complex64::new(0.0, 0.0); conv_len];
        kernel[0] = chirp[0].conj();
        for m in 1..len {
            kernel[m] = chirp[m].conj();
            kernel[conv_len - m] = chirp[m].conj();
        }
        forward.process(&mut kernel);
        Plan {
            len,
            kind: Kind::Bluestein {
                chirp,
                kernel,
                forward: Box::new(forward),
                inverse: Box::new(inverse),
            },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place transform of `buf` (length must equal the plan length).
    pub fn process(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        match &self.kind {
            Kind::Trivial => {}
            Kind::Radix2 { twiddles, bitrev } => {
                for (i, &j) in bitrev.iter().enumerate() {
                    if i < j {
                        buf.swap(i, j);
                    }
                }
                let n = self.len;
                let mut half = 1;
                while half < n {
                    let step = n / (2 * half);
                    for start in (0..n).step_by(2 * half) {
                        for k in 0..half {
                            let w = twiddles[k * step];
                            let u = buf[start + k];
                            let v = buf[start + k + half] * w;
                            buf[start + k] = u + v;
                            buf[start + k + half] = u - v;
                        }
                    }
                    half *= 2;
                }
            }
            Kind::Bluestein {
                chirp,
                kernel,
                forward,
                inverse,
            } => {
                let conv_len = kernel.len();
                let mut work = vec![Complex64::new(0.0, 0.0); conv_len];
                for j in 0..self.len {
                    work[j] = buf[j] * chirp[j];
                }
                forward.process(&mut work);
                for (w, k) in work.iter_mut().zip(kernel) {
                    *w *= k;
                }
                inverse.process(&mut work);
                let scale = 1.0 / conv_len as f64;
                for k in 0..self.len {
                    buf[k] = work[k] * chirp[k] * scale;
                }
            }
        }
    }
}

/// Unnormalized multidimensional transform of a row-major array with the
/// given axis lengths (last axis contiguous).
pub fn transform_nd(data: &mut [Complex64], dims: &[usize], dir: Direction) {
    let total: usize = dims.iter().product();
    assert_eq!(data.len(), total);
    for axis in 0..dims.len() {
        let len = dims[axis];
        if len == 1 {
            continue;
        }
        let plan = Plan::new(len, dir);
        let stride: usize = dims[axis + 1..].iter().product();
        let block = len * stride;
        data.par_chunks_mut(block).for_each(|blk| {
            if stride == 1 {
                plan.process(blk);
                return;
            }
            let lines: Vec<Vec<Complex64>> = (0..stride)
                .into_par_iter()
                .map(|inner| {
                    let mut line: Vec<Complex64> = (0..len).map(|k| blk[inner + k * stride]).collect();
                    plan.process(&mut line);
                    line
                })
                .collect();
            for (inner, line) in lines.into_iter().enumerate() {
                for (k, v) in line.into_iter().enumerate() {
                    blk[inner + k * stride] = v;
                }
            }
        });
    }
}
