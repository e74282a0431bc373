//! Seeded samplers for charts, homogeneous expressions and vector fields.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cartan::VField;
use crate::chart::{Chart, Parity};
use crate::error::Result;
use crate::expr::Expr;
use crate::scalar::Scalar;

/// Deterministic source of random test data.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Sampler {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Uniform in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.gen_bool(0.5)
    }

    /// Nonzero rational with small numerator and denominator.
    pub fn coefficient(&mut self) -> Scalar {
        let mut n: i64 = self.rng.gen_range(-4..=3);
        if n >= 0 {
            n += 1;
        }
        Scalar::ratio(n, self.rng.gen_range(1..=3))
    }

    /// Nonzero Gaussian rational.
    pub fn gaussian(&mut self) -> Scalar {
        let re = self.coefficient();
        if self.coin() {
            return re;
        }
        let im = self.coefficient();
        if self.coin() {
            &Scalar::i() * &im
        } else {
            &re + &(&Scalar::i() * &im)
        }
    }

    /// Base chart with `x1…` even and `xi1…` odd generators, at least one in total.
    pub fn chart(&mut self, max_even: usize, max_odd: usize) -> Chart {
        loop {
            let m = self.range(0, max_even);
            let n = self.range(0, max_odd);
            if m + n == 0 {
                continue;
            }
            let xs: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
            let xis: Vec<String> = (1..=n).map(|i| format!("xi{i}")).collect();
            return Chart::new(&xs, &xis, &[] as &[String]).expect("fresh names");
        }
    }

    /// A monomial in `gens` of the given parity and total degree at most
    /// `max_deg`, times a random coefficient; zero when no such monomial exists.
    pub fn monomial(&mut self, chart: &Chart, gens: &[u16], parity: Parity, max_deg: u32) -> Expr {
        let (odd, even): (Vec<u16>, Vec<u16>) =
            gens.iter().partition(|g| chart.gen_parity(**g).is_odd());
        let top = odd.len().min(max_deg as usize);
        let ks: Vec<usize> = (0..=top)
            .filter(|k| k % 2 == parity.bit() as usize)
            .collect();
        let Some(&k) = ks.choose(&mut self.rng) else {
            return Expr::zero(chart);
        };
        let mut picked = odd.clone();
        picked.shuffle(&mut self.rng);
        picked.truncate(k);
        picked.sort_unstable();
        let rest = max_deg as usize - k;
        let e = if even.is_empty() {
            0
        } else {
            self.range(0, rest)
        };
        let mut out = Expr::constant(chart, self.coefficient());
        for _ in 0..e {
            let g = *even.choose(&mut self.rng).unwrap();
            out = &out * &Expr::generator(chart, g);
        }
        if self.coin() {
            picked.reverse();
        }
        for g in picked {
            out = &out * &Expr::generator(chart, g);
        }
        out
    }

    /// Sum of up to `max_terms` monomials of one parity.
    pub fn homogeneous(
        &mut self,
        chart: &Chart,
        gens: &[u16],
        parity: Parity,
        max_deg: u32,
        max_terms: usize,
    ) -> Expr {
        let n = self.range(1, max_terms);
        let mut out = Expr::zero(chart);
        for _ in 0..n {
            out = &out + &self.monomial(chart, gens, parity, max_deg);
        }
        out
    }

    /// Like [`Sampler::homogeneous`] over every generator, retried until nonzero
    /// when that is possible.
    pub fn nonzero(
        &mut self,
        chart: &Chart,
        parity: Parity,
        max_deg: u32,
        max_terms: usize,
    ) -> Expr {
        let gens: Vec<u16> = (0..chart.n_generators() as u16).collect();
        for _ in 0..32 {
            let e = self.homogeneous(chart, &gens, parity, max_deg, max_terms);
            if !e.is_zero() {
                return e;
            }
        }
        Expr::zero(chart)
    }

    /// Homogeneous vector field with polynomial coefficients in all generators.
    pub fn vfield(
        &mut self,
        chart: &Chart,
        parity: Parity,
        max_deg: u32,
        max_terms: usize,
    ) -> Result<VField> {
        let gens: Vec<u16> = (0..chart.n_generators() as u16).collect();
        let coeffs = gens
            .iter()
            .map(|&a| {
                let p = Parity::from_bit(parity.bit() + chart.gen_parity(a).bit());
                if self.range(0, 3) == 0 {
                    Expr::zero(chart)
                } else {
                    self.homogeneous(chart, &gens, p, max_deg, max_terms)
                }
            })
            .collect();
        VField::new(chart, coeffs, parity)
    }

    pub fn parity(&mut self) -> Parity {
        Parity::from_bit(self.coin() as u32)
    }
}
