//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::gaussian::ParamPoint;
use crate::graph::{MixedGraph, Vertex};

/// Indeterminates: `ω_tt` for a vertex and `λ_uv` for an edge `u -> v`.
/// `Omega` sorts before `Lambda`, which fixes the printed factor order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Omega(Vertex),
    Lambda(Vertex, Vertex),
}

impl Var {
    pub fn eval(self, p: &ParamPoint) -> f64 {
        match self {
            Var::Omega(t) => p.omega[(t, t)],
            Var::Lambda(u, v) => p.lambda[(u, v)],
        }
    }
}

/// Power product of variables, stored sorted with positive exponents.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(BTreeMap<Var, u32>);

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: Var) -> Self {
        Self(BTreeMap::from([(v, 1)]))
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0.get(&v).copied().unwrap_or(0)
    }

    pub fn factors(&self) -> impl Iterator<Item = (Var, u32)> + '_ {
        self.0.iter().map(|(&v, &e)| (v, e))
    }

    pub fn mul_var(&mut self, v: Var) {
        *self.0.entry(v).or_insert(0) += 1;
    }

    pub fn eval(&self, p: &ParamPoint) -> f64 {
        self.0.iter().map(|(v, &e)| v.eval(p).powi(e as i32)).product()
    }
}

impl Mul for &Monomial {
    type Output = Monomial;
    fn mul(self, rhs: &Monomial) -> Monomial {
        let mut out = self.clone();
        for (&v, &e) in &rhs.0 {
            *out.0.entry(v).or_insert(0) += e;
        }
        out
    }
}

/// Polynomial in [`Var`]s. Zero coefficients are never stored, so derived
/// equality is equality of polynomials.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparsePoly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl SparsePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_monomial(Monomial::one())
    }

    pub fn var(v: Var) -> Self {
        Self::from_monomial(Monomial::var(v))
    }

    pub fn omega(t: Vertex) -> Self {
        Self::var(Var::Omega(t))
    }

    pub fn lambda(u: Vertex, v: Vertex) -> Self {
        Self::var(Var::Lambda(u, v))
    }

    pub fn from_monomial(m: Monomial) -> Self {
        Self {
            terms: BTreeMap::from([(m, BigRational::one())]),
        }
    }

    pub fn constant(c: i64) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), BigRational::from_integer(BigInt::from(c)));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn eval(&self, p: &ParamPoint) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| c.to_f64().unwrap_or(f64::NAN) * m.eval(p))
            .sum()
    }

    /// Printed form with variables named by vertex labels, e.g.
    /// `w55*l53*l54`. Two-character labels are joined directly when both
    /// labels are single characters and bracketed otherwise.
    pub fn display(&self, g: &MixedGraph) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let name = |v: Var| -> String {
            let (head, a, b) = match v {
                Var::Omega(t) => ('w', t, t),
                Var::Lambda(u, w) => ('l', u, w),
            };
            let (la, lb) = (g.label(a), g.label(b));
            if la.chars().count() == 1 && lb.chars().count() == 1 {
                format!("{head}{la}{lb}")
            } else {
                format!("{head}[{la},{lb}]")
            }
        };
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let factors: Vec<String> = m
                .factors()
                .map(|(v, e)| if e == 1 { name(v) } else { format!("{}^{e}", name(v)) })
                .collect();
            if factors.is_empty() {
                let _ = write!(out, "{abs}");
            } else {
                if !abs.is_one() {
                    let _ = write!(out, "{abs}*");
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }
}

impl Add for &SparsePoly {
    type Output = SparsePoly;
    fn add(self, rhs: &SparsePoly) -> SparsePoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Neg for &SparsePoly {
    type Output = SparsePoly;
    fn neg(self) -> SparsePoly {
        SparsePoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Sub for &SparsePoly {
    type Output = SparsePoly;
    fn sub(self, rhs: &SparsePoly) -> SparsePoly {
        self + &(-rhs)
    }
}

impl Mul for &SparsePoly {
    type Output = SparsePoly;
    fn mul(self, rhs: &SparsePoly) -> SparsePoly {
        let mut out = SparsePoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma * mb, ca * cb);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for SparsePoly {
            type Output = SparsePoly;
            fn $f(self, rhs: SparsePoly) -> SparsePoly {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl std::iter::Sum for SparsePoly {
    fn sum<I: Iterator<Item = SparsePoly>>(iter: I) -> SparsePoly {
        iter.fold(SparsePoly::zero(), |a, b| &a + &b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn g() -> MixedGraph {
        MixedGraph::from_labels(&["3", "4", "5"], &[("5", "3"), ("5", "4")], &[]).unwrap()
    }

    #[test]
    fn printing_order() {
        let p = &(&SparsePoly::lambda(2, 0) * &SparsePoly::lambda(2, 1)) * &SparsePoly::omega(2);
        assert_eq!(p.display(&g()), "w55*l53*l54");
        let q = &p + &SparsePoly::omega(0);
        assert_eq!(q.display(&g()), "w33 + w55*l53*l54");
        let sq = &SparsePoly::lambda(2, 0) * &SparsePoly::lambda(2, 0);
        assert_eq!((&sq - &SparsePoly::constant(2)).display(&g()), "-2 + l53^2");
        assert_eq!(SparsePoly::zero().display(&g()), "0");
    }

    #[test]
    fn cancellation_leaves_no_terms() {
        let a = &SparsePoly::omega(0) + &SparsePoly::lambda(2, 1);
        assert!((&a - &a).is_zero());
        assert_eq!(&a - &a, SparsePoly::zero());
    }

    #[test]
    fn ring_laws_on_samples() {
        let a = &SparsePoly::omega(0) + &SparsePoly::constant(3);
        let b = &SparsePoly::lambda(2, 1) - &SparsePoly::omega(1);
        let c = &SparsePoly::lambda(2, 0) * &SparsePoly::lambda(2, 0);
        assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        assert_eq!(&a * &b, &b * &a);
        assert_eq!(&a * &SparsePoly::one(), a);
    }

    #[test]
    fn evaluation() {
        let mut lambda = DMatrix::zeros(3, 3);
        lambda[(2, 0)] = 2.0;
        lambda[(2, 1)] = -0.5;
        let omega = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[1.0, 1.0, 3.0]));
        let p = ParamPoint::new(lambda, omega);
        let poly = &(&SparsePoly::omega(2) * &SparsePoly::lambda(2, 0)) * &SparsePoly::lambda(2, 1);
        assert_eq!(poly.eval(&p), -3.0);
        assert_eq!((&poly + &SparsePoly::constant(4)).eval(&p), 1.0);
    }
}
