//! Gauss-Legendre rules and panel integration.

use std::ops::{Add, Mul};

use num_traits::Zero;

use crate::num::Real;

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T: Real> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Nodes are Newton-refined roots of `P_n`, computed in `f64`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `int_a^b f(x) dx`
    pub fn integrate<V, F>(&self, a: T, b: T, mut f: F) -> V
    where
        V: Zero + Add<Output = V> + Mul<T, Output = V>,
        F: FnMut(T) -> V,
    {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(V::zero(), |acc, (&x, &w)| acc + f(mid + half * x) * (w * half))
    }

    /// `int_a^b f(x) dx` after the substitution `x = (a+b)/2 - (b-a)/2 cos(theta)`.
    ///
    /// Integrands behaving like `sqrt(x - a)` or `1 / sqrt(x - a)` at either end
    /// become smooth in `theta`, so the rule keeps spectral convergence on
    /// panels bounded by thresholds.
    pub fn integrate_cosine_mapped<V, F>(&self, a: T, b: T, mut f: F) -> V
    where
        V: Zero + Add<Output = V> + Mul<T, Output = V>,
        F: FnMut(T) -> V,
    {
        if b <= a {
            return V::zero();
        }
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let pi = T::PI();
        let tscale = pi * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(V::zero(), |acc, (&u, &w)| {
                let theta = tscale * (u + T::one());
                let x = mid - half * theta.cos();
                acc + f(x) * (w * tscale * half * theta.sin())
            })
    }

    /// Sum of cosine-mapped integrals over consecutive panels `[b_i, b_{i+1}]`.
    pub fn integrate_panels<V, F>(&self, breaks: &[T], mut f: F) -> V
    where
        V: Zero + Add<Output = V> + Mul<T, Output = V>,
        F: FnMut(T) -> V,
    {
        breaks
            .windows(2)
            .fold(V::zero(), |acc, w| acc + self.integrate_cosine_mapped(w[0], w[1], &mut f))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Sorted, deduplicated breakpoints within `[lo, hi]`, always including both ends.
pub(crate) fn panel_breaks<T: Real>(lo: T, hi: T, interior: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut b = vec![lo];
    let span = (hi - lo).abs().max(T::one());
    let eps = T::epsilon() * T::lit(16.0) * span;
    let mut inner: Vec<T> = interior
        .into_iter()
        .filter(|&x| x > lo + eps && x < hi - eps)
        .collect();
    inner.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    for x in inner {
        if x - *b.last().expect("non-empty") > eps {
            b.push(x);
        }
    }
    b.push(hi);
    b
}
