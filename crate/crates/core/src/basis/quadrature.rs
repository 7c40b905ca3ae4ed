use crate::basis::legendre::legendre_with_derivative;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `sum_i w_i g(u_i)`.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut g: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * g(u))
            .sum()
    }
}

/// Gauss-Legendre rule with `order` nodes, exact for polynomials up to
/// degree `2 * order - 1`.
///
/// Nodes are the roots of `P_order`, found by Newton iteration from the
/// Tricomi initial guesses, returned in increasing order.
pub fn gauss_legendre<T: Real>(order: usize) -> Result<QuadratureRule<T>> {
    if order == 0 {
        return Err(Error::invalid("order", "quadrature order must be at least 1"));
    }
    let n = from_usize::<T>(order);
    let half = order / 2;
    let mut nodes = vec![T::zero(); order];
    let mut weights = vec![T::zero(); order];

    // Compute the positive roots; mirror for the negative half.
    for i in 0..half {
        let guess = T::PI() * (from_usize::<T>(i) + lit(0.75)) / (n + lit(0.5));
        let mut x = guess.cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(order, x);
            let dx = p / dp;
            x = x - dx;
            if dx.abs() <= T::epsilon() * lit(4.0) {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(order, x);
        let w = lit::<T>(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[order - 1 - i] = x;
        nodes[i] = -x;
        weights[order - 1 - i] = w;
        weights[i] = w;
    }
    if order % 2 == 1 {
        let (_, dp) = legendre_with_derivative(order, T::zero());
        nodes[half] = T::zero();
        weights[half] = lit::<T>(2.0) / (dp * dp);
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Default order for integrating a polynomial of degree `degree`:
/// `degree + 8`, i.e. `2N + 8` for the degree-`2N` moment integrands.
pub fn default_order_for_degree(degree: usize) -> usize {
    degree + 8
}
