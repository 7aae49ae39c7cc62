//! Black-box access to the objective with exact accounting of total
//! queries and parallel depth.
//!
//! Every evaluation goes through an [`OracleHandle`], which owns the
//! [`QueryLedger`]. A batch of `k` simultaneous queries adds `k` to the
//! query counter but only 1 to the round counter, which is what separates
//! low-depth strategies from serial ones.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::report::LedgerSnapshot;

/// Step used by the central finite-difference fallback gradient. Adequate
/// for 1-smooth functions at the tolerances this crate targets (>= 1e-6).
pub const FD_STEP: f64 = 1e-6;

/// A function on `[0,1]^d` whose gradient is Lipschitz with a certified
/// constant. Catalog entries provide analytic gradients; `gradient` may
/// return `None`, in which case the oracle falls back to central finite
/// differences and bills the extra value queries.
pub trait SmoothFunction: Send + Sync {
    fn dimension(&self) -> usize;
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Option<Vec<f64>>;
    /// Certified Lipschitz constant of the gradient over the cube.
    fn smoothness_bound(&self) -> f64;
}

/// Monotone counters for total work and rounds of interaction. Increments
/// are atomic so batched evaluations may fan out to worker threads without
/// losing counts.
#[derive(Debug, Default)]
pub struct QueryLedger {
    value_queries: AtomicU64,
    gradient_queries: AtomicU64,
    depth_rounds: AtomicU64,
}

impl QueryLedger {
    pub fn value_queries(&self) -> u64 {
        self.value_queries.load(Ordering::Relaxed)
    }

    pub fn gradient_queries(&self) -> u64 {
        self.gradient_queries.load(Ordering::Relaxed)
    }

    pub fn depth_rounds(&self) -> u64 {
        self.depth_rounds.load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            value_queries: self.value_queries(),
            gradient_queries: self.gradient_queries(),
            depth_rounds: self.depth_rounds(),
        }
    }

    fn charge(&self, values: u64, gradients: u64) {
        self.value_queries.fetch_add(values, Ordering::Relaxed);
        self.gradient_queries.fetch_add(gradients, Ordering::Relaxed);
        self.depth_rounds.fetch_add(1, Ordering::Relaxed);
    }
}

/// Clamp a raw gradient at the active box constraints so that infeasible
/// descent directions are zeroed: at `x_i = 0` only the negative part of
/// the partial derivative survives, at `x_i = 1` only the positive part.
/// With this orientation the constrained flow `dx/dt = -g/|g|` never
/// leaves the cube and decreases `f` at unit rate while `|g| > 0`.
pub fn clamp_gradient(x: &Point, grad: &[f64]) -> Vec<f64> {
    x.coords()
        .iter()
        .zip(grad)
        .map(|(&c, &g)| {
            if c == 0.0 {
                g.min(0.0)
            } else if c == 1.0 {
                g.max(0.0)
            } else {
                g
            }
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Black-box function access; all queries are billed to the ledger.
pub struct OracleHandle {
    function: Box<dyn SmoothFunction>,
    ledger: QueryLedger,
}

impl OracleHandle {
    pub fn new(function: Box<dyn SmoothFunction>) -> Self {
        Self {
            function,
            ledger: QueryLedger::default(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.function.dimension()
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    /// Direct access to the underlying function, bypassing the ledger.
    /// Only verification and test oracles may use this.
    pub fn function(&self) -> &dyn SmoothFunction {
        self.function.as_ref()
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// One value query: one unit of work, one round.
    pub fn query(&self, x: &Point) -> Result<f64> {
        self.check_dim(x)?;
        self.ledger.charge(1, 0);
        Ok(self.function.value(x))
    }

    /// Evaluate all points in one round; values come back in input order.
    pub fn batch_query(&self, xs: &[Point]) -> Result<Vec<f64>> {
        if xs.is_empty() {
            return Err(Error::EmptyBatch);
        }
        for x in xs {
            self.check_dim(x)?;
        }
        self.ledger.charge(xs.len() as u64, 0);
        Ok(xs.iter().map(|x| self.function.value(x)).collect())
    }

    /// The projected gradient of the introduction: the raw gradient with
    /// components clamped at active constraints. Costs one gradient query
    /// when the function carries an analytic gradient, otherwise `2d`
    /// value queries (central differences, issued as one round).
    pub fn projected_gradient(&self, x: &Point) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        match self.function.gradient(x) {
            Some(raw) => {
                self.ledger.charge(0, 1);
                Ok(clamp_gradient(x, &raw))
            }
            None => {
                self.ledger.charge(2 * self.dimension() as u64, 0);
                let raw = fd_gradient(self.function.as_ref(), x);
                Ok(clamp_gradient(x, &raw))
            }
        }
    }

    /// Projected gradients over an arbitrarily large point stream, billed
    /// as one parallel round, folded without materializing the batch.
    /// This is what keeps exhaustive grid search at constant depth
    /// without holding the whole grid in memory.
    pub fn fold_projected_gradients<T>(
        &self,
        points: impl Iterator<Item = Point>,
        init: T,
        mut fold: impl FnMut(T, Point, Vec<f64>) -> T,
    ) -> Result<T> {
        let mut acc = init;
        let mut items = 0u64;
        let mut value_cost = 0u64;
        let mut gradient_cost = 0u64;
        for p in points {
            self.check_dim(&p)?;
            let raw = match self.function.gradient(&p) {
                Some(g) => {
                    gradient_cost += 1;
                    g
                }
                None => {
                    value_cost += 2 * self.dimension() as u64;
                    fd_gradient(self.function.as_ref(), &p)
                }
            };
            let g = clamp_gradient(&p, &raw);
            acc = fold(acc, p, g);
            items += 1;
        }
        if items == 0 {
            return Err(Error::EmptyBatch);
        }
        self.ledger.charge(value_cost, gradient_cost);
        Ok(acc)
    }

    /// Projected gradients at many points in one round.
    pub fn batch_projected_gradient(&self, xs: &[Point]) -> Result<Vec<Vec<f64>>> {
        if xs.is_empty() {
            return Err(Error::EmptyBatch);
        }
        for x in xs {
            self.check_dim(x)?;
        }
        let has_analytic = self.function.gradient(&xs[0]).is_some();
        if has_analytic {
            self.ledger.charge(0, xs.len() as u64);
        } else {
            self.ledger
                .charge(2 * self.dimension() as u64 * xs.len() as u64, 0);
        }
        Ok(xs
            .iter()
            .map(|x| {
                let raw = self
                    .function
                    .gradient(x)
                    .unwrap_or_else(|| fd_gradient(self.function.as_ref(), x));
                clamp_gradient(x, &raw)
            })
            .collect())
    }
}

/// Central finite differences with boundary-aware clamping of the stencil
/// points (the divisor is the actual spread, so accuracy is kept at the
/// walls).
pub fn fd_gradient(f: &dyn SmoothFunction, x: &Point) -> Vec<f64> {
    let d = x.dim();
    let mut grad = vec![0.0; d];
    for i in 0..d {
        let c = x.coords()[i];
        let up = (c + FD_STEP).min(1.0);
        let down = (c - FD_STEP).max(0.0);
        let mut plus = x.coords().to_vec();
        plus[i] = up;
        let mut minus = x.coords().to_vec();
        minus[i] = down;
        grad[i] = (f.value(&Point::clamped(plus)) - f.value(&Point::clamped(minus))) / (up - down);
    }
    grad
}

/// Rescale an `L`-smooth function by `1/L` so downstream code can assume
/// the gradient is 1-Lipschitz. An ε-stationary point of the wrapper is an
/// `L·ε`-stationary point of the original.
pub fn normalize(f: Box<dyn SmoothFunction>) -> Result<Box<dyn SmoothFunction>> {
    let bound = f.smoothness_bound();
    if !bound.is_finite() || bound <= 0.0 {
        return Err(Error::BadSmoothnessBound(bound));
    }
    Ok(Box::new(Normalized {
        scale: 1.0 / bound,
        inner: f,
    }))
}

struct Normalized {
    inner: Box<dyn SmoothFunction>,
    scale: f64,
}

impl SmoothFunction for Normalized {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn value(&self, x: &Point) -> f64 {
        self.scale * self.inner.value(x)
    }

    fn gradient(&self, x: &Point) -> Option<Vec<f64>> {
        self.inner
            .gradient(x)
            .map(|g| g.iter().map(|gi| gi * self.scale).collect())
    }

    fn smoothness_bound(&self) -> f64 {
        1.0
    }
}
